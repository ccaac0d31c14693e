"""Best-bound branch-and-bound with full tree recording."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .branching import SB, BranchingError, Node, PolicySpec, choose
from .lp import LpOutcome, LpStatus, Relaxation, UnboundedLpError
from .model import Cut, Fixings, Instance, ModelError, enumerate_binary
from .numeric import NEG_INF, ext, ext_str

BRANCHED = "Branched"
PRUNED_INFEASIBLE = "PrunedInfeasible"
PRUNED_BOUND = "PrunedByBound"
PRUNED_INTEGRAL = "PrunedIntegral"
OPEN = "Open"

# sentinel: warm start at the exact optimum found by enumeration
WARM_OPT = "opt"


@dataclass
class NodeRecord:
    id: int
    parent: Optional[int]
    branch_var: Optional[int]
    branch_value: Optional[int]
    depth: int
    fixings: Fixings
    lp: LpOutcome
    status: str = OPEN
    children: list = field(default_factory=list)
    branched_on: Optional[int] = None
    scores: Optional[object] = None

    @property
    def value(self):
        return self.lp.value

    def to_json(self, labels) -> dict:
        d = {
            "id": self.id,
            "parent": self.parent,
            "branch": None if self.branch_var is None else
            {"var": self.branch_var, "label": labels[self.branch_var], "value": self.branch_value},
            "depth": self.depth,
            "fixings": [[j, v] for j, v in self.fixings],
            "lp": {"status": self.lp.status.value, "value": ext_str(self.lp.value)},
            "status": self.status,
            "children": list(self.children),
            "branchedOn": self.branched_on,
        }
        if self.lp.vertex is not None:
            d["lp"]["vertex"] = {str(j): str(v) for j, v in enumerate(self.lp.vertex) if v != 0}
        if self.scores is not None:
            d["scores"] = self.scores.to_json(labels)
        return d


@dataclass
class TreeRecord:
    instance: Instance
    nodes: list
    processing_order: list
    incumbent_trace: list  # (node id or None for the warm start, value)
    opt_value: object
    policy: PolicySpec
    cut_set_id: str = ""
    cuts: tuple = ()
    warm_start: object = None

    @property
    def tree_size(self) -> int:
        return len(self.nodes)

    def internal_nodes(self) -> list:
        return [nd for nd in self.nodes if nd.status == BRANCHED]

    def to_json(self) -> dict:
        inst = self.instance
        p = self.policy
        return {
            "meta": {
                "instance": inst.name,
                "family": inst.family,
                "params": dict(inst.params),
                "policy": p.to_json(),
                "cuts": self.cut_set_id,
                "cutIds": [c.id for c in self.cuts],
                "eta": str(p.eta),
                "epsilon": None if p.epsilon is None else str(p.epsilon),
                "kappa": None if p.kappa is None else str(p.kappa),
                "k": p.k,
                "incumbent": None if self.warm_start is None else ext_str(self.warm_start),
            },
            "treeSize": self.tree_size,
            "optValue": ext_str(self.opt_value),
            "nodes": [nd.to_json(inst.labels) for nd in self.nodes],
            "processingOrder": list(self.processing_order),
            "incumbentTrace": [[nid, ext_str(v)] for nid, v in self.incumbent_trace],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False) + "\n"


def run_bnb(instance: Instance, cuts: Sequence[Cut] = (), policy: PolicySpec = SB,
            incumbent=WARM_OPT, *, cut_set_id: str = "", record_scores: bool = False,
            relaxation: Optional[Relaxation] = None, max_nodes: int = 2_000_000) -> TreeRecord:
    """Run best-bound B&B and return the full tree.

    ``incumbent`` is a warm-start value, ``None`` for no warm start, or
    ``"opt"`` for the enumerated optimum.  Node LPs are solved when a node is
    created; pruning is decided when it is popped (infeasible, then bound with
    ``value <= incumbent``, then integral).
    """
    cuts = tuple(cuts)
    if not instance.is_binary_branchable():
        raise ModelError("branch-and-bound needs binary integer variables")
    rel = relaxation or Relaxation(instance, cuts)
    if incumbent == WARM_OPT:
        incumbent, _ = enumerate_binary(instance, cuts, max_points=1)
        if incumbent == NEG_INF:
            incumbent = None
    warm = None if incumbent is None else ext(incumbent)
    best = NEG_INF if warm is None else warm
    trace = [] if warm is None else [(None, warm)]

    nodes: list[NodeRecord] = []
    heap: list = []
    order: list[int] = []

    def create(parent, var, val, fixings):
        out = rel.solve(fixings)
        if out.status is LpStatus.UNBOUNDED:
            raise UnboundedLpError("node LP is unbounded")
        nid = len(nodes)
        depth = 0 if parent is None else nodes[parent].depth + 1
        nodes.append(NodeRecord(nid, parent, var, val, depth, fixings, out))
        heapq.heappush(heap, (-out.value, nid))
        if len(nodes) > max_nodes:
            raise RuntimeError("node limit exceeded")
        return nid

    create(None, None, None, Fixings())
    while heap:
        _, nid = heapq.heappop(heap)
        nd = nodes[nid]
        order.append(nid)
        if nd.lp.infeasible:
            nd.status = PRUNED_INFEASIBLE
            continue
        if nd.value <= best:
            nd.status = PRUNED_BOUND
            continue
        view = Node(rel, nd.fixings, nd.lp, nid)
        if not view.candidates():
            nd.status = PRUNED_INTEGRAL
            best = nd.value
            trace.append((nid, best))
            continue
        if record_scores:
            j, nd.scores = choose(policy, view, report=True)
        else:
            j = choose(policy, view)
        nd.status = BRANCHED
        nd.branched_on = j
        for v in (0, 1):
            nd.children.append(create(nid, j, v, nd.fixings.with_(j, v)))

    return TreeRecord(instance, nodes, order, trace, best, policy, cut_set_id, cuts, warm)


def node_view(tree: TreeRecord, nd: NodeRecord, relaxation: Optional[Relaxation] = None) -> Node:
    rel = relaxation or Relaxation(tree.instance, tree.cuts)
    return Node(rel, nd.fixings, nd.lp, nd.id)


ALONG_EXPERT = "AlongExpertRun"
ALONG_CANDIDATE = "AlongCandidateRun"


def count_deviations(instance: Instance, cuts: Sequence[Cut], expert: PolicySpec, candidate: PolicySpec,
                     mode: str = ALONG_EXPERT, incumbent=WARM_OPT) -> int:
    """Internal nodes of one policy's run where the other policy branches differently."""
    if mode not in (ALONG_EXPERT, ALONG_CANDIDATE):
        raise ValueError(f"unknown deviation mode {mode!r}")
    rel = Relaxation(instance, cuts)
    runner, other = (expert, candidate) if mode == ALONG_EXPERT else (candidate, expert)
    tree = run_bnb(instance, cuts, runner, incumbent, relaxation=rel)
    count = 0
    for nd in tree.internal_nodes():
        try:
            j = choose(other, Node(rel, nd.fixings, nd.lp, nd.id))
        except BranchingError:
            # the other policy cannot act here (e.g. its override is not fractional)
            j = None
        if j != nd.branched_on:
            count += 1
    return count


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(tree: TreeRecord) -> str:
    """Deterministic Graphviz digraph of the tree."""
    labels = tree.instance.labels
    out = [f'digraph "{_dot_escape(tree.instance.name)}" {{', "  node [shape=box, fontsize=10];"]
    for nd in tree.nodes:
        lit = "root" if nd.branch_var is None else f"{labels[nd.branch_var]}={nd.branch_value}"
        text = "\\n".join(_dot_escape(t) for t in (f"#{nd.id} {lit}", f"z={ext_str(nd.value)}", nd.status))
        style = ""
        if nd.status == PRUNED_INFEASIBLE:
            style = ", style=filled, fillcolor=gray90"
        elif nd.status == PRUNED_INTEGRAL:
            style = ", peripheries=2"
        out.append(f'  n{nd.id} [label="{text}"{style}];')
    for nd in tree.nodes:
        for c in nd.children:
            ch = tree.nodes[c]
            out.append(f'  n{nd.id} -> n{c} [label="{_dot_escape(labels[ch.branch_var])}={ch.branch_value}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def tree_from_json(d: dict, instance: Instance, cuts: Sequence[Cut] = ()) -> TreeRecord:
    """Rebuild a TreeRecord (for DOT export) from its JSON form and instance."""
    nodes = []
    for nj in d["nodes"]:
        lpj = nj["lp"]
        status = LpStatus(lpj["status"])
        vertex = None
        if "vertex" in lpj:
            v = [Fraction(0)] * instance.num_vars
            for k, val in lpj["vertex"].items():
                v[int(k)] = Fraction(val)
            vertex = tuple(v)
        br = nj.get("branch")
        nodes.append(NodeRecord(
            id=nj["id"], parent=nj["parent"],
            branch_var=None if br is None else br["var"],
            branch_value=None if br is None else br["value"],
            depth=nj["depth"], fixings=Fixings([tuple(p) for p in nj["fixings"]]),
            lp=LpOutcome(status, ext(lpj["value"]), vertex),
            status=nj["status"], children=list(nj["children"]), branched_on=nj.get("branchedOn"),
        ))
    meta = d["meta"]
    warm = meta.get("incumbent")
    return TreeRecord(
        instance, nodes, list(d["processingOrder"]),
        [(nid, ext(v)) for nid, v in d["incumbentTrace"]], ext(d["optValue"]),
        PolicySpec.from_json(meta["policy"]), meta.get("cuts", ""), tuple(cuts),
        None if warm is None else ext(warm),
    )


def validate_tree(tree: TreeRecord) -> list[str]:
    """Structural and best-bound checks on a finished tree; returns problems found."""
    problems = []
    nodes = tree.nodes
    if not nodes or nodes[0].parent is not None:
        return ["missing root"]
    for nd in nodes:
        if nd.status == OPEN:
            problems.append(f"node {nd.id} left open")
        if nd.depth != len(nd.fixings):
            problems.append(f"node {nd.id}: depth {nd.depth} but {len(nd.fixings)} fixings")
        if nd.status == BRANCHED:
            if len(nd.children) != 2:
                problems.append(f"node {nd.id}: {len(nd.children)} children")
                continue
            for v, c in zip((0, 1), nd.children):
                ch = nodes[c]
                if ch.parent != nd.id or ch.branch_var != nd.branched_on or ch.branch_value != v:
                    problems.append(f"node {c}: bad link to parent {nd.id}")
                if ch.fixings != nd.fixings.with_(nd.branched_on, v):
                    problems.append(f"node {c}: fixings do not extend the parent's")
                if ch.value > nd.value:
                    problems.append(f"node {c}: LP value exceeds its parent's")
        elif nd.children:
            problems.append(f"leaf {nd.id} has children")
    if sorted(tree.processing_order) != list(range(len(nodes))):
        problems.append("processing order is not a permutation of the node ids")
        return problems

    # replay best-bound selection and incumbent updates
    inc_updates = {nid: v for nid, v in tree.incumbent_trace if nid is not None}
    best = NEG_INF if tree.warm_start is None else tree.warm_start
    frontier = [(-nodes[0].value, 0)]
    for nid in tree.processing_order:
        if not frontier:
            problems.append(f"node {nid} processed before it was created")
            break
        top = heapq.heappop(frontier)[1]
        if top != nid:
            problems.append(f"node {nid} processed while node {top} had the best bound")
            break
        nd = nodes[nid]
        expect = (PRUNED_INFEASIBLE if nd.lp.infeasible else
                  PRUNED_BOUND if nd.value <= best else None)
        if expect is not None and nd.status != expect:
            problems.append(f"node {nid}: status {nd.status}, expected {expect}")
        if expect is None and nd.status not in (BRANCHED, PRUNED_INTEGRAL):
            problems.append(f"node {nid}: status {nd.status} with value above the incumbent")
        if nd.status == PRUNED_INTEGRAL:
            if inc_updates.get(nid) != nd.value:
                problems.append(f"node {nid}: integral leaf missing from the incumbent trace")
            best = nd.value
        for c in nd.children:
            heapq.heappush(frontier, (-nodes[c].value, c))
    if best != tree.opt_value:
        problems.append("final incumbent differs from optValue")
    return problems
