"""Branching scores, score-based policies and tie-breaking rules."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .lp import LpOutcome, Relaxation
from .model import Fixings
from .numeric import INF, ExtendedRational, Q, ext_min, ext_product_score, ext_str
from .instances import DEFAULT_ETA

STRONG = "StrongBranching"
PERTURBED = "PerturbedSB"
CAPPED = "CappedSB"
DEVIATION = "DeviationPolicy"
SCRIPTED = "Scripted"
KINDS = (STRONG, PERTURBED, CAPPED, DEVIATION, SCRIPTED)

SMALLEST_INDEX = "SmallestIndex"
PREFER_Y1 = "PreferY1ThenSmallest"
TIE_BREAKS = (SMALLEST_INDEX, PREFER_Y1)

_Y1 = re.compile(r"^y_(\d+),1$")


class BranchingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PolicySpec:
    kind: str = STRONG
    eta: Fraction = DEFAULT_ETA
    epsilon: Optional[Fraction] = None
    kappa: Optional[Fraction] = None
    k: Optional[int] = None
    tie_break: str = SMALLEST_INDEX
    script: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "eta", Q(self.eta))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", Q(self.epsilon))
        if self.kappa is not None:
            object.__setattr__(self, "kappa", Q(self.kappa))
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie-break {self.tie_break!r}")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.kind == PERTURBED and (self.epsilon is None or self.epsilon <= 0):
            raise ValueError("PerturbedSB needs epsilon > 0")
        if self.kind == CAPPED and (self.kappa is None or self.kappa <= 0):
            raise ValueError("CappedSB needs kappa > 0")
        if self.kind == DEVIATION and (self.k is None or self.k < 0):
            raise ValueError("DeviationPolicy needs k >= 0")

    def expert(self) -> "PolicySpec":
        """Strong branching with the same eta and tie-break."""
        return PolicySpec(STRONG, self.eta, tie_break=self.tie_break)

    def to_json(self) -> dict:
        d = {"kind": self.kind, "eta": str(self.eta), "tieBreak": self.tie_break}
        if self.epsilon is not None:
            d["epsilon"] = str(self.epsilon)
        if self.kappa is not None:
            d["kappa"] = str(self.kappa)
        if self.k is not None:
            d["k"] = self.k
        if self.script:
            d["script"] = list(self.script)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "PolicySpec":
        return cls(
            kind=d["kind"], eta=Fraction(d["eta"]),
            epsilon=Fraction(d["epsilon"]) if "epsilon" in d else None,
            kappa=Fraction(d["kappa"]) if "kappa" in d else None,
            k=d.get("k"), tie_break=d.get("tieBreak", SMALLEST_INDEX),
            script=tuple(d.get("script", ())),
        )


SB = PolicySpec()


@dataclass
class Node:
    """A B&B node as seen by a branching rule: fixings plus its LP outcome."""

    relaxation: Relaxation
    fixings: Fixings
    outcome: LpOutcome
    id: Optional[int] = None
    _cands: Optional[list] = field(default=None, repr=False)
    _sb: dict = field(default_factory=dict, repr=False)

    @classmethod
    def at(cls, relaxation: Relaxation, fixings: Fixings = Fixings(), id=None) -> "Node":
        return cls(relaxation, fixings, relaxation.solve(fixings), id)

    @property
    def instance(self):
        return self.relaxation.instance

    def candidates(self) -> list[int]:
        """Integer variables fractional in the node's LP vertex, in index order."""
        if self._cands is None:
            if not self.outcome.optimal:
                self._cands = []
            else:
                x = self.outcome.vertex
                inst = self.instance
                self._cands = [j for j in inst.integer_vars if x[j].denominator != 1]
        return self._cands


def is_y1(label: str) -> bool:
    return _Y1.match(label) is not None


def sb_improvements(node: Node, j: int) -> tuple[ExtendedRational, ExtendedRational]:
    """``(z(N) - z(N, x_j=0), z(N) - z(N, x_j=1))``; +inf for an infeasible child."""
    hit = node._sb.get(j)
    if hit is not None:
        return hit
    if j not in node.candidates():
        raise BranchingError(f"variable {node.instance.labels[j]} is not a branching candidate")
    z = node.outcome.value
    out = []
    for v in (0, 1):
        zc = node.relaxation.child_value(node.fixings, z, j, v)
        out.append(INF if zc == -INF else z - zc)
    res = (out[0], out[1])
    node._sb[j] = res
    return res


def sb_score(node: Node, j: int, eta) -> ExtendedRational:
    d0, d1 = sb_improvements(node, j)
    return ext_product_score(d0, d1, eta)


def score(policy: PolicySpec, node: Node, j: int) -> ExtendedRational:
    """The policy's exact score for candidate ``j``.

    DeviationPolicy and Scripted act as overrides in :func:`choose`; their
    score is the strong branching score.
    """
    base = sb_score(node, j, policy.eta)
    if policy.kind == PERTURBED:
        if is_y1(node.instance.labels[j]) and j in node.candidates():
            return base + policy.epsilon / 2
        return base
    if policy.kind == CAPPED:
        return ext_min(base, policy.kappa)
    return base


def tie_break(policy: PolicySpec, node: Node, maximizers: list[int]) -> int:
    if policy.tie_break == PREFER_Y1:
        ys = [j for j in maximizers if is_y1(node.instance.labels[j])]
        if ys:
            return min(ys)
    return min(maximizers)


@dataclass
class BranchScoreReport:
    node_id: Optional[int]
    candidates: list  # (j, d0, d1, score)
    chosen: int
    override: bool = False

    def to_json(self, labels=None) -> dict:
        return {
            "nodeId": self.node_id,
            "candidates": [
                {"var": j, "label": labels[j] if labels else None, "d0": ext_str(d0), "d1": ext_str(d1),
                 "score": ext_str(s)}
                for j, d0, d1, s in self.candidates
            ],
            "chosen": self.chosen,
            "chosenLabel": labels[self.chosen] if labels else None,
            "override": self.override,
        }


def score_report(policy: PolicySpec, node: Node) -> list[tuple]:
    rows = []
    for j in node.candidates():
        d0, d1 = sb_improvements(node, j)
        rows.append((j, d0, d1, score(policy, node, j)))
    return rows


def _override(policy: PolicySpec, node: Node) -> Optional[int]:
    inst = node.instance
    depth = len(node.fixings)
    if policy.kind == DEVIATION and depth < policy.k:
        j = inst.index(f"y_{depth + 1},1")
    elif policy.kind == SCRIPTED and depth < len(policy.script):
        ref = policy.script[depth]
        j = inst.index(ref) if isinstance(ref, str) else int(ref)
    else:
        return None
    if j not in node.candidates():
        raise BranchingError(f"override variable {inst.labels[j]} is not fractional at this node")
    return j


def choose(policy: PolicySpec, node: Node, report: bool = False):
    """Branching variable picked by ``policy``; with ``report`` also the score table."""
    cands = node.candidates()
    if not cands:
        raise BranchingError("node has no fractional integer variable")
    forced = _override(policy, node)
    if forced is not None and not report:
        return forced
    rows = score_report(policy, node)
    if forced is not None:
        return forced, BranchScoreReport(node.id, rows, forced, override=True)
    best = max(r[3] for r in rows)
    chosen = tie_break(policy, node, [r[0] for r in rows if r[3] == best])
    if report:
        return chosen, BranchScoreReport(node.id, rows, chosen)
    return chosen
