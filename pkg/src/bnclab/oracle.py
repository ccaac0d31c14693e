"""Minimum branch-and-bound tree size by memoized recursion over fixing states."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .branching import PolicySpec, SCRIPTED
from .engine import TreeRecord, run_bnb
from .lp import Relaxation
from .model import Cut, Fixings, Instance, ModelError, TooLargeError, enumerate_binary
from .numeric import NEG_INF, ext

ANY_UNFIXED = "AnyUnfixed"
FRACTIONAL_ONLY = "FractionalOnly"

ORACLE_GUARD = 12


@dataclass
class OracleResult:
    min_tree_size: int
    witness: dict = field(default_factory=dict)  # Fixings -> branching variable
    states_explored: int = 0
    branch_class: str = FRACTIONAL_ONLY

    def to_json(self, instance: Instance) -> dict:
        labels = instance.labels
        wit = sorted(self.witness.items(), key=lambda kv: (len(kv[0]), kv[0].items()))
        return {
            "minTreeSize": self.min_tree_size,
            "branchClass": self.branch_class,
            "statesExplored": self.states_explored,
            "witnessPolicy": [
                {"fixings": kv[0].describe(instance), "branch": labels[kv[1]]} for kv in wit
            ],
        }


def min_tree_size(instance: Instance, cuts: Sequence[Cut] = (), branch_class: str = FRACTIONAL_ONLY,
                  incumbent="opt", *, memo: bool = True, force: bool = False) -> OracleResult:
    """Smallest tree over all branching choices, with the incumbent held fixed.

    A state prunes when its LP is infeasible, its value is at most the
    incumbent, or its vertex is integral; otherwise it costs one node plus
    the cheapest pair of child subtrees over the allowed branching variables.
    """
    if branch_class not in (ANY_UNFIXED, FRACTIONAL_ONLY):
        raise ValueError(f"unknown branch class {branch_class!r}")
    ints = instance.integer_vars
    if len(ints) > ORACLE_GUARD and not force:
        raise TooLargeError(f"{len(ints)} integer variables exceed the oracle guard {ORACLE_GUARD}")
    if not instance.is_binary_branchable():
        raise ModelError("oracle needs binary integer variables")
    cuts = tuple(cuts)
    if incumbent == "opt":
        incumbent, _ = enumerate_binary(instance, cuts, max_points=1)
    inc = NEG_INF if incumbent is None else ext(incumbent)
    rel = Relaxation(instance, cuts)
    table: dict = {}
    witness: dict = {}
    explored = 0

    def solve(fx: Fixings) -> int:
        nonlocal explored
        if memo and fx in table:
            return table[fx]
        explored += 1
        out = rel.solve(fx)
        if out.infeasible or out.value <= inc:
            res = 1
        else:
            frac = [j for j in ints if out.vertex[j].denominator != 1]
            if not frac:
                res = 1
            else:
                allowed = frac if branch_class == FRACTIONAL_ONLY else [j for j in ints if j not in fx]
                best = None
                for j in allowed:
                    size = 1 + solve(fx.with_(j, 0))
                    if best is not None and size >= best:
                        continue
                    size += solve(fx.with_(j, 1))
                    if best is None or size < best:
                        best, arg = size, j
                res = best
                if memo:
                    witness[fx] = arg
        if memo:
            table[fx] = res
        return res

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * len(ints) + 1000))
    try:
        size = solve(Fixings())
    finally:
        sys.setrecursionlimit(limit)
    return OracleResult(size, witness, explored, branch_class)


def chain_upper_bound_tree(instance: Instance, cuts: Sequence[Cut], incumbent="opt") -> TreeRecord:
    """Complete tree that branches on ``x_{1,1}, ..., x_{m,1}`` in order on every path."""
    if instance.family != "triangles":
        raise ModelError("chain tree is defined for the triangle family")
    m = len([lab for lab in instance.labels if lab.startswith("x_") and lab.endswith(",1")])
    script = tuple(f"x_{t},1" for t in range(1, m + 1))
    return run_bnb(instance, cuts, PolicySpec(SCRIPTED, script=script), incumbent, cut_set_id="chain")
