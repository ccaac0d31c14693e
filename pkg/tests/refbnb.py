"""Reference tree-size enumerator used to derive and cross-check golden values.

Shares nothing with the engine beyond the single-tableau LP solver: blocks
come from the instance's block labels, node values are sums of per-block LPs,
the branching rules are re-derived from their definitions, and the tree is
counted depth-first.  With the incumbent held at the optimum, a node is
pruned exactly when its LP is infeasible, its value is at most OPT, or its
vertex is integral, so the count does not depend on node order and must
match the best-bound engine.
"""

from __future__ import annotations

import itertools
import math
import re
import sys
from fractions import Fraction

from bnclab.lp import solve_lp_monolithic
from bnclab.model import Instance, Row

_Y1 = re.compile(r"^y_(\d+),1$")


class RefLP:
    def __init__(self, inst: Instance, cuts=()):
        self.inst = inst
        n = inst.num_vars
        keys = [inst.block_of[j] if inst.block_of and inst.block_of[j] is not None else ("solo", j)
                for j in range(n)]
        order = []
        for k in keys:
            if k not in order:
                order.append(k)
        self.blocks = [[j for j in range(n) if keys[j] == k] for k in order]
        self.block_of = {j: b for b, vs in enumerate(self.blocks) for j in vs}
        self.rows = [[] for _ in self.blocks]
        for r in list(inst.rows) + [c.as_row() for c in cuts]:
            bs = {self.block_of[j] for j, _ in r.coeffs}
            assert len(bs) == 1, "reference enumerator needs block-separable rows"
            self.rows[bs.pop()].append(r)
        self.cache = {}

    def sub(self, b, fixed: dict, pin_all=False) -> Instance:
        inst = self.inst
        vs = self.blocks[b]
        loc = {j: i for i, j in enumerate(vs)}
        return Instance.build(
            name="ref", labels=[inst.labels[j] for j in vs], integer=[False] * len(vs),
            objective=[inst.objective[j] for j in vs],
            rows=[Row(tuple((loc[j], a) for j, a in r.coeffs), r.sense, r.rhs) for r in self.rows[b]],
            lower=[Fraction(fixed[j]) if j in fixed else inst.lower[j] for j in vs],
            upper=[Fraction(fixed[j]) if j in fixed else inst.upper[j] for j in vs],
        )

    def block(self, b, fixed: dict):
        key = (b, tuple(sorted(fixed.items())))
        if key not in self.cache:
            out = solve_lp_monolithic(self.sub(b, fixed))
            self.cache[key] = (out.value, out.vertex) if out.optimal else (None, None)
        return self.cache[key]

    def node(self, fix: dict):
        """``(value, vertex)`` with ``value`` None when infeasible."""
        total = Fraction(0)
        x = [Fraction(0)] * self.inst.num_vars
        for b, vs in enumerate(self.blocks):
            val, vtx = self.block(b, {j: v for j, v in fix.items() if self.block_of[j] == b})
            if val is None:
                return None, None
            total += val
            for i, j in enumerate(vs):
                x[j] = vtx[i]
        return total, x

    def opt(self) -> Fraction:
        """Mixed-integer optimum by brute force per block."""
        total = Fraction(0)
        inst = self.inst
        for b, vs in enumerate(self.blocks):
            ints = [j for j in vs if inst.integer[j]]
            best = None
            for vals in itertools.product((0, 1), repeat=len(ints)):
                val, _ = self.block(b, dict(zip(ints, vals)))
                if val is not None and (best is None or val > best):
                    best = val
            total += best
        return total


def sb_pair(lp: RefLP, fix, value, j):
    out = []
    for v in (0, 1):
        child, _ = lp.node({**fix, j: v})
        out.append(math.inf if child is None else value - child)
    return out


def ref_score(lp, fix, value, j, kind, eta, epsilon=None, kappa=None):
    d0, d1 = sb_pair(lp, fix, value, j)
    s = math.inf if math.inf in (d0, d1) else max(d0, eta) * max(d1, eta)
    if kind == "perturbed" and _Y1.match(lp.inst.labels[j]):
        s = s + epsilon / 2
    if kind == "capped":
        s = min(s, kappa)
    return s


def ref_choose(lp, fix, value, frac, cfg):
    kind = cfg.get("kind", "sb")
    if kind == "deviation" and len(fix) < cfg["k"]:
        return lp.inst.index(f"y_{len(fix) + 1},1")
    scores = {j: ref_score(lp, fix, value, j, kind, cfg.get("eta", Fraction(1, 10**6)),
                           cfg.get("epsilon"), cfg.get("kappa")) for j in frac}
    top = max(scores.values())
    ties = [j for j in frac if scores[j] == top]
    if cfg.get("prefer_y1"):
        ys = [j for j in ties if _Y1.match(lp.inst.labels[j])]
        if ys:
            return min(ys)
    return min(ties)


def ref_tree_size(inst: Instance, cuts=(), **cfg) -> int:
    lp = RefLP(inst, cuts)
    opt = lp.opt()
    ints = [j for j in range(inst.num_vars) if inst.integer[j]]

    def size(fix):
        value, x = lp.node(fix)
        if value is None or value <= opt:
            return 1
        frac = [j for j in ints if x[j].denominator != 1]
        if not frac:
            return 1
        j = ref_choose(lp, fix, value, frac, cfg)
        return 1 + size({**fix, j: 0}) + size({**fix, j: 1})

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10000))
    try:
        return size({})
    finally:
        sys.setrecursionlimit(old)
