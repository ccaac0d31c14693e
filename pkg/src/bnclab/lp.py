"""Exact bounded-variable primal simplex (Bland's rule) and node relaxations.

Every node LP value and vertex in the package comes from :func:`simplex_max`.
:class:`Relaxation` adds two exact shortcuts on top of it: the variable set is
split into independent components (no row or cut links them), and each
component subproblem is memoized on its own fixings.  Both leave the optimum
value untouched; the returned vertex is the concatenation of the component
vertices, each found by Bland's rule in variable-index order.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .model import EQ, LE, Cut, Fixings, Instance, ModelError, Row
from .numeric import INF, NEG_INF, ExtendedRational

log = logging.getLogger(__name__)

MAX_PIVOTS = 50_000

_ZERO = Fraction(0)
_ONE = Fraction(1)


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class UnboundedLpError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    value: ExtendedRational
    vertex: Optional[tuple[Fraction, ...]] = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    @property
    def infeasible(self) -> bool:
        return self.status is LpStatus.INFEASIBLE


INFEASIBLE = LpOutcome(LpStatus.INFEASIBLE, NEG_INF)


def simplex_max(c, rows, lower, upper, *, trace=False, max_pivots=MAX_PIVOTS):
    """Maximize ``c.x`` over ``rows`` and ``lower <= x <= upper``.

    ``rows`` holds ``(coeffs, sense, rhs)`` with sparse ``coeffs`` pairs.
    ``upper`` entries may be ``None`` (no upper bound); lower bounds must be
    finite.  Returns ``(status, value, x, pivots)``.
    """
    n = len(c)
    m = len(rows)
    lb: list = [Fraction(v) for v in lower]
    ub: list = [None if v is None else Fraction(v) for v in upper]
    for j in range(n):
        if ub[j] is not None and ub[j] < lb[j]:
            return LpStatus.INFEASIBLE, NEG_INF, None, 0

    # columns: structurals 0..n-1, slacks n..n+m-1, artificials n+m..n+2m-1
    ncol = n + 2 * m
    x = lb + [_ZERO] * (2 * m)
    lb = lb + [_ZERO] * (2 * m)
    ub = ub + [None if sense == LE else _ZERO for _, sense, _ in rows] + [_ZERO] * m
    T = []
    basis = []
    need_phase1 = False
    for i, (coeffs, sense, rhs) in enumerate(rows):
        row = [_ZERO] * ncol
        for j, a in coeffs:
            row[j] = Fraction(a)
        row[n + i] = _ONE
        resid = Fraction(rhs) - sum((a * x[j] for j, a in coeffs), _ZERO)
        if sense == LE and resid >= 0 or sense == EQ and resid == 0:
            basis.append(n + i)
            x[n + i] = resid
        else:
            art = n + m + i
            sigma = _ONE if resid >= 0 else -_ONE
            row[art] = sigma
            ub[art] = None
            x[art] = abs(resid)
            basis.append(art)
            need_phase1 = True
            # express the tableau row in terms of the basic artificial
            if sigma < 0:
                row = [-v for v in row]
        T.append(row)

    pivots = 0

    def run(cost):
        nonlocal pivots
        while True:
            cb = [cost[b] for b in basis]
            entering = None
            direction = 0
            basic = set(basis)
            for j in range(ncol):
                if j in basic or (ub[j] is not None and ub[j] == lb[j]):
                    continue
                d = cost[j] - sum((cb[i] * T[i][j] for i in range(m) if T[i][j]), _ZERO)
                if d > 0 and (ub[j] is None or x[j] < ub[j]):
                    entering, direction = j, 1
                    break
                if d < 0 and x[j] > lb[j]:
                    entering, direction = j, -1
                    break
            if entering is None:
                return LpStatus.OPTIMAL
            j = entering
            best_t = None if ub[j] is None else ub[j] - lb[j]
            leave = j if best_t is not None else None
            leave_row = None
            for i in range(m):
                g = -direction * T[i][j]
                if g == 0:
                    continue
                b = basis[i]
                if g < 0:
                    t = (x[b] - lb[b]) / -g
                elif ub[b] is not None:
                    t = (ub[b] - x[b]) / g
                else:
                    continue
                if best_t is None or t < best_t or (t == best_t and b < leave):
                    best_t, leave, leave_row = t, b, i
            if best_t is None:
                return LpStatus.UNBOUNDED
            pivots += 1
            if pivots > max_pivots:
                raise RuntimeError("simplex pivot limit exceeded")
            t = best_t
            x[j] += direction * t
            for i in range(m):
                if T[i][j]:
                    x[basis[i]] -= direction * T[i][j] * t
            if leave == j:
                if trace:
                    log.debug("flip x%d to %s", j, "upper" if direction > 0 else "lower")
                continue
            r = leave_row
            b = basis[r]
            # snap the leaving variable onto the bound it reached
            x[b] = lb[b] if -direction * T[r][j] < 0 else ub[b]
            if trace:
                log.debug("pivot row %d: x%d enters, x%d leaves, step %s", r, j, b, t)
            piv = T[r][j]
            prow = [v / piv for v in T[r]]
            T[r] = prow
            for i in range(m):
                if i != r and T[i][j]:
                    f = T[i][j]
                    Ti = T[i]
                    T[i] = [a - f * p if p else a for a, p in zip(Ti, prow)]
            basis[r] = j

    if need_phase1:
        cost1 = [_ZERO] * (n + m) + [-_ONE] * m
        run(cost1)
        if any(x[n + m + i] != 0 for i in range(m)):
            return LpStatus.INFEASIBLE, NEG_INF, None, pivots
        for i in range(m):
            ub[n + m + i] = _ZERO
    cost2 = [Fraction(v) for v in c] + [_ZERO] * (2 * m)
    status = run(cost2)
    if status is LpStatus.UNBOUNDED:
        return status, INF, None, pivots
    xs = tuple(x[:n])
    value = sum((Fraction(cj) * v for cj, v in zip(c, xs)), _ZERO)
    return LpStatus.OPTIMAL, value, xs, pivots


# ---------------------------------------------------------------------------

def components(num_vars: int, supports) -> list[list[int]]:
    """Connected components of variables linked by shared rows, sorted."""
    parent = list(range(num_vars))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for coeffs in supports:
        idx = [j for j, _ in coeffs]
        for j in idx[1:]:
            ra, rb = find(idx[0]), find(j)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for j in range(num_vars):
        groups.setdefault(find(j), []).append(j)
    return sorted(groups.values())


_TRACKERS: list[list] = []


@contextmanager
def tracking():
    """Collect every :class:`Relaxation` created inside the block."""
    sink: list = []
    _TRACKERS.append(sink)
    try:
        yield sink
    finally:
        _TRACKERS.remove(sink)


class Relaxation:
    """LP relaxations of one ``(instance, cuts)`` pair under varying fixings."""

    def __init__(self, instance: Instance, cuts: Sequence[Cut] = (), *, trace=False):
        self.instance = instance
        self.cuts = tuple(cuts)
        self.trace = trace
        n = instance.num_vars
        for cut in self.cuts:
            for j, _ in cut.coeffs:
                if not 0 <= j < n:
                    raise ModelError(f"cut {cut.id} references variable {j} out of range")
        all_rows = list(instance.rows) + [c.as_row() for c in self.cuts]
        self.comps = components(n, [r.coeffs for r in all_rows])
        self.comp_of = [0] * n
        for k, comp in enumerate(self.comps):
            for j in comp:
                self.comp_of[j] = k
        self._local = [{j: i for i, j in enumerate(comp)} for comp in self.comps]
        self._rows: list[list[Row]] = [[] for _ in self.comps]
        # a row with no coefficients either always holds or empties the LP
        self.empty = False
        for r in all_rows:
            if r.coeffs:
                self._rows[self.comp_of[r.coeffs[0][0]]].append(r)
            elif (r.sense == LE and r.rhs < 0) or (r.sense == EQ and r.rhs != 0):
                self.empty = True
        self._cache: dict = {}
        self.lp_solves = 0
        for sink in _TRACKERS:
            sink.append(self)

    def split(self, fixings: Fixings) -> list[tuple]:
        parts: list[list] = [[] for _ in self.comps]
        for j, v in fixings:
            parts[self.comp_of[j]].append((j, v))
        return [tuple(p) for p in parts]

    def component_instance(self, k: int, fixed: tuple = ()) -> Instance:
        """Component ``k`` as a stand-alone LP, fixings pinned through its bounds."""
        inst = self.instance
        comp = self.comps[k]
        loc = self._local[k]
        fx = dict(fixed)
        return Instance.build(
            name=f"{inst.name}/component{k}",
            labels=[inst.labels[j] for j in comp],
            integer=[False] * len(comp),
            objective=[inst.objective[j] for j in comp],
            rows=[Row(tuple((loc[j], a) for j, a in r.coeffs), r.sense, r.rhs) for r in self._rows[k]],
            lower=[Fraction(fx[j]) if j in fx else inst.lower[j] for j in comp],
            upper=[Fraction(fx[j]) if j in fx else inst.upper[j] for j in comp],
        )

    def component(self, k: int, fixed: tuple) -> tuple:
        """``(status, value, local_vertex, pivots)`` of component ``k`` under ``fixed``."""
        key = (k, fixed)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        sub = self.component_instance(k, fixed)
        rows = [(r.coeffs, r.sense, r.rhs) for r in sub.rows]
        res = simplex_max(sub.objective, rows, sub.lower, sub.upper, trace=self.trace)
        self.lp_solves += 1
        self._cache[key] = res
        return res

    def solved_components(self):
        """``(component instance, (status, value, vertex, pivots))`` for every cached solve."""
        for (k, fixed), res in list(self._cache.items()):
            yield self.component_instance(k, fixed), res

    def certify_all(self) -> tuple[int, int]:
        """Check every cached component solve; returns ``(checked, failed)``."""
        return certify_components(self.solved_components())

    def solve(self, fixings: Fixings = Fixings()) -> LpOutcome:
        fixings.check(self.instance)
        if self.empty:
            return INFEASIBLE
        parts = self.split(fixings)
        total = _ZERO
        vertex = [_ZERO] * self.instance.num_vars
        pivots = 0
        unbounded = False
        for k, fixed in enumerate(parts):
            status, value, xs, piv = self.component(k, fixed)
            pivots += piv
            if status is LpStatus.INFEASIBLE:
                return INFEASIBLE
            if status is LpStatus.UNBOUNDED:
                unbounded = True
                continue
            total += value
            for i, j in enumerate(self.comps[k]):
                vertex[j] = xs[i]
        if unbounded:
            return LpOutcome(LpStatus.UNBOUNDED, INF, None, pivots)
        return LpOutcome(LpStatus.OPTIMAL, total, tuple(vertex), pivots)

    def child_value(self, fixings: Fixings, parent_value, j: int, v: int) -> ExtendedRational:
        """LP value after adding ``x_j = v`` to ``fixings`` (parent must be optimal).

        Only the component containing ``j`` changes, so the child value is the
        parent value with that component's contribution replaced.
        """
        if self.empty:
            return NEG_INF
        k = self.comp_of[j]
        fixed = tuple(p for p in fixings if self.comp_of[p[0]] == k)
        status0, value0, _, _ = self.component(k, fixed)
        status1, value1, _, _ = self.component(k, tuple(sorted(fixed + ((j, v),))))
        if status1 is LpStatus.INFEASIBLE:
            return NEG_INF
        if status1 is LpStatus.UNBOUNDED or status0 is not LpStatus.OPTIMAL:
            raise UnboundedLpError("child LP is unbounded")
        return parent_value - value0 + value1


def solve_lp(instance: Instance, cuts: Sequence[Cut] = (), fixings: Fixings = Fixings(),
             *, trace=False) -> LpOutcome:
    """Exact optimum of the node LP: rows, cuts, bounds and fixings."""
    return Relaxation(instance, cuts, trace=trace).solve(fixings)


def solve_lp_monolithic(instance: Instance, cuts: Sequence[Cut] = (), fixings: Fixings = Fixings()) -> LpOutcome:
    """Same LP as :func:`solve_lp` in a single tableau, without decomposition."""
    fixings.check(instance)
    fx = dict(fixings.items())
    lower = [Fraction(fx[j]) if j in fx else instance.lower[j] for j in range(instance.num_vars)]
    upper = [Fraction(fx[j]) if j in fx else instance.upper[j] for j in range(instance.num_vars)]
    rows = [(r.coeffs, r.sense, r.rhs) for r in list(instance.rows) + [c.as_row() for c in cuts]]
    status, value, xs, piv = simplex_max(instance.objective, rows, lower, upper)
    return LpOutcome(status, value, xs, piv)


# ---------------------------------------------------------------------------

def _bounds(instance: Instance, fixings: Fixings):
    fx = dict(fixings.items())
    lower = [Fraction(fx[j]) if j in fx else instance.lower[j] for j in range(instance.num_vars)]
    upper = [Fraction(fx[j]) if j in fx else instance.upper[j] for j in range(instance.num_vars)]
    return lower, upper


def optimality_certificate(instance: Instance, cuts: Sequence[Cut], fixings: Fixings, point):
    """Dual multipliers proving ``point`` optimal, or ``None``.

    Looks for ``y`` (one per active row; nonnegative on inequalities) and
    bound multipliers with ``c = A_act^T y + mu_upper - nu_lower`` and
    returns ``(y, mu, nu)`` as dicts keyed by row / variable index.
    """
    lower, upper = _bounds(instance, fixings)
    rows = list(instance.rows) + [c.as_row() for c in cuts]
    n = instance.num_vars
    cols = []  # (kind, index, sign) per multiplier column, all >= 0
    for i, r in enumerate(rows):
        act = r.activity(point)
        if r.sense == EQ:
            cols.append(("row", i, 1))
            cols.append(("row", i, -1))
        elif act == r.rhs:
            cols.append(("row", i, 1))
    for j in range(n):
        if upper[j] is not None and point[j] == upper[j]:
            cols.append(("ub", j, 1))
        if point[j] == lower[j]:
            cols.append(("lb", j, 1))
    # feasibility system: for every variable j, sum over columns of coef = c_j
    eqs = [dict() for _ in range(n)]
    for k, (kind, i, s) in enumerate(cols):
        if kind == "row":
            for j, a in rows[i].coeffs:
                eqs[j][k] = eqs[j].get(k, _ZERO) + s * a
        elif kind == "ub":
            eqs[i][k] = _ONE
        else:
            eqs[i][k] = -_ONE
    aux_rows = [(tuple(sorted(e.items())), EQ, instance.objective[j]) for j, e in enumerate(eqs)]
    status, _, w, _ = simplex_max([_ZERO] * len(cols), aux_rows, [_ZERO] * len(cols), [None] * len(cols))
    if status is not LpStatus.OPTIMAL:
        return None
    y: dict = {}
    mu: dict = {}
    nu: dict = {}
    for (kind, i, s), val in zip(cols, w):
        if kind == "row":
            y[i] = y.get(i, _ZERO) + s * val
        elif kind == "ub":
            mu[i] = val
        else:
            nu[i] = val
    return y, mu, nu


def verify_optimality(instance: Instance, cuts: Sequence[Cut], fixings: Fixings, outcome: LpOutcome) -> bool:
    """Exact primal feasibility plus a checked complementary-slackness certificate."""
    if not outcome.optimal or outcome.vertex is None:
        return False
    x = outcome.vertex
    cuts = tuple(cuts)
    lower, upper = _bounds(instance, fixings)
    for j, v in enumerate(x):
        if v < lower[j] or (upper[j] is not None and v > upper[j]):
            return False
    rows = list(instance.rows) + [c.as_row() for c in cuts]
    if not all(r.satisfied(x) for r in rows):
        return False
    if instance.objective_value(x) != outcome.value:
        return False
    cert = optimality_certificate(instance, cuts, fixings, x)
    if cert is None:
        return False
    y, mu, nu = cert
    # recheck the certificate independently of how it was found
    grad = [_ZERO] * instance.num_vars
    for i, yi in y.items():
        r = rows[i]
        if r.sense == LE and (yi < 0 or r.activity(x) != r.rhs):
            return False
        for j, a in r.coeffs:
            grad[j] += yi * a
    for j, v in mu.items():
        if v < 0 or x[j] != upper[j]:
            return False
        grad[j] += v
    for j, v in nu.items():
        if v < 0 or x[j] != lower[j]:
            return False
        grad[j] -= v
    return grad == list(instance.objective)


def certify_components(items) -> tuple[int, int]:
    """Certify ``(instance, simplex result)`` pairs, skipping exact duplicates.

    Optimal results need a checked optimality certificate; infeasible ones
    must be reproduced by :func:`solve_lp_monolithic`.
    """
    seen = set()
    checked = failed = 0
    for sub, (status, value, xs, piv) in items:
        key = (sub, status, value, xs)
        if key in seen:
            continue
        seen.add(key)
        checked += 1
        if status is LpStatus.OPTIMAL:
            ok = verify_optimality(sub, (), Fixings(), LpOutcome(status, value, xs, piv))
        else:
            ok = solve_lp_monolithic(sub).status is status
        failed += not ok
    return checked, failed
