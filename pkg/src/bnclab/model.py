"""MILP instances, cuts, per-node fixings and enumeration-based ground truth."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .numeric import NEG_INF, Q, ext_str

LE = "<="
EQ = "="

# refuse exhaustive enumeration beyond this many integer variables per component
ENUM_GUARD = 24


class ModelError(ValueError):
    pass


class TooLargeError(ModelError):
    pass


def _sparse(coeffs) -> tuple[tuple[int, Fraction], ...]:
    if isinstance(coeffs, Mapping):
        items = coeffs.items()
    else:
        items = coeffs
    out = {}
    for j, a in items:
        a = Q(a)
        if a != 0:
            out[int(j)] = out.get(int(j), Fraction(0)) + a
    return tuple(sorted((j, a) for j, a in out.items() if a != 0))


@dataclass(frozen=True)
class Row:
    coeffs: tuple[tuple[int, Fraction], ...]
    sense: str
    rhs: Fraction

    @classmethod
    def make(cls, coeffs, sense, rhs) -> "Row":
        if sense not in (LE, EQ):
            raise ModelError(f"unsupported row sense {sense!r}")
        return cls(_sparse(coeffs), sense, Q(rhs))

    def activity(self, point: Sequence[Fraction]) -> Fraction:
        return sum((a * point[j] for j, a in self.coeffs), Fraction(0))

    def satisfied(self, point) -> bool:
        lhs = self.activity(point)
        return lhs == self.rhs if self.sense == EQ else lhs <= self.rhs


@dataclass(frozen=True)
class Cut:
    """A root cutting plane ``alpha . x <= beta``."""

    id: str
    coeffs: tuple[tuple[int, Fraction], ...]
    rhs: Fraction
    paired_with: Optional[str] = None

    @classmethod
    def make(cls, id, coeffs, rhs, paired_with=None) -> "Cut":
        return cls(id, _sparse(coeffs), Q(rhs), paired_with)

    def as_row(self) -> Row:
        return Row(self.coeffs, LE, self.rhs)

    def dense(self, num_vars: int) -> list[Fraction]:
        v = [Fraction(0)] * num_vars
        for j, a in self.coeffs:
            v[j] = a
        return v

    def norm_sq(self) -> Fraction:
        return sum((a * a for _, a in self.coeffs), Fraction(0))


@dataclass(frozen=True)
class Instance:
    """``max c.x`` subject to rows and box bounds; first integer variables are binary."""

    name: str
    labels: tuple[str, ...]
    integer: tuple[bool, ...]
    objective: tuple[Fraction, ...]
    rows: tuple[Row, ...]
    lower: tuple[Fraction, ...]
    upper: tuple[Optional[Fraction], ...]
    block_of: tuple[Optional[int], ...] = ()
    family: str = ""
    params: tuple[tuple[str, str], ...] = ()
    _index: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        n = len(self.labels)
        if not (len(self.integer) == len(self.objective) == len(self.lower) == len(self.upper) == n):
            raise ModelError("variable vectors have inconsistent lengths")
        if self.block_of and len(self.block_of) != n:
            raise ModelError("block_of has wrong length")
        if len(set(self.labels)) != n:
            raise ModelError("variable labels must be unique")
        for j in range(n):
            ub = self.upper[j]
            if ub is not None and ub < self.lower[j]:
                raise ModelError(f"empty bounds for {self.labels[j]}")
        for r in self.rows:
            for j, _ in r.coeffs:
                if not 0 <= j < n:
                    raise ModelError(f"row references variable {j} out of range")
        object.__setattr__(self, "_index", {lab: j for j, lab in enumerate(self.labels)})

    @classmethod
    def build(cls, name, labels, integer, objective, rows, lower, upper,
              block_of=None, family="", params=None) -> "Instance":
        return cls(
            name=name,
            labels=tuple(labels),
            integer=tuple(bool(b) for b in integer),
            objective=tuple(Q(c) for c in objective),
            rows=tuple(rows),
            lower=tuple(Q(v) for v in lower),
            upper=tuple(None if v is None else Q(v) for v in upper),
            block_of=tuple(block_of) if block_of is not None else (),
            family=family,
            params=tuple((k, str(v)) for k, v in (params or {}).items()),
        )

    @property
    def num_vars(self) -> int:
        return len(self.labels)

    @property
    def integer_vars(self) -> list[int]:
        return [j for j in range(self.num_vars) if self.integer[j]]

    def is_binary_branchable(self) -> bool:
        return all(self.lower[j] == 0 and self.upper[j] == 1 for j in self.integer_vars)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ModelError(f"unknown variable label {label!r}") from None

    def objective_value(self, point) -> Fraction:
        return sum((c * x for c, x in zip(self.objective, point)), Fraction(0))

    def with_objective(self, objective, name=None) -> "Instance":
        return Instance(
            name=name or self.name, labels=self.labels, integer=self.integer,
            objective=tuple(Q(c) for c in objective), rows=self.rows,
            lower=self.lower, upper=self.upper, block_of=self.block_of,
            family=self.family, params=self.params,
        )

    def is_feasible(self, point, cuts: Iterable[Cut] = ()) -> bool:
        """Exact feasibility of the LP relaxation (integrality not checked)."""
        for j, x in enumerate(point):
            if x < self.lower[j] or (self.upper[j] is not None and x > self.upper[j]):
                return False
        if not all(r.satisfied(point) for r in self.rows):
            return False
        return all(c.as_row().satisfied(point) for c in cuts)


class Fixings:
    """Immutable map ``variable index -> 0/1``; hashable, canonical sorted order."""

    __slots__ = ("_items", "_map")

    def __init__(self, assignments=()):
        if isinstance(assignments, Mapping):
            assignments = assignments.items()
        m = {}
        for j, v in assignments:
            j = int(j)
            if j in m:
                raise ModelError(f"duplicate fixing for variable {j}")
            v = int(v)
            if v not in (0, 1):
                raise ModelError("fixing values must be 0 or 1")
            m[j] = v
        self._map = m
        self._items = tuple(sorted(m.items()))

    def with_(self, j: int, v: int) -> "Fixings":
        if j in self._map:
            raise ModelError(f"variable {j} is already fixed")
        return Fixings(self._items + ((j, v),))

    def get(self, j, default=None):
        return self._map.get(j, default)

    def items(self):
        return self._items

    def __contains__(self, j):
        return j in self._map

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def __eq__(self, other):
        return isinstance(other, Fixings) and self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"Fixings({dict(self._items)})"

    def check(self, instance: Instance):
        for j, v in self._items:
            if not 0 <= j < instance.num_vars or not instance.integer[j]:
                raise ModelError(f"fixing on non-integer variable {j}")
            ub = instance.upper[j]
            if v < instance.lower[j] or (ub is not None and v > ub):
                raise ModelError(f"fixing {instance.labels[j]}={v} outside bounds")

    def describe(self, instance: Instance) -> str:
        return ",".join(f"{instance.labels[j]}={v}" for j, v in self._items)


def parse_fixings(instance: Instance, text: str) -> Fixings:
    """Parse ``"b_1=0,y_2,1=1"`` style fixings; labels may contain commas."""
    text = text.strip()
    if not text:
        return Fixings()
    out = []
    rest = text
    while rest:
        eq = rest.index("=")
        label = rest[:eq]
        value = rest[eq + 1]
        out.append((instance.index(label), int(value)))
        rest = rest[eq + 2:].lstrip(",")
    return Fixings(out)


# ---------------------------------------------------------------------------
# Exhaustive ground truth

def _integer_values(instance: Instance, j: int) -> list[int]:
    import math
    lo = math.ceil(instance.lower[j])
    ub = instance.upper[j]
    if ub is None:
        raise ModelError(f"integer variable {instance.labels[j]} has no upper bound")
    return list(range(lo, math.floor(ub) + 1))


def _components(instance: Instance, cuts: Sequence[Cut]) -> list[list[int]]:
    from .lp import components
    return components(instance.num_vars, [r.coeffs for r in instance.rows] + [c.coeffs for c in cuts])


def enumerate_binary(instance: Instance, cuts: Sequence[Cut] = (), max_points: int = 4096):
    """Exact mixed-integer optimum by enumerating integer assignments.

    The instance is split into independent components first (variables
    linked by a row or cut); each component is enumerated on its own and
    the guard of ``ENUM_GUARD`` integer variables applies per component.
    Continuous variables are optimized by the LP under each assignment.

    Returns ``(opt_value, opt_points)``; ``opt_value`` is ``-inf`` with an
    empty list when no mixed-integer point exists.  At most ``max_points``
    optimal points are listed.
    """
    from .lp import solve_lp

    cuts = tuple(cuts)
    for r in list(instance.rows) + [c.as_row() for c in cuts]:
        if not r.coeffs and not r.satisfied(()):
            return NEG_INF, []
    comps = _components(instance, cuts)
    total = Fraction(0)
    per_comp = []
    for comp in comps:
        ints = [j for j in comp if instance.integer[j]]
        if len(ints) > ENUM_GUARD:
            raise TooLargeError(
                f"component with {len(ints)} integer variables exceeds the enumeration guard {ENUM_GUARD}")
        cont = [j for j in comp if not instance.integer[j]]
        best = NEG_INF
        points = []
        for values in itertools.product(*(_integer_values(instance, j) for j in ints)):
            assign = dict(zip(ints, values))
            if cont:
                sub = _fixed_subproblem(instance, cuts, comp, assign)
                out = solve_lp(sub)
                if not out.optimal:
                    continue
                val = out.value
                pt = {j: out.vertex[k] for k, j in enumerate(comp)}
            else:
                pt = {j: Fraction(v) for j, v in assign.items()}
                if not _comp_feasible(instance, cuts, comp, pt):
                    continue
                val = sum((instance.objective[j] * pt[j] for j in comp), Fraction(0))
            if val > best:
                best, points = val, [pt]
            elif val == best:
                points.append(pt)
        if best == NEG_INF:
            return NEG_INF, []
        total += best
        per_comp.append(points)
    opt_points = []
    for combo in itertools.islice(itertools.product(*per_comp), max_points):
        x = [Fraction(0)] * instance.num_vars
        for part in combo:
            for j, v in part.items():
                x[j] = v
        opt_points.append(tuple(x))
    return total, opt_points


def _comp_feasible(instance, cuts, comp, pt) -> bool:
    comp_set = set(comp)
    for j in comp:
        ub = instance.upper[j]
        if pt[j] < instance.lower[j] or (ub is not None and pt[j] > ub):
            return False
    for r in list(instance.rows) + [c.as_row() for c in cuts]:
        if not r.coeffs or r.coeffs[0][0] not in comp_set:
            continue
        lhs = sum((a * pt[j] for j, a in r.coeffs), Fraction(0))
        if (r.sense == EQ and lhs != r.rhs) or (r.sense == LE and lhs > r.rhs):
            return False
    return True


def _fixed_subproblem(instance, cuts, comp, assign) -> Instance:
    """The component's LP with its integer variables pinned to ``assign``."""
    local = {j: k for k, j in enumerate(comp)}
    rows = []
    for r in list(instance.rows) + [c.as_row() for c in cuts]:
        if r.coeffs and r.coeffs[0][0] in local:
            rows.append(Row(tuple((local[j], a) for j, a in r.coeffs), r.sense, r.rhs))
    lower = [Fraction(assign[j]) if j in assign else instance.lower[j] for j in comp]
    upper = [Fraction(assign[j]) if j in assign else instance.upper[j] for j in comp]
    return Instance.build(
        name=f"{instance.name}/component", labels=[instance.labels[j] for j in comp],
        integer=[False] * len(comp), objective=[instance.objective[j] for j in comp],
        rows=rows, lower=lower, upper=upper,
    )


def check_cut_validity(instance: Instance, cut: Cut) -> bool:
    """True iff every mixed-integer feasible point satisfies the cut."""
    probe = instance.with_objective(cut.dense(instance.num_vars), name=f"{instance.name}/validity")
    best, _ = enumerate_binary(probe, max_points=1)
    return best <= cut.rhs


def is_violated_at(cut: Cut, point: Sequence[Fraction]) -> bool:
    """True iff ``alpha . point > beta`` exactly."""
    return sum((a * Q(point[j]) for j, a in cut.coeffs), Fraction(0)) > cut.rhs


# ---------------------------------------------------------------------------
# JSON

def _coeff_json(coeffs):
    return {str(j): str(a) for j, a in coeffs}


def cut_to_json(cut: Cut) -> dict:
    d = {"id": cut.id, "coeffs": _coeff_json(cut.coeffs), "rhs": str(cut.rhs)}
    if cut.paired_with is not None:
        d["pairedWith"] = cut.paired_with
    return d


def cut_from_json(d: dict) -> Cut:
    return Cut.make(d["id"], {int(k): Fraction(v) for k, v in d["coeffs"].items()},
                    Fraction(d["rhs"]), d.get("pairedWith"))


def instance_to_json(instance: Instance, pools: Optional[Mapping[str, Sequence[Cut]]] = None) -> dict:
    d = {
        "name": instance.name,
        "family": instance.family,
        "params": dict(instance.params),
        "vars": [
            {
                "label": instance.labels[j],
                "integer": instance.integer[j],
                "lb": str(instance.lower[j]),
                "ub": None if instance.upper[j] is None else str(instance.upper[j]),
                "block": instance.block_of[j] if instance.block_of else None,
            }
            for j in range(instance.num_vars)
        ],
        "objective": [str(c) for c in instance.objective],
        "rows": [{"coeffs": _coeff_json(r.coeffs), "sense": r.sense, "rhs": str(r.rhs)}
                 for r in instance.rows],
    }
    if pools:
        d["cuts"] = {name: [cut_to_json(c) for c in cuts] for name, cuts in pools.items()}
    return d


def instance_from_json(d: dict) -> tuple[Instance, dict[str, list[Cut]]]:
    vs = d["vars"]
    blocks = [v.get("block") for v in vs]
    inst = Instance.build(
        name=d["name"],
        labels=[v["label"] for v in vs],
        integer=[v["integer"] for v in vs],
        objective=[Fraction(c) for c in d["objective"]],
        rows=[Row.make({int(k): Fraction(a) for k, a in r["coeffs"].items()}, r["sense"], Fraction(r["rhs"]))
              for r in d["rows"]],
        lower=[Fraction(v["lb"]) for v in vs],
        upper=[None if v["ub"] is None else Fraction(v["ub"]) for v in vs],
        block_of=None if all(b is None for b in blocks) else blocks,
        family=d.get("family", ""),
        params=d.get("params") or {},
    )
    pools = {name: [cut_from_json(c) for c in cuts] for name, cuts in (d.get("cuts") or {}).items()}
    return inst, pools


def dumps_instance(instance: Instance, pools=None) -> str:
    return json.dumps(instance_to_json(instance, pools), indent=2) + "\n"


def value_str(v) -> str:
    return ext_str(v)
