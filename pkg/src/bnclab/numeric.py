"""Exact scalars: rationals, rationals extended by +-infinity, and square-root scores.

Rationals are plain :class:`fractions.Fraction` values.  Infinite values are
the float infinities, which compare correctly against any ``Fraction`` and
never take part in arithmetic except through the guarded helpers below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction
ExtendedRational = Union[Fraction, float]

INF = math.inf
NEG_INF = -math.inf

LESS, EQUAL, GREATER = -1, 0, 1


def Q(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact rationals")
    return Fraction(value)


def is_infinite(value: ExtendedRational) -> bool:
    return isinstance(value, float) and math.isinf(value)


def ext(value) -> ExtendedRational:
    """Coerce to an extended rational; accepts ``"inf"``/``"-inf"`` strings."""
    if isinstance(value, float):
        if math.isinf(value):
            return value
        raise TypeError("finite floats are not accepted as exact rationals")
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "-inf"):
        return INF if not value.strip().startswith("-") else NEG_INF
    return Q(value)


def ext_str(value: ExtendedRational) -> str:
    """Serialize as ``"p/q"`` (``q`` omitted when 1), ``"inf"`` or ``"-inf"``."""
    if is_infinite(value):
        return "inf" if value > 0 else "-inf"
    return str(Q(value))


def ext_product_score(d0: ExtendedRational, d1: ExtendedRational, eta) -> ExtendedRational:
    """Product rule ``max(d0, eta) * max(d1, eta)``; infinite if either input is +inf."""
    eta = Q(eta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    if d0 == INF or d1 == INF:
        return INF
    return max(d0, eta) * max(d1, eta)


def ext_min(a: ExtendedRational, b: ExtendedRational) -> ExtendedRational:
    return a if a <= b else b


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1


# ---------------------------------------------------------------------------
# Sums of square roots, compared without evaluating any root.

def _square_part(n: int) -> tuple[int, int]:
    """Split ``n >= 0`` as ``s*s*r`` for a partially square-free ``r``; return (s, r)."""
    r = math.isqrt(n)
    if r * r == n:
        return r, 1
    s = 1
    p = 2
    while p * p <= n and p < 1000:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        p += 1
    return s, n


def _canonical(terms: Iterable[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, int]]:
    """Rewrite ``sum c*sqrt(r)`` with integer radicands, merging equal ones."""
    acc: dict[int, Fraction] = {}
    for coef, rad in terms:
        if coef == 0 or rad == 0:
            continue
        if rad < 0:
            raise ValueError("negative radicand")
        # sqrt(p/q) = sqrt(p*q)/q
        s, r = _square_part(rad.numerator * rad.denominator)
        c = coef * Fraction(s, rad.denominator)
        acc[r] = acc.get(r, Fraction(0)) + c
    return sorted((c, r) for r, c in acc.items() if c != 0)


def _square(terms: list[tuple[Fraction, int]]) -> list[tuple[Fraction, Fraction]]:
    out = []
    for c1, r1 in terms:
        for c2, r2 in terms:
            out.append((c1 * c2, Fraction(r1 * r2)))
    return out


def surd_sum_sign(terms: Iterable[tuple[Fraction, Fraction]], _depth: int = 0) -> int:
    """Exact sign of ``sum coef * sqrt(radicand)`` over rational inputs."""
    if _depth > 16:
        raise RecursionError("surd comparison did not terminate")
    ts = _canonical(terms)
    if not ts:
        return 0
    if len(ts) == 1:
        return 1 if ts[0][0] > 0 else -1
    half = len(ts) // 2
    a, b = ts[:half], ts[half:]
    sa = surd_sum_sign([(c, Fraction(r)) for c, r in a], _depth + 1)
    sb = surd_sum_sign([(c, Fraction(r)) for c, r in b], _depth + 1)
    if sa == 0:
        return sb
    if sb == 0 or sa == sb:
        return sa
    # opposite signs: the larger magnitude wins, compared through squares
    diff = _square(a) + [(-c, r) for c, r in _square(b)]
    s = surd_sum_sign(diff, _depth + 1)
    if s == 0:
        return 0
    return sa if s > 0 else sb


@dataclass(frozen=True, eq=False)
class SurdScore:
    """The real number ``numer / sqrt(norm_sq)``."""

    numer: Fraction
    norm_sq: Fraction

    def __post_init__(self):
        object.__setattr__(self, "numer", Q(self.numer))
        object.__setattr__(self, "norm_sq", Q(self.norm_sq))
        if self.norm_sq <= 0:
            raise ValueError("norm_sq must be positive")

    def terms(self) -> list[tuple[Fraction, Fraction]]:
        return [(self.numer, 1 / self.norm_sq)]

    def __float__(self) -> float:
        return float(self.numer) / math.sqrt(self.norm_sq)

    def __mul__(self, k) -> "SurdSum":
        return SurdSum(self.terms()) * k

    __rmul__ = __mul__

    def __add__(self, other) -> "SurdSum":
        return SurdSum(self.terms()) + other

    def __sub__(self, other) -> "SurdSum":
        return SurdSum(self.terms()) - other

    def __neg__(self) -> "SurdSum":
        return SurdSum(self.terms()) * -1

    def _cmp(self, other) -> int:
        return surd_compare(self, other)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if not isinstance(other, (SurdSum, SurdScore, int, Fraction)):
            return NotImplemented
        return self._cmp(other) == 0

    def __hash__(self):
        return hash(SurdSum.of(self))

    def __str__(self):
        return f"{self.numer}/sqrt({self.norm_sq})"


class SurdSum:
    """A finite linear combination of square roots of rationals."""

    __slots__ = ("_terms",)

    def __init__(self, terms=()):
        self._terms = tuple((Q(c), Q(r)) for c, r in terms)

    @classmethod
    def of(cls, value) -> "SurdSum":
        if isinstance(value, SurdSum):
            return value
        if isinstance(value, SurdScore):
            return cls(value.terms())
        return cls([(Q(value), Fraction(1))])

    def terms(self):
        return list(self._terms)

    def __add__(self, other):
        return SurdSum(self._terms + tuple(SurdSum.of(other)._terms))

    __radd__ = __add__

    def __sub__(self, other):
        return self + SurdSum.of(other) * -1

    def __mul__(self, k):
        k = Q(k)
        return SurdSum((c * k, r) for c, r in self._terms)

    __rmul__ = __mul__

    def sign(self) -> int:
        return surd_sum_sign(self._terms)

    def __float__(self):
        return sum(float(c) * math.sqrt(r) for c, r in self._terms)

    def __lt__(self, other):
        return surd_compare(self, other) < 0

    def __le__(self, other):
        return surd_compare(self, other) <= 0

    def __gt__(self, other):
        return surd_compare(self, other) > 0

    def __ge__(self, other):
        return surd_compare(self, other) >= 0

    def __eq__(self, other):
        if not isinstance(other, (SurdSum, SurdScore, int, Fraction)):
            return NotImplemented
        return surd_compare(self, other) == 0

    def __hash__(self):
        return hash(tuple(_canonical(self._terms)))


def surd_compare(a, b) -> int:
    """Exact order of two surd values: -1 (less), 0 (equal), 1 (greater).

    Accepts SurdScore, SurdSum, or rationals on either side.
    """
    return (SurdSum.of(a) - SurdSum.of(b)).sign()
