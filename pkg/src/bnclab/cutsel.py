"""Cut scores (efficacy, objective parallelism, LP bound improvement) and top-m selection."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .lp import solve_lp
from .model import Cut, Instance, ModelError
from .numeric import Q, SurdScore, SurdSum, surd_compare

EFFICACY = "efficacy"
PARALLELISM = "parallelism"
BOUND_IMPROVEMENT = "bound_improvement"


@dataclass(frozen=True)
class LambdaMix:
    """Score ``lam * efficacy + (1 - lam) * parallelism``."""

    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Q(self.lam))
        if not 0 <= self.lam <= 1:
            raise ValueError("lambda must lie in [0, 1]")


def efficacy(cut: Cut, x_lp: Sequence[Fraction]) -> SurdScore:
    """Signed distance ``(alpha.x - beta) / |alpha|`` from ``x_lp`` to the cut hyperplane."""
    nsq = cut.norm_sq()
    if nsq == 0:
        raise ModelError(f"cut {cut.id} has a zero coefficient vector")
    viol = sum((a * Q(x_lp[j]) for j, a in cut.coeffs), Fraction(0)) - cut.rhs
    return SurdScore(viol, nsq)


def parallelism(cut: Cut, objective: Sequence[Fraction]) -> SurdScore:
    """Cosine ``|<alpha, c>| / (|alpha| |c|)``."""
    nsq = cut.norm_sq()
    csq = sum((Q(v) * Q(v) for v in objective), Fraction(0))
    if nsq == 0 or csq == 0:
        raise ModelError("parallelism is undefined for zero vectors")
    dot = sum((a * Q(objective[j]) for j, a in cut.coeffs), Fraction(0))
    return SurdScore(abs(dot), nsq * csq)


def lambda_mix(cut: Cut, x_lp, objective, lam) -> SurdSum:
    lam = Q(lam)
    return efficacy(cut, x_lp) * lam + parallelism(cut, objective) * (1 - lam)


def root_value(instance: Instance, cuts: Sequence[Cut] = ()) -> Fraction:
    out = solve_lp(instance, cuts)
    if not out.optimal:
        raise ModelError(f"root LP is {out.status.value}; the cut set is invalid or the base inconsistent")
    return out.value


def bound_improvement(instance: Instance, base_cuts: Sequence[Cut], candidate) -> Fraction:
    """``z_LP(base) - z_LP(base + candidate)``; candidate is a cut or a list of cuts."""
    extra = [candidate] if isinstance(candidate, Cut) else list(candidate)
    base = list(base_cuts)
    return root_value(instance, base) - root_value(instance, base + extra)


@dataclass
class CutContext:
    """What the scorers need: the instance, already-applied cuts, and the root LP vertex."""

    instance: Instance
    base_cuts: tuple = ()
    x_lp: Optional[tuple] = None
    _z: Optional[Fraction] = field(default=None, repr=False)

    def __post_init__(self):
        self.base_cuts = tuple(self.base_cuts)
        if self.x_lp is None:
            out = solve_lp(self.instance, self.base_cuts)
            if not out.optimal:
                raise ModelError("root LP has no optimum")
            self.x_lp = out.vertex
            self._z = out.value

    @property
    def objective(self):
        return self.instance.objective

    def improvement(self, cut: Cut) -> Fraction:
        if self._z is None:
            self._z = root_value(self.instance, self.base_cuts)
        return self._z - root_value(self.instance, list(self.base_cuts) + [cut])


def score_cut(cut: Cut, scorer, ctx: CutContext):
    if scorer == EFFICACY:
        return efficacy(cut, ctx.x_lp)
    if scorer == PARALLELISM:
        return parallelism(cut, ctx.objective)
    if scorer == BOUND_IMPROVEMENT:
        return ctx.improvement(cut)
    if isinstance(scorer, LambdaMix):
        return lambda_mix(cut, ctx.x_lp, ctx.objective, scorer.lam)
    raise ValueError(f"unknown cut scorer {scorer!r}")


def select_top_m(pool: Sequence[Cut], scorer, m: int, ctx: CutContext) -> list[Cut]:
    """The ``m`` highest-scoring cuts; equal scores keep pool order."""
    if m > len(pool):
        raise ValueError("budget exceeds pool size")
    scored = [(score_cut(c, scorer, ctx), i) for i, c in enumerate(pool)]

    def cmp(a, b):
        s = surd_compare(a[0], b[0])
        return s if s else b[1] - a[1]

    ranked = sorted(scored, key=functools.cmp_to_key(cmp), reverse=True)
    return [pool[i] for _, i in ranked[:m]]


@dataclass
class CutScoreReport:
    cut_id: str
    efficacy: SurdScore
    parallelism: SurdScore
    bound_improvement: Fraction
    lambda_mix: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cutId": self.cut_id,
            "efficacy": {"numer": str(self.efficacy.numer), "normSq": str(self.efficacy.norm_sq),
                         "approx": float(self.efficacy)},
            "parallelism": {"numer": str(self.parallelism.numer), "normSq": str(self.parallelism.norm_sq),
                            "approx": float(self.parallelism)},
            "boundImprovement": str(self.bound_improvement),
            "lambdaMix": {str(k): float(v) for k, v in self.lambda_mix.items()},
        }

    def csv_row(self) -> list:
        return [self.cut_id, self.efficacy.numer, self.efficacy.norm_sq, f"{float(self.efficacy):.9g}",
                self.parallelism.numer, self.parallelism.norm_sq, f"{float(self.parallelism):.9g}",
                self.bound_improvement]


CSV_HEADER = ["cutId", "effNumer", "effNormSq", "effApprox", "parNumer", "parNormSq", "parApprox",
              "boundImprovement"]


def score_pool(pool: Sequence[Cut], ctx: CutContext, lambdas=()) -> list[CutScoreReport]:
    out = []
    for cut in pool:
        out.append(CutScoreReport(
            cut.id, efficacy(cut, ctx.x_lp), parallelism(cut, ctx.objective), ctx.improvement(cut),
            {Q(lam): lambda_mix(cut, ctx.x_lp, ctx.objective, lam) for lam in lambdas},
        ))
    return out


def gap_closure(z_root: Fraction, z_cut: Fraction, opt: Fraction) -> Fraction:
    """Fraction of the integrality gap ``z_root - opt`` closed by the cuts."""
    if z_root == opt:
        raise ModelError("no integrality gap to close")
    return (z_root - z_cut) / (z_root - opt)
