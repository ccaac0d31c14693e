"""Reproduction suites: parameter sweeps whose claims are evaluated exactly."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import lp
from .branching import CAPPED, DEVIATION, PERTURBED, PREFER_Y1, SB, SMALLEST_INDEX, Node, PolicySpec, score
from .cutsel import (BOUND_IMPROVEMENT, EFFICACY, CutContext, bound_improvement, efficacy, gap_closure, lambda_mix,
                     root_value, select_top_m)
from .engine import ALONG_EXPERT, BRANCHED, TreeRecord, count_deviations, run_bnb, validate_tree
from .instances import (DEFAULT_ETA, big_m, blockfamily_opt, gen_blockfamily, gen_gadget2d, gen_scaled_blockfamily,
                        gen_toy, gen_triangles)
from .model import TooLargeError, check_cut_validity, enumerate_binary, is_violated_at
from .numeric import Q, SurdScore, ext_str, is_infinite, surd_compare
from .oracle import ANY_UNFIXED, FRACTIONAL_ONLY, chain_upper_bound_tree, min_tree_size

SUITES = ("toy", "thm1", "thm2", "thm3", "prop1", "thm4", "lemma-blocks", "lemma-sb")

# desk-scale guards per suite parameter
GUARDS = {"thm1": 18, "thm2": 3, "thm3": 10, "prop1": 10, "thm4": 14, "lemma-blocks": 50, "lemma-sb": 12}
FORCED_GUARDS = {"thm2": 4}


def _s(v) -> str:
    if isinstance(v, (Fraction, float)):
        return ext_str(v)
    return str(v)


@dataclass
class Claim:
    description: str
    bound: str
    observed: str
    satisfied: bool
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"description": self.description, "params": {k: _s(v) for k, v in self.params.items()},
                "paperBound": self.bound, "observed": self.observed, "satisfied": self.satisfied}


@dataclass
class ExperimentReport:
    experiment_id: str
    claims: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    runtime_ms: int = 0

    @property
    def ok(self) -> bool:
        return all(c.satisfied for c in self.claims)

    def failed(self) -> list:
        return [c for c in self.claims if not c.satisfied]

    def to_json(self, runtime: bool = True) -> dict:
        d = {"experimentId": self.experiment_id, "allSatisfied": self.ok,
             "claims": [c.to_json() for c in self.claims], "artifacts": list(self.artifacts)}
        if runtime:
            d["runtimeMs"] = self.runtime_ms
        return d

    def dumps(self, runtime: bool = True) -> str:
        return json.dumps(self.to_json(runtime), indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "params", "description", "bound", "observed", "satisfied"])
        for c in self.claims:
            params = ";".join(f"{k}={_s(v)}" for k, v in c.params.items())
            w.writerow([self.experiment_id, params, c.description, c.bound, c.observed, c.satisfied])
        return buf.getvalue()


class _Recorder:
    """Collects claims, trees and relaxations while a suite runs."""

    def __init__(self, suite: str, checks: bool, artifacts_dir):
        self.report = ExperimentReport(suite)
        self.checks = checks
        self.dir = None if artifacts_dir is None else Path(artifacts_dir)
        self.trees = 0
        self.bad_trees: list[str] = []
        self.pools = 0
        self.bad_pools: list[str] = []

    def claim(self, description, bound, observed, satisfied, **params):
        self.report.claims.append(Claim(description, bound, _s(observed), bool(satisfied), params))

    def tree(self, tree: TreeRecord, tag: str) -> TreeRecord:
        self.trees += 1
        if self.checks:
            problems = validate_tree(tree)
            if problems:
                self.bad_trees.append(f"{tag}: {problems[0]}")
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            path = self.dir / f"{self.report.experiment_id}_{tag}.json"
            path.write_text(tree.dumps())
            self.report.artifacts.append(str(path))
        return tree

    def pool(self, instance, cuts, tag: str):
        if not self.checks:
            return
        self.pools += 1
        bad = [c.id for c in cuts if not check_cut_validity(instance, c)]
        if bad:
            self.bad_pools.append(f"{tag}: {','.join(bad)}")

    def finish(self, relaxations):
        if not self.checks:
            return
        self.claim("tree well-formedness and best-bound replay", "no violations",
                   f"{self.trees} trees, {len(self.bad_trees)} with problems"
                   + (f" ({self.bad_trees[0]})" if self.bad_trees else ""), not self.bad_trees)
        if self.pools:
            self.claim("cut validity by enumeration", "every cut valid",
                       f"{self.pools} pools, {len(self.bad_pools)} with invalid cuts", not self.bad_pools)
        checked, failed = lp.certify_components(x for r in relaxations for x in r.solved_components())
        self.claim("LP optimality certificates", "all distinct LP solves certified",
                   f"{checked} checked, {failed} failed", failed == 0)


def _guard(suite: str, values: Iterable[int], force: bool):
    limit = FORCED_GUARDS.get(suite, GUARDS[suite]) if force else GUARDS[suite]
    for v in values:
        if v > limit:
            raise TooLargeError(f"{suite}: parameter {v} exceeds the desk-scale guard {limit}")


# ---------------------------------------------------------------------------

def suite_toy(rec: _Recorder, s=Fraction(3, 2), lambdas=(0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1)):
    s = Q(s)
    inst, c1, c2 = gen_toy(s)
    rec.pool(inst, [c1, c2], "toy")
    out = lp.solve_lp(inst)
    x_root = (s, Fraction(0))
    rec.claim("root LP optimum", "value 0 at (s, 0)", f"{ext_str(out.value)} at {tuple(map(str, out.vertex))}",
              out.value == 0 and out.vertex == x_root, s=s)
    d1 = bound_improvement(inst, [], c1)
    d2 = bound_improvement(inst, [], c2)
    rec.claim("bound improvement of cut1", "2 - s" + (" = 1/2" if s == Fraction(3, 2) else ""), d1, d1 == 2 - s, s=s)
    rec.claim("bound improvement of cut2", "(3 - s)/5" + (" = 3/10" if s == Fraction(3, 2) else ""), d2,
              d2 == (3 - s) / 5, s=s)
    rec.claim("cut1 improves the bound more", "Delta1 > Delta2", f"{d1} vs {d2}", d1 > d2, s=s)
    for lam in lambdas:
        lam = Q(lam)
        a = lambda_mix(c1, x_root, inst.objective, lam)
        b = lambda_mix(c2, x_root, inst.objective, lam)
        rec.claim("LambdaMix ranks cut2 above cut1", "score(cut2) > score(cut1)",
                  f"{float(b):.9g} vs {float(a):.9g}", b > a, s=s, **{"lambda": lam})
    for cut in (c1, c2):
        rec.claim(f"{cut.id} valid for the mixed-integer set", "valid", check_cut_validity(inst, cut),
                  check_cut_validity(inst, cut), s=s)
        rec.claim(f"{cut.id} violated at the root vertex", "violated at (s, 0)", is_violated_at(cut, x_root),
                  is_violated_at(cut, x_root), s=s)


def suite_thm1(rec: _Recorder, ms=range(1, 19), c2_max: int = 18):
    _guard("thm1", ms, False)
    e1 = SurdScore(Fraction(37, 10), 449)
    e2 = SurdScore(Fraction(27, 10), 269)
    rec.claim("efficacy order of the two gadget cuts", "37/(10 sqrt 449) > 27/(10 sqrt 269)",
              surd_compare(e1, e2), surd_compare(e1, e2) == 1)
    for m in ms:
        inst, pool1, pool2 = gen_gadget2d(m)
        rec.pool(inst, pool1, f"C1_m{m}")
        rec.pool(inst, pool2, f"C2_m{m}")
        ctx = CutContext(inst)
        pool = pool1 + pool2
        by_bi = {c.id for c in select_top_m(pool, BOUND_IMPROVEMENT, m, ctx)}
        by_eff = {c.id for c in select_top_m(pool, EFFICACY, m, ctx)}
        rec.claim("top-m by bound improvement", "= C2", ",".join(sorted(by_bi)),
                  by_bi == {c.id for c in pool2}, m=m)
        rec.claim("top-m by efficacy", "= C1", ",".join(sorted(by_eff)), by_eff == {c.id for c in pool1}, m=m)
        imp1 = {ctx.improvement(c) for c in pool1}
        imp2 = {ctx.improvement(c) for c in pool2}
        rec.claim("per-cut bound improvements", "C2: 23/20, C1: 3/20",
                  f"C2: {','.join(map(str, sorted(imp2)))}; C1: {','.join(map(str, sorted(imp1)))}",
                  imp2 == {Fraction(23, 20)} and imp1 == {Fraction(3, 20)}, m=m)
        effs = {(efficacy(c, ctx.x_lp) == e1) for c in pool1} | {(efficacy(c, ctx.x_lp) == e2) for c in pool2}
        rec.claim("per-cut efficacies", "C1: 37/(10 sqrt 449), C2: 27/(10 sqrt 269)", effs == {True},
                  effs == {True}, m=m)
        t1 = rec.tree(run_bnb(inst, pool1, SB, cut_set_id="C1"), f"C1_m{m}")
        rec.claim("SB tree with C1", f"<= 2m+1 = {2 * m + 1}", t1.tree_size, t1.tree_size <= 2 * m + 1, m=m)
        if m <= c2_max:
            t2 = rec.tree(run_bnb(inst, pool2, SB, cut_set_id="C2"), f"C2_m{m}")
            lb = 1 + 6 * (2 ** (m // 9) - 1)
            rec.claim("SB tree with C2", f">= 1+6(2^floor(m/9)-1) = {lb}", t2.tree_size, t2.tree_size >= lb, m=m)


def suite_thm2(rec: _Recorder, ms=(1, 2, 3), eps=1, force: bool = False):
    _guard("thm2", ms, force)
    eps = Q(eps)
    for m in ms:
        n = 3 * m + 1
        inst, pool_c, pool_t, ep = gen_triangles(n, eps)
        rec.pool(inst, pool_c, f"C_m{m}")
        rec.pool(inst, pool_t, f"Ctilde_m{m}")
        pairs = all(a.coeffs == b.coeffs and b.rhs - a.rhs == ep and a.paired_with == b.id
                    for a, b in zip(pool_c, pool_t))
        rec.claim("paired cuts share coefficients, rhs differs by eps'", "true", pairs, pairs, m=m, eps=eps)
        z0 = root_value(inst)
        zc = root_value(inst, pool_c)
        zt = root_value(inst, pool_t)
        opt, _ = enumerate_binary(inst, pool_c)
        rec.claim("root LP value", "3m/2", z0, z0 == Fraction(3 * m, 2), m=m, eps=eps)
        rec.claim("LP value with C", "= m", zc, zc == m, m=m, eps=eps)
        rec.claim("LP value with Ctilde", f"= m(1+eps') = {m * (1 + ep)}", zt, zt == m * (1 + ep), m=m, eps=eps)
        gap = abs(zc - zt)
        rec.claim("lpGap", f"= m eps' = {m * ep} <= eps", gap, gap == m * ep and gap <= eps, m=m, eps=eps)
        fc = gap_closure(z0, zc, opt)
        ft = gap_closure(z0, zt, opt)
        rec.claim("gap closure with C", "= 1", fc, fc == 1, m=m, eps=eps)
        rec.claim("closure with Ctilde", f"= 1-2eps' = {1 - 2 * ep}", ft, ft == 1 - 2 * ep, m=m, eps=eps)
        full = 2 ** (m + 1) - 1
        for cls in (ANY_UNFIXED, FRACTIONAL_ONLY):
            a = min_tree_size(inst, pool_c, cls, force=force).min_tree_size
            b = min_tree_size(inst, pool_t, cls, force=force).min_tree_size
            rec.claim(f"minTree with C ({cls})", "= 1", a, a == 1, m=m, eps=eps)
            rec.claim(f"minTree with Ctilde ({cls})", f"= 2^(m+1)-1 = {full}", b, b == full, m=m, eps=eps)
        chain = rec.tree(chain_upper_bound_tree(inst, pool_t), f"chain_m{m}")
        rec.claim("chain tree with Ctilde", f"= 2^(m+1)-1 = {full}", chain.tree_size, chain.tree_size == full,
                  m=m, eps=eps)


def _score_gap(expert: PolicySpec, other: PolicySpec, tree: TreeRecord, rel) -> Fraction:
    """Largest |score_other - score_expert| over branched nodes of ``tree``."""
    worst = Fraction(0)
    for nd in tree.nodes:
        if nd.status != BRANCHED:
            continue
        view = Node(rel, nd.fixings, nd.lp, nd.id)
        for j in view.candidates():
            a, b = score(other, view, j), score(expert, view, j)
            if is_infinite(a) or is_infinite(b):
                if a != b:
                    return a  # one side infinite: unbounded deviation
                continue
            worst = max(worst, abs(a - b))
    return worst


def suite_thm3(rec: _Recorder, ns=range(3, 9), epsilons=(Fraction(1, 10), Fraction(1, 10**6)), eta=DEFAULT_ETA):
    _guard("thm3", ns, False)
    eta = Q(eta)
    for n in ns:
        inst = gen_scaled_blockfamily(n, eta)
        expert = PolicySpec(eta=eta)
        rel = lp.Relaxation(inst)
        t_sb = rec.tree(run_bnb(inst, (), expert, relaxation=rel), f"sb_n{n}")
        rec.claim("SB tree on the scaled family", f"= 2n+1 = {2 * n + 1}", t_sb.tree_size,
                  t_sb.tree_size == 2 * n + 1, n=n, eta=eta)
        for eps in epsilons:
            eps = Q(eps)
            pert = PolicySpec(PERTURBED, eta, epsilon=eps)
            t_p = rec.tree(run_bnb(inst, (), pert, relaxation=rel), f"perturbed_n{n}_eps{eps}".replace("/", "-"))
            gap = max(_score_gap(expert, pert, t_sb, rel), _score_gap(expert, pert, t_p, rel))
            rec.claim("max score perturbation over both trees", f"= eps/2 = {eps / 2} <= eps", gap,
                      gap == eps / 2 and gap <= eps, n=n, eps=eps, eta=eta)
            lb = 2 ** (n + 1) - 1
            rec.claim("PerturbedSB tree", f">= 2^(n+1)-1 = {lb}", t_p.tree_size, t_p.tree_size >= lb,
                      n=n, eps=eps, eta=eta)


def suite_prop1(rec: _Recorder, ns=range(3, 9), kappas=(Fraction(1, 2), Fraction(9))):
    _guard("prop1", ns, False)
    for n in ns:
        inst = gen_blockfamily(n)
        rel = lp.Relaxation(inst)
        for kappa in kappas:
            kappa = Q(kappa)
            t_s = rec.tree(run_bnb(inst, (), PolicySpec(CAPPED, kappa=kappa, tie_break=SMALLEST_INDEX),
                                   relaxation=rel), f"capped_smallest_n{n}_k{kappa}".replace("/", "-"))
            t_y = rec.tree(run_bnb(inst, (), PolicySpec(CAPPED, kappa=kappa, tie_break=PREFER_Y1),
                                   relaxation=rel), f"capped_prefery1_n{n}_k{kappa}".replace("/", "-"))
            rec.claim("CappedSB with smallest-index ties", f"= 2n+1 = {2 * n + 1}", t_s.tree_size,
                      t_s.tree_size == 2 * n + 1, n=n, kappa=kappa)
            lb = 2 ** (n + 1) - 1
            rec.claim("CappedSB preferring y_{i,1} on ties", f">= 2^(n+1)-1 = {lb}", t_y.tree_size,
                      t_y.tree_size >= lb, n=n, kappa=kappa)


def suite_thm4(rec: _Recorder, ns=(7, 14), ks: Optional[Iterable[int]] = None):
    _guard("thm4", ns, False)
    for n in ns:
        inst = gen_blockfamily(n)
        rel = lp.Relaxation(inst)
        t_sb = rec.tree(run_bnb(inst, (), SB, relaxation=rel), f"sb_n{n}")
        rec.claim("SB expert tree", f"= 2n+1 = {2 * n + 1}", t_sb.tree_size, t_sb.tree_size == 2 * n + 1, n=n)
        for k in (range(min(n, 10) + 1) if ks is None else ks):
            if k > n:
                raise TooLargeError(f"thm4: k={k} exceeds n={n}")
            pol = PolicySpec(DEVIATION, k=k)
            dev = count_deviations(inst, (), SB, pol, ALONG_EXPERT)
            rec.claim("deviations along the expert run", f"= k = {k}", dev, dev == k, n=n, k=k)
            t = rec.tree(run_bnb(inst, (), pol, relaxation=rel), f"deviation_n{n}_k{k}")
            lb = Fraction(2 ** (k + 1) * n, 7)
            rec.claim("DeviationPolicy tree", f">= 2^(k+1) n/7 = {lb}", t.tree_size, t.tree_size >= lb, n=n, k=k)


def block_lp_values(n: int) -> dict:
    """LP values of one block of ``I_n`` (the first), free and under single fixings."""
    inst = gen_blockfamily(n)
    rel = lp.Relaxation(inst)
    k = rel.comp_of[0]
    out = {}
    status, value, xs, _ = rel.component(k, ())
    out["free"] = value
    out["vertex"] = xs
    for name in ("b_1", "y_1,1", "y_1,2", "y_1,3"):
        j = inst.index(name)
        for v in (0, 1):
            out[f"{name}={v}"] = rel.component(k, ((j, v),))[1]
    return out


def suite_lemma_blocks(rec: _Recorder, ns=(3, 5, 10)):
    _guard("lemma-blocks", ns, False)
    for n in ns:
        M = big_m(n)
        vals = block_lp_values(n)
        expect = {"free": M + 27, "b_1=0": M + 20, "b_1=1": 34, "y_1,1=0": M + 24, "y_1,1=1": M + 24,
                  "y_1,2=0": M + 22, "y_1,2=1": M + 26, "y_1,3=0": M + 22, "y_1,3=1": M + 26}
        bounds = {"free": "M+27", "b_1=0": "M+20", "b_1=1": "34", "y_1,1=0": "M+24", "y_1,1=1": "M+24",
                  "y_1,2=0": "M+22", "y_1,2=1": "M+26", "y_1,3=0": "M+22", "y_1,3=1": "M+26"}
        for key, want in expect.items():
            got = vals[key]
            rec.claim(f"block LP value ({key})", f"{bounds[key]} = {want}", got, got == want, n=n)
        vtx = tuple(vals["vertex"])
        want_v = (Fraction(1, 2), Fraction(1), Fraction(3, 4), Fraction(3, 4), Fraction(3, 4))
        rec.claim("free block LP vertex", "(b,p,y1,y2,y3) = (1/2,1,3/4,3/4,3/4)", ",".join(map(str, vtx)),
                  vtx == want_v, n=n)


def suite_lemma_sb(rec: _Recorder, ns=range(3, 11)):
    _guard("lemma-sb", ns, False)
    for n in ns:
        inst = gen_blockfamily(n)
        opt, _ = enumerate_binary(inst)
        rec.claim("OPT of the block family", f"= n(M+20) = {blockfamily_opt(n)}", opt, opt == blockfamily_opt(n), n=n)
        t = rec.tree(run_bnb(inst, (), SB), f"sb_n{n}")
        rec.claim("SB tree", f"= 2n+1 = {2 * n + 1}", t.tree_size, t.tree_size == 2 * n + 1, n=n)
        rec.claim("SB optValue", f"= n(M+20) = {blockfamily_opt(n)}", t.opt_value,
                  t.opt_value == blockfamily_opt(n), n=n)


_SUITE_FUNCS: dict[str, Callable] = {
    "toy": suite_toy, "thm1": suite_thm1, "thm2": suite_thm2, "thm3": suite_thm3, "prop1": suite_prop1,
    "thm4": suite_thm4, "lemma-blocks": suite_lemma_blocks, "lemma-sb": suite_lemma_sb,
}


def reproduce(suite: str, *, checks: bool = True, artifacts_dir=None, **params) -> ExperimentReport:
    """Run one suite and return its report; ``params`` go to the suite function."""
    if suite not in _SUITE_FUNCS:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    rec = _Recorder(suite, checks, artifacts_dir)
    start = time.perf_counter()
    with lp.tracking() as rels:
        _SUITE_FUNCS[suite](rec, **params)
    rec.finish(rels)
    rec.report.runtime_ms = int((time.perf_counter() - start) * 1000)
    return rec.report
