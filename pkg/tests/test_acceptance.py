"""Acceptance criteria 1-9, each at full parameters and within its runtime limit."""

import time
from contextlib import contextmanager
from fractions import Fraction as F

import pytest

from bnclab.repro import reproduce

from conftest import ACCEPTANCE_LINES
from test_golden import GADGET_C1_SIZES, GADGET_C2_SIZES, PERTURBED_SIZES

FULL = {
    1: ("lemma-blocks", {"ns": [3, 5, 10]}, 1),
    2: ("lemma-sb", {"ns": list(range(3, 11))}, 5),
    3: ("thm3", {"ns": list(range(3, 9)), "epsilons": [F(1, 10), F(1, 10**6)], "eta": F(1, 10**6)}, 120),
    4: ("prop1", {"ns": list(range(3, 9)), "kappas": [F(1, 2), F(9)]}, 120),
    5: ("thm4", {"ns": [7, 14]}, 180),
    6: ("thm1", {"ms": list(range(1, 19)), "c2_max": 18}, 300),
    7: ("thm2", {"ms": [1, 2, 3], "eps": 1}, 60),
    8: ("toy", {"s": F(3, 2), "lambdas": [0, F(1, 4), F(1, 2), F(3, 4), 1]}, 1),
}
REPRESENTATIVE = {
    "lemma-blocks": {"ns": [3]}, "lemma-sb": {"ns": [4]}, "thm3": {"ns": [3]}, "prop1": {"ns": [3]},
    "thm4": {"ns": [7], "ks": [2]}, "thm1": {"ms": [2]}, "thm2": {"ms": [2]}, "toy": {},
}
_reports: dict = {}


@contextmanager
def criterion(num, title):
    start = time.perf_counter()
    try:
        yield
    except BaseException as e:
        msg = str(e).splitlines()[0] if str(e) else type(e).__name__
        ACCEPTANCE_LINES[num] = f"FAIL  {num}. {title} ({time.perf_counter() - start:.1f}s): {msg[:160]}"
        raise
    ACCEPTANCE_LINES[num] = f"PASS  {num}. {title} ({time.perf_counter() - start:.1f}s)"


def full_report(num):
    if num not in _reports:
        suite, params, _ = FULL[num]
        start = time.perf_counter()
        rep = reproduce(suite, **params)
        _reports[num] = (rep, time.perf_counter() - start)
    return _reports[num]


def check_suite(num):
    rep, secs = full_report(num)
    limit = FULL[num][2]
    bad = [f"{c.description} {c.params}: {c.observed} vs {c.bound}" for c in rep.failed()]
    assert not bad, bad[0]
    assert secs < limit, f"took {secs:.1f}s, limit {limit}s"
    return rep


def observed(rep, description, **params):
    want = {k: str(v) for k, v in params.items()}
    out = [c.observed for c in rep.claims if c.description == description
           and all(c.to_json()["params"].get(k) == v for k, v in want.items())]
    assert len(out) == 1, (description, params)
    return out[0]


def test_criterion_1_block_lp_values():
    with criterion(1, "block LP values for n in {3, 5, 10}"):
        rep = check_suite(1)
        for n in (3, 5, 10):
            M = 7 * n + 8
            assert observed(rep, "block LP value (free)", n=n) == str(M + 27)
            assert observed(rep, "block LP value (b_1=1)", n=n) == "34"
            assert observed(rep, "block LP value (y_1,3=1)", n=n) == str(M + 26)


def test_criterion_2_sb_tree_size():
    with criterion(2, "SB tree = 2n+1 and optValue n(M+20) for n = 3..10"):
        rep = check_suite(2)
        for n in range(3, 11):
            assert observed(rep, "SB tree", n=n) == str(2 * n + 1)
            assert observed(rep, "SB optValue", n=n) == str(n * (7 * n + 8 + 20))


def test_criterion_3_perturbed_sb():
    with criterion(3, "perturbed strong branching on the scaled family, n = 3..8"):
        rep = check_suite(3)
        for n in range(3, 9):
            assert observed(rep, "SB tree on the scaled family", n=n, eta=F(1, 10**6)) == str(2 * n + 1)
            for eps in (F(1, 10), F(1, 10**6)):
                gap = observed(rep, "max score perturbation over both trees", n=n, eps=eps, eta=F(1, 10**6))
                assert F(gap) == eps / 2
                size = observed(rep, "PerturbedSB tree", n=n, eps=eps, eta=F(1, 10**6))
                assert int(size) == PERTURBED_SIZES[n]


def test_criterion_4_capped_sb():
    with criterion(4, "capped strong branching, n = 3..8, kappa in {1/2, 9}"):
        rep = check_suite(4)
        for n in range(3, 9):
            for kappa in (F(1, 2), F(9)):
                assert observed(rep, "CappedSB with smallest-index ties", n=n, kappa=kappa) == str(2 * n + 1)
                assert int(observed(rep, "CappedSB preferring y_{i,1} on ties", n=n, kappa=kappa)) >= 2 ** (n + 1) - 1


def test_criterion_5_deviations():
    with criterion(5, "expert deviations, n in {7, 14}, k = 0..min(n, 10)"):
        rep = check_suite(5)
        for n in (7, 14):
            for k in range(min(n, 10) + 1):
                assert observed(rep, "deviations along the expert run", n=n, k=k) == str(k)
                assert 7 * int(observed(rep, "DeviationPolicy tree", n=n, k=k)) >= 2 ** (k + 1) * n


def test_criterion_6_gadget():
    with criterion(6, "gadget cut selection, m = 1..18"):
        rep = check_suite(6)
        assert observed(rep, "efficacy order of the two gadget cuts") == "1"
        for m in range(1, 19):
            assert int(observed(rep, "SB tree with C1", m=m)) <= 2 * m + 1
            assert int(observed(rep, "SB tree with C2", m=m)) >= 1 + 6 * (2 ** (m // 9) - 1)
        for m in range(1, 13):
            assert int(observed(rep, "SB tree with C1", m=m)) == GADGET_C1_SIZES[m]
            assert int(observed(rep, "SB tree with C2", m=m)) == GADGET_C2_SIZES[m]


def test_criterion_7_triangles():
    with criterion(7, "triangle cut selection, m in {1, 2, 3}"):
        rep = check_suite(7)
        for m in (1, 2, 3):
            assert observed(rep, "chain tree with Ctilde", m=m, eps=1) == str(2 ** (m + 1) - 1)
            assert observed(rep, "closure with Ctilde", m=m, eps=1) == "1/2"


def test_criterion_8_toy():
    with criterion(8, "toy example at s = 3/2"):
        rep = check_suite(8)
        assert observed(rep, "bound improvement of cut1", s=F(3, 2)) == "1/2"
        assert observed(rep, "bound improvement of cut2", s=F(3, 2)) == "3/10"
        assert len([c for c in rep.claims if c.description == "LambdaMix ranks cut2 above cut1"]) == 5


def test_criterion_9_property_suites():
    with criterion(9, "certificates, cut validity, tree checks and determinism"):
        for num in range(1, 9):
            rep, _ = full_report(num)
            names = {c.description: c for c in rep.claims}
            assert names["LP optimality certificates"].satisfied, (num, names["LP optimality certificates"].observed)
            assert names["tree well-formedness and best-bound replay"].satisfied, num
            if "cut validity by enumeration" in names:
                assert names["cut validity by enumeration"].satisfied, num
        for suite, params in REPRESENTATIVE.items():
            a = reproduce(suite, **params).dumps(runtime=False)
            b = reproduce(suite, **params).dumps(runtime=False)
            assert a == b, f"{suite} is not deterministic"
