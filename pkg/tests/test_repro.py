import json
from fractions import Fraction as F

import pytest

from bnclab.model import TooLargeError
from bnclab.repro import SUITES, reproduce

SMALL = {
    "toy": {},
    "thm1": {"ms": [1, 2, 9], "c2_max": 9},
    "thm2": {"ms": [1, 2]},
    "thm3": {"ns": [3, 4]},
    "prop1": {"ns": [3]},
    "thm4": {"ns": [7], "ks": [0, 1, 2]},
    "lemma-blocks": {"ns": [3]},
    "lemma-sb": {"ns": [3, 4]},
}


@pytest.mark.parametrize("suite", SUITES)
def test_small_sweeps_pass_and_are_deterministic(suite):
    a = reproduce(suite, **SMALL[suite])
    assert a.ok, [c.to_json() for c in a.failed()]
    b = reproduce(suite, **SMALL[suite])
    assert a.dumps(runtime=False) == b.dumps(runtime=False)
    names = {c.description for c in a.claims}
    assert "LP optimality certificates" in names


def test_lemma_blocks_values():
    rep = reproduce("lemma-blocks", ns=[3], checks=False)
    vals = [int(c.observed) for c in rep.claims if c.description.startswith("block LP value")]
    assert sorted(set(vals)) == [34, 49, 51, 53, 55, 56]


def test_failing_claim_is_reported():
    # past s = 7/4 cut2 improves the bound more than cut1
    rep = reproduce("toy", s=F(19, 10))
    assert not rep.ok
    assert [c.description for c in rep.failed()] == ["cut1 improves the bound more"]


def test_guards():
    with pytest.raises(TooLargeError):
        reproduce("thm3", ns=[11])
    with pytest.raises(TooLargeError):
        reproduce("thm2", ms=[4])
    with pytest.raises(TooLargeError):
        reproduce("thm4", ns=[7], ks=[8])
    with pytest.raises(ValueError):
        reproduce("thm9")


def test_report_formats(tmp_path):
    rep = reproduce("thm2", ms=[1], artifacts_dir=tmp_path)
    d = json.loads(rep.dumps())
    assert d["experimentId"] == "thm2" and d["allSatisfied"] is True
    assert "runtimeMs" in d and "runtimeMs" not in json.loads(rep.dumps(runtime=False))
    assert d["artifacts"] and all((tmp_path / p.split("/")[-1]).exists() for p in d["artifacts"])
    lines = rep.to_csv().splitlines()
    assert lines[0] == "experiment,params,description,bound,observed,satisfied"
    assert len(lines) == len(rep.claims) + 1
