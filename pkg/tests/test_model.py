from fractions import Fraction as F

import pytest

from bnclab.instances import gen_blockfamily, gen_gadget2d, gen_toy, gen_triangles
from bnclab.model import (EQ, LE, Cut, Fixings, Instance, ModelError, Row, TooLargeError, check_cut_validity,
                          enumerate_binary, instance_from_json, instance_to_json, is_violated_at, parse_fixings)


def tiny():
    # max x0 + x1, x0 + x1 <= 3/2, binaries
    return Instance.build("tiny", ["a", "b"], [True, True], [1, 1], [Row.make({0: 1, 1: 1}, LE, F(3, 2))],
                          [0, 0], [1, 1])


def test_row_and_cut_basics():
    r = Row.make({1: 2, 0: 1, 2: 0}, EQ, 3)
    assert r.coeffs == ((0, F(1)), (1, F(2)))
    assert r.satisfied([1, 1, 7])
    c = Cut.make("c", {0: 3, 1: 4}, 5)
    assert c.norm_sq() == 25
    assert c.dense(3) == [3, 4, 0]
    with pytest.raises(ModelError):
        Row.make({0: 1}, ">=", 0)


def test_instance_validation():
    with pytest.raises(ModelError):
        Instance.build("bad", ["a", "a"], [True, True], [1, 1], [], [0, 0], [1, 1])
    with pytest.raises(ModelError):
        Instance.build("bad", ["a"], [True], [1], [Row.make({3: 1}, LE, 1)], [0], [1])
    with pytest.raises(ModelError):
        Instance.build("bad", ["a"], [True], [1], [], [1], [0])


def test_fixings_canonical_and_hashable():
    a = Fixings([(3, 1), (0, 0)])
    b = Fixings({0: 0}).with_(3, 1)
    assert a == b and hash(a) == hash(b)
    assert a.items() == ((0, 0), (3, 1))
    with pytest.raises(ModelError):
        a.with_(3, 0)
    with pytest.raises(ModelError):
        Fixings([(1, 2)])


def test_fixings_check_rejects_continuous():
    inst, _, _ = gen_toy(F(3, 2))
    with pytest.raises(ModelError):
        Fixings([(1, 0)]).check(inst)


def test_parse_fixings_with_comma_labels():
    inst = gen_blockfamily(3)
    fx = parse_fixings(inst, "b_1=0,y_2,1=1")
    assert fx.describe(inst) == "b_1=0,y_2,1=1"
    assert parse_fixings(inst, "") == Fixings()


def test_enumerate_tiny():
    opt, pts = enumerate_binary(tiny())
    assert opt == 1
    assert sorted(pts) == [(0, 1), (1, 0)]


def test_enumerate_toy_mixed():
    inst, _, _ = gen_toy(F(3, 2))
    opt, pts = enumerate_binary(inst)
    # x integer in [0, 2], y = s - x >= 0 leaves x in {0, 1}
    assert opt == F(-1, 2)
    assert pts == [(1, F(1, 2))]


def test_enumerate_infeasible():
    inst = Instance.build("inf", ["a"], [True], [1], [Row.make({0: 2}, EQ, 1)], [0], [1])
    assert enumerate_binary(inst) == (float("-inf"), [])


def test_enumeration_guard_is_per_component():
    # 10 blocks of 5 binaries each: 50 integers overall, fine per block
    opt, _ = enumerate_binary(gen_blockfamily(10), max_points=1)
    assert opt == 10 * (7 * 10 + 8 + 20)
    n = 25
    big = Instance.build("big", [f"v{i}" for i in range(n)], [True] * n, [1] * n,
                         [Row.make({i: 1 for i in range(n)}, LE, 3)], [0] * n, [1] * n)
    with pytest.raises(TooLargeError):
        enumerate_binary(big)


def test_block_opt_small():
    for n in (1, 2, 3):
        assert enumerate_binary(gen_blockfamily(n), max_points=1)[0] == n * (7 * n + 8 + 20)


def test_cut_validity():
    inst = tiny()
    assert check_cut_validity(inst, Cut.make("ok", {0: 1, 1: 1}, 1))
    assert not check_cut_validity(inst, Cut.make("bad", {0: 1}, 0))


def test_all_generated_pools_valid():
    inst, c1, c2 = gen_toy(F(3, 2))
    assert all(check_cut_validity(inst, c) for c in (c1, c2))
    inst, p1, p2 = gen_gadget2d(3)
    assert all(check_cut_validity(inst, c) for c in p1 + p2)
    inst, pc, pt, _ = gen_triangles(10, 1)
    assert all(check_cut_validity(inst, c) for c in pc + pt)


def test_is_violated_at():
    c = Cut.make("c", {0: 1}, F(1, 2))
    assert is_violated_at(c, [F(3, 4)])
    assert not is_violated_at(c, [F(1, 2)])


def test_json_round_trip():
    inst, pc, pt, _ = gen_triangles(10, F(1, 3))
    d = instance_to_json(inst, {"C": pc, "Ctilde": pt})
    back, pools = instance_from_json(d)
    assert back == inst
    assert pools["C"] == pc and pools["Ctilde"] == pt


def test_violated_constant_row_means_no_points():
    inst = Instance.build("c", ["a"], [True], [1], [Row.make({}, LE, -1)], [0], [1])
    assert enumerate_binary(inst) == (float("-inf"), [])
