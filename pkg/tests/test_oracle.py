import pytest

from bnclab.branching import SB, PolicySpec, CAPPED, PREFER_Y1
from bnclab.engine import run_bnb
from bnclab.instances import gen_blockfamily, gen_gadget2d, gen_triangles
from bnclab.model import ModelError, TooLargeError
from bnclab.oracle import ANY_UNFIXED, FRACTIONAL_ONLY, chain_upper_bound_tree, min_tree_size


@pytest.mark.parametrize("m", [1, 2, 3])
def test_triangle_min_trees(m):
    inst, pc, pt, _ = gen_triangles(3 * m + 1, 1)
    for cls in (ANY_UNFIXED, FRACTIONAL_ONLY):
        assert min_tree_size(inst, pc, cls).min_tree_size == 1
        assert min_tree_size(inst, pt, cls).min_tree_size == 2 ** (m + 1) - 1


@pytest.mark.parametrize("m,size", [(1, 3), (2, 7), (3, 15)])
def test_chain_tree(m, size):
    inst, _, pt, _ = gen_triangles(3 * m + 1, 1)
    assert chain_upper_bound_tree(inst, pt).tree_size == size


def test_chain_needs_triangles():
    with pytest.raises(ModelError):
        chain_upper_bound_tree(gen_blockfamily(1), [])


CASES = [
    lambda: (gen_blockfamily(1), []),
    lambda: (gen_blockfamily(2), []),
    lambda: gen_gadget2d(2)[::2],
    lambda: gen_gadget2d(3)[:2],
    lambda: gen_triangles(7, 1)[::2][:2],
]


@pytest.mark.parametrize("make", CASES)
def test_any_unfixed_at_most_fractional_only_at_most_engine(make):
    inst, cuts = make()
    any_ = min_tree_size(inst, cuts, ANY_UNFIXED).min_tree_size
    frac = min_tree_size(inst, cuts, FRACTIONAL_ONLY).min_tree_size
    assert any_ <= frac
    assert frac % 2 == 1
    for pol in (SB, PolicySpec(CAPPED, kappa=9, tie_break=PREFER_Y1)):
        assert frac <= run_bnb(inst, cuts, pol).tree_size


@pytest.mark.parametrize("m", [1, 2])
def test_memo_soundness(m):
    inst, _, pt, _ = gen_triangles(3 * m + 1, 1)
    for cls in (ANY_UNFIXED, FRACTIONAL_ONLY):
        with_memo = min_tree_size(inst, pt, cls)
        without = min_tree_size(inst, pt, cls, memo=False)
        assert with_memo.min_tree_size == without.min_tree_size
        assert without.states_explored >= with_memo.states_explored


def test_witness_replays_to_minimum():
    inst, _, pt, _ = gen_triangles(7, 1)
    res = min_tree_size(inst, pt, FRACTIONAL_ONLY)
    d = res.to_json(inst)
    assert d["minTreeSize"] == 7
    assert d["witnessPolicy"][0]["fixings"] == ""


def test_guard_and_errors():
    inst = gen_blockfamily(3)  # 15 binaries
    with pytest.raises(TooLargeError):
        min_tree_size(inst)
    with pytest.raises(ValueError):
        min_tree_size(gen_blockfamily(1), (), "Sideways")


def test_integral_root_is_one():
    inst, pc, _, _ = gen_triangles(10, 1)
    assert min_tree_size(inst, pc).min_tree_size == 1
