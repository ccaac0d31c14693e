"""Generators for the instance families and their root cut pools."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .model import EQ, LE, Cut, Instance, ModelError, Row
from .numeric import Q

TOY = "toy"
GADGET = "gadget2d"
TRIANGLES = "triangles"
BLOCKS = "blocks"
SCALED_BLOCKS = "scaled-blocks"
FAMILIES = (TOY, GADGET, TRIANGLES, BLOCKS, SCALED_BLOCKS)

DEFAULT_ETA = Fraction(1, 10**6)


@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)

    def __hash__(self):
        return hash((self.family, tuple(sorted((k, str(v)) for k, v in self.params.items()))))


def big_m(n: int) -> int:
    return 7 * n + 8


def gen_toy(s) -> tuple[Instance, Cut, Cut]:
    """``max -y`` s.t. ``x + y = s``, x integer; plus the two competing cuts."""
    s = Q(s)
    if not 1 < s < 2:
        raise ModelError("toy instance needs 1 < s < 2")
    inst = Instance.build(
        name=f"toy(s={s})", labels=["x", "y"], integer=[True, False],
        objective=[0, -1], rows=[Row.make({0: 1, 1: 1}, EQ, s)],
        lower=[0, 0], upper=[2, s], family=TOY, params={"s": s},
    )
    cut1 = Cut.make("cut1", {0: Fraction(-1, 2), 1: -1}, -1)
    cut2 = Cut.make("cut2", {0: Fraction(-1, 3), 1: -2}, -1)
    return inst, cut1, cut2


def gen_gadget2d(m: int) -> tuple[Instance, list[Cut], list[Cut]]:
    """``m`` copies of the two-dimensional gadget with pools C1 and C2."""
    if m < 1:
        raise ModelError("gadget family needs m >= 1")
    labels, rows, obj, blocks = [], [], [], []
    pool1, pool2 = [], []
    for i in range(1, m + 1):
        x, y = 2 * (i - 1), 2 * (i - 1) + 1
        labels += [f"x_{i}", f"y_{i}"]
        obj += [6, 5]
        blocks += [i, i]
        rows += [
            Row.make({x: -7, y: 1}, LE, Fraction(3, 10)),
            Row.make({x: 5, y: 8}, LE, Fraction(17, 2)),
            Row.make({x: 3, y: 2}, LE, Fraction(37, 10)),
        ]
        pool1.append(Cut.make(f"c1_{i}", {y: 20, x: -7}, 0))
        pool2.append(Cut.make(f"c2_{i}", {x: 13, y: 10}, 14))
    inst = Instance.build(
        name=f"gadget2d(m={m})", labels=labels, integer=[True] * (2 * m), objective=obj,
        rows=rows, lower=[0] * (2 * m), upper=[1] * (2 * m), block_of=blocks,
        family=GADGET, params={"m": m},
    )
    return inst, pool1, pool2


def triangle_eps_prime(n: int, eps) -> Fraction:
    return min(Fraction(1, 4), Q(eps) / (n // 3))


def gen_triangles(n: int, eps) -> tuple[Instance, list[Cut], list[Cut], Fraction]:
    """Stable set on ``n // 3`` disjoint triangles, padded to ``n`` variables."""
    eps = Q(eps)
    if n < 4 or eps <= 0:
        raise ModelError("triangle family needs n >= 4 and eps > 0")
    m = n // 3
    r = n - 3 * m
    eps_p = triangle_eps_prime(n, eps)
    labels, rows, obj, blocks = [], [], [], []
    pool, pool_t = [], []
    for t in range(1, m + 1):
        idx = [3 * (t - 1) + i for i in range(3)]
        labels += [f"x_{t},{i}" for i in (1, 2, 3)]
        obj += [1, 1, 1]
        blocks += [t, t, t]
        for a, b in ((0, 1), (0, 2), (1, 2)):
            rows.append(Row.make({idx[a]: 1, idx[b]: 1}, LE, 1))
        tri = {j: 1 for j in idx}
        pool.append(Cut.make(f"C_{t}", tri, 1, paired_with=f"Ct_{t}"))
        pool_t.append(Cut.make(f"Ct_{t}", tri, 1 + eps_p, paired_with=f"C_{t}"))
    for q in range(1, r + 1):
        j = 3 * m + q - 1
        labels.append(f"y_{q}")
        obj.append(0)
        blocks.append(None)
        rows.append(Row.make({j: 1}, EQ, 0))
    inst = Instance.build(
        name=f"triangles(n={n},eps={eps})", labels=labels,
        integer=[True] * (3 * m) + [False] * r, objective=obj, rows=rows,
        lower=[0] * n, upper=[1] * n, block_of=blocks,
        family=TRIANGLES, params={"n": n, "eps": eps},
    )
    return inst, pool, pool_t, eps_p


def _blockfamily(n: int, scale: Fraction, name: str, family: str, params: dict) -> Instance:
    if n < 1:
        raise ModelError("block family needs n >= 1")
    M = big_m(n)

    def b(i):
        return i - 1

    def p(i):
        return n + i - 1

    def y(i, k):
        return (1 + k) * n + i - 1

    labels = [f"b_{i}" for i in range(1, n + 1)] + [f"p_{i}" for i in range(1, n + 1)]
    for k in (1, 2, 3):
        labels += [f"y_{i},{k}" for i in range(1, n + 1)]
    obj = [Fraction(24)] * n + [Fraction(M)] * n + [Fraction(4)] * n + [Fraction(8)] * (2 * n)
    rows = []
    for i in range(1, n + 1):
        rows += [
            Row.make({b(i): 2, p(i): 1}, LE, 2),
            Row.make({b(i): 1, y(i, 1): 1, y(i, 2): 1}, LE, 2),
            Row.make({b(i): 1, y(i, 1): 1, y(i, 3): 1}, LE, 2),
            Row.make({b(i): 1, y(i, 2): 1, y(i, 3): 1}, LE, 2),
        ]
    blocks = list(range(1, n + 1)) * 5
    return Instance.build(
        name=name, labels=labels, integer=[True] * (5 * n), objective=[scale * c for c in obj],
        rows=rows, lower=[0] * (5 * n), upper=[1] * (5 * n), block_of=blocks,
        family=family, params=params,
    )


def gen_blockfamily(n: int) -> Instance:
    """The packing family ``I_n`` with ``M = 7n + 8``."""
    return _blockfamily(n, Fraction(1), f"blocks(n={n})", BLOCKS, {"n": n})


def blockfamily_scale(n: int, eta) -> Fraction:
    return Q(eta) / (2 * (big_m(n) + 27))


def gen_scaled_blockfamily(n: int, eta=DEFAULT_ETA) -> Instance:
    """``I_n`` with the objective scaled so every improvement stays below ``eta / 2``."""
    eta = Q(eta)
    if n < 3 or eta <= 0:
        raise ModelError("scaled block family needs n >= 3 and eta > 0")
    return _blockfamily(n, blockfamily_scale(n, eta), f"scaled-blocks(n={n},eta={eta})",
                        SCALED_BLOCKS, {"n": n, "eta": eta})


def blockfamily_opt(n: int) -> int:
    return n * (big_m(n) + 20)


def build(spec: FamilySpec) -> tuple[Instance, dict[str, list[Cut]]]:
    """Instance plus named cut pools for a family spec."""
    p = spec.params
    if spec.family == TOY:
        inst, c1, c2 = gen_toy(p.get("s", Fraction(3, 2)))
        return inst, {"toy": [c1, c2]}
    if spec.family == GADGET:
        inst, c1, c2 = gen_gadget2d(int(p["m"]))
        return inst, {"C1": c1, "C2": c2}
    if spec.family == TRIANGLES:
        inst, c, ct, _ = gen_triangles(int(p["n"]), p.get("eps", 1))
        return inst, {"C": c, "Ctilde": ct}
    if spec.family == BLOCKS:
        return gen_blockfamily(int(p["n"])), {}
    if spec.family == SCALED_BLOCKS:
        return gen_scaled_blockfamily(int(p["n"]), p.get("eta", DEFAULT_ETA)), {}
    raise ModelError(f"unknown family {spec.family!r}")
