import numpy as np
import pytest

from parachar.frobenius import (
    FrobTwist,
    apply_sigma,
    fixed_group,
    is_very_regular,
    predicted_torus_order,
    solve_twisted_lang,
    torus_fixed,
    very_regular_mask,
    vreg_torus_elements,
)
from parachar.matgroup import GroupContext, enumerate_group


@pytest.mark.parametrize(
    "kind, n, q, twist, order",
    [
        ("GL", 2, 2, [1, 2], 96),
        ("GL", 2, 2, [2, 1], 96),
        ("GL", 2, 3, [2, 1], 3888),
        ("SL", 2, 2, [2, 1], 48),
    ],
)
def test_twisted_group_orders(kind, n, q, twist, order):
    # twisting GL_n or SL_n by a Weyl element is an inner form with the same order
    ctx = GroupContext.make(kind, n, q, 1)
    G = fixed_group(ctx, FrobTwist.from_one_line(twist, kind))
    assert len(G) == order


@pytest.mark.parametrize(
    "kind, n, q, twist",
    [("GL", 2, 2, [1, 2]), ("GL", 2, 2, [2, 1]), ("GL", 2, 3, [2, 1]), ("GL", 3, 2, [2, 3, 1]), ("SL", 2, 3, [2, 1])],
)
def test_torus_order_formula(kind, n, q, twist):
    ctx = GroupContext.make(kind, n, q, 1)
    tw = FrobTwist.from_one_line(twist, kind)
    assert len(torus_fixed(ctx, tw)) == predicted_torus_order(ctx, tw)


def test_fixed_points_are_fixed_and_closed():
    ctx = GroupContext.make("GL", 2, 2, 1)
    tw = FrobTwist.from_one_line([2, 1])
    G = fixed_group(ctx, tw).group
    img = apply_sigma(G.elems, tw, 1, G.ops)
    assert np.array_equal(img, G.elems)
    prod = G.ops.matmul(G.elems[:, None][:20], G.elems[None, :][:, :20])
    assert np.all(G.contains(prod))


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("twist", [[1, 2], [2, 1]])
def test_lang_solution_satisfies_equation(seed, twist):
    ctx = GroupContext.make("GL", 2, 2, 1)
    tw = FrobTwist.from_one_line(twist)
    G = fixed_group(ctx, tw).group
    g = G.elems[(17 * seed + 5) % len(G)]
    sol = solve_twisted_lang(g, tw, 1, ctx, G.m, seed=seed)
    ops, wf = sol.field.ops, sol.field
    assert ops.equal(ops.sigma(sol.x, tw, 1, ctx.f), ops.matmul(wf.to_big(g), sol.x))
    assert np.any(ops.det(sol.x)[..., 0, :] != 0)


def test_lang_for_sl_reaches_determinant_one():
    ctx = GroupContext.make("SL", 2, 3, 1)
    tw = FrobTwist.from_one_line([2, 1], "SL")
    G = fixed_group(ctx, tw).group
    sol = solve_twisted_lang(G.elems[3], tw, 1, ctx, G.m)
    d = sol.field.ops.det(sol.x)
    one = sol.field.ops.identity()[0, 0]
    assert sol.field.ops.equal(d, one)


@pytest.mark.parametrize(
    "q, twist, nonempty",
    [(2, [1, 2], False), (3, [1, 2], True), (2, [2, 1], True)],
)
def test_very_regular_torus_elements(q, twist, nonempty):
    ctx = GroupContext.make("GL", 2, q, 1)
    T = torus_fixed(ctx, FrobTwist.from_one_line(twist))
    assert bool(np.any(vreg_torus_elements(T))) is nonempty


def test_very_regular_single_element_report():
    ctx = GroupContext.make("GL", 2, 3, 1)
    ops = ctx.ops()
    g = ops.from_ints([[1, 0], [0, 2]])
    rep = is_very_regular(g, ctx)
    assert rep.is_vreg
    scalar = ops.from_ints([[2, 0], [0, 2]])
    assert not is_very_regular(scalar, ctx).is_vreg
    G = enumerate_group(ctx)
    mask = very_regular_mask(G.elems, ops)
    # very regularity depends on the reduction mod t only: a union of fibres of size q^4
    assert int(mask.sum()) % 3**4 == 0
