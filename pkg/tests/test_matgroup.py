import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parachar.errors import CapExceeded
from parachar.matgroup import (
    GroupContext,
    Parabolic,
    WeylElem,
    bruhat_cell_batch,
    enumerate_group,
    levi_projection,
    membership,
    standard_subgroups,
    weyl_group,
    weyl_lift,
)


@pytest.mark.parametrize(
    "kind, n, q, r, order",
    [
        ("GL", 2, 2, 0, 6),
        ("GL", 2, 2, 1, 96),
        ("GL", 2, 3, 1, 3888),
        ("SL", 2, 2, 1, 48),
        ("SL", 2, 3, 1, 648),
        ("GL", 3, 2, 0, 168),
        ("GL", 2, 4, 0, 180),
    ],
)
def test_enumeration_matches_order_formula(kind, n, q, r, order):
    ctx = GroupContext.make(kind, n, q, r)
    G = enumerate_group(ctx)
    assert len(G) == order == ctx.predicted_order()
    assert np.all(membership(G.elems, "G", G.ops))
    if kind == "SL":
        det = G.ops.det(G.elems)
        assert np.all(det[..., 0] == 1) and np.all(det[..., 1:] == 0)


def test_cap_is_enforced():
    with pytest.raises(CapExceeded):
        enumerate_group(GroupContext.make("GL", 3, 2, 1), cap=1000)


def test_cache_round_trip(tmp_path):
    from parachar import matgroup

    ctx = GroupContext.make("GL", 2, 2, 1)
    matgroup._MEMO.clear()
    a = enumerate_group(ctx, cache_dir=tmp_path)
    assert any(tmp_path.iterdir())
    matgroup._MEMO.clear()
    b = enumerate_group(ctx, cache_dir=tmp_path)
    assert np.array_equal(a.elems, b.elems)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_weyl_group_axioms(n):
    W = weyl_group(n)
    assert len(W) == len(set(tuple(w.perm) for w in W))
    e = WeylElem.identity(n)
    for u, v in itertools.product(W, W):
        assert (u * v).inverse() == v.inverse() * u.inverse()
    assert max(w.length() for w in W) == n * (n - 1) // 2
    assert all((w * w.inverse()) == e for w in W)


@given(st.permutations(range(4)))
def test_one_line_round_trip(perm):
    w = WeylElem(tuple(perm))
    assert WeylElem.from_one_line(w.one_line()) == w
    assert w.act_on_tuple(tuple(range(4)))[w.perm[0]] == 0


@pytest.mark.parametrize("composition", [(1, 1, 1), (2, 1), (1, 2), (3,)])
def test_parabolic_masks(composition):
    P = Parabolic.standard(composition)
    assert np.all(P.parabolic_mask[P.levi_mask])
    assert len(P.unipotent_roots()) == int(np.sum(P.parabolic_mask & ~P.levi_mask))
    assert P.opposite().opposite() == P
    assert len(P.weyl_subgroup()) == int(np.prod([math.factorial(k) for k in composition]))


def test_parabolic_rejects_bad_blocks():
    with pytest.raises(ValueError):
        Parabolic(((0,), (0, 1)))


def test_levi_projection_is_a_homomorphism():
    ctx = GroupContext.make("GL", 3, 2, 0)
    G = enumerate_group(ctx)
    P = Parabolic.standard((2, 1))
    Pm = G.elems[membership(G.elems, "P", G.ops, P)]
    a, b = Pm, Pm[np.random.default_rng(0).permutation(len(Pm))]
    lhs = levi_projection(G.ops.matmul(a, b), P)
    rhs = G.ops.matmul(levi_projection(a, P), levi_projection(b, P))
    assert np.array_equal(lhs, rhs)


def test_standard_subgroup_orders():
    G = enumerate_group(GroupContext.make("GL", 2, 3, 1))
    subs = standard_subgroups(G)
    assert len(subs["T"]) == 36
    assert len(subs["U"]) == 9
    assert len(subs["B"]) == 36 * 9


@pytest.mark.parametrize("q", [2, 3])
def test_bruhat_cells_partition_level_zero(q):
    ctx = GroupContext.make("GL", 2, q, 0)
    G = enumerate_group(ctx)
    cells = bruhat_cell_batch(G.elems, G.ops)
    B = standard_subgroups(G)["B"]
    labels = G.double_coset_labels(B, B)
    # the computed cell is constant on each double coset and separates the two of them
    for lab in np.unique(labels):
        assert len({tuple(c) for c in np.asarray(cells)[labels == lab].reshape(int(np.sum(labels == lab)), -1)}) == 1
    assert len(np.unique(labels)) == 2
    s = WeylElem((1, 0))
    lift = weyl_lift(s, ctx, G.ops)
    assert labels[G.find(lift)] != labels[G.identity_index]


def test_class_count_level_zero():
    # GL_2(F_2) = S_3 has 3 classes; GL_2(F_3) has 8
    for q, k in [(2, 3), (3, 8)]:
        G = enumerate_group(GroupContext.make("GL", 2, q, 0))
        assert len(np.unique(G.class_labels)) == k
