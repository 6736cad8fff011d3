import numpy as np
import pytest

from parachar.charfn import characters, inner_product, weyl_conjugate, weyl_sigma_group
from parachar.genericity import NotGeneric, depth, is_generic_character
from parachar.induction import (
    NoVeryRegularElement,
    NotFactoringThroughLevi,
    TwistNotSplit,
    direct_count,
    dl_character,
    frobenius_scalar_check,
    induce_split,
    nonvanishing_check,
    verify_mackey,
    vreg_values,
    z_character,
    z_engine,
)
from parachar.matgroup import Parabolic, WeylElem


def _generic(S, T, r=1):
    out = []
    for c in characters(S):
        if depth(c, T) == r:
            rep = is_generic_character(c, T)
            if rep["ge1"] and rep["ge2"]:
                out.append(c)
    return out


def test_fixed_point_formula_matches_ordinary_induction_q2(gl2_q2):
    ctx, tw, T, S = gl2_q2
    for c in characters(S):
        assert np.allclose(z_character(c, tw, ctx).values, induce_split(c, ctx).values, atol=1e-9)


def test_counts_are_nonnegative_integers(gl2_q2_swap):
    ctx, tw, T, S = gl2_q2_swap
    counts = z_engine(ctx, tw).class_counts()
    assert counts.dtype.kind == "i" and counts.min() >= 0


def test_induced_degree_and_frobenius_reciprocity(gl2_q3):
    ctx, tw, T, S = gl2_q3
    G = induce_split(characters(S)[0], ctx).fn.domain
    B_order = len(T) * 3 * 3  # torus times the level-1 unipotent radical
    for c in characters(S)[:6]:
        chi = induce_split(c, ctx)
        assert np.isclose(chi.values[G.identity_index], len(G) / B_order)


def test_split_induction_rejects_twisted_frobenius(gl2_q2_swap):
    ctx, tw, T, S = gl2_q2_swap
    with pytest.raises(TwistNotSplit):
        induce_split(characters(S)[0], ctx, tw=tw)


def test_levi_factorization_is_enforced(gl3_q2):
    ctx, tw, T, S = gl3_q2
    theta = next(c for c in characters(S) if c.exps == (0, 0, 1))
    with pytest.raises(NotFactoringThroughLevi):
        induce_split(theta, ctx, Parabolic(((0, 1), (2,))))


def test_split_q2_has_no_very_regular_anchor(gl2_q2):
    ctx, tw, T, S = gl2_q2
    generic = _generic(S, T)
    with pytest.raises(NoVeryRegularElement):
        dl_character(generic[0], tw, ctx)


def test_dl_character_rejects_non_generic(gl2_q2_swap):
    ctx, tw, T, S = gl2_q2_swap
    with pytest.raises(NotGeneric):
        dl_character(characters(S)[0], tw, ctx)


class TestTwistedDL:
    def test_norm_and_very_regular_values(self, gl2_q2_swap):
        ctx, tw, T, S = gl2_q2_swap
        generic = _generic(S, T)
        assert len(generic) == 6
        for c in generic:
            chi = dl_character(c, tw, ctx)
            assert abs(chi.norm() - 1) < 1e-6
            assert max(v["deviation"] for v in vreg_values(chi, ctx)) < 1e-8
            assert np.isclose(chi.extra["scalar_abs"], 4)

    def test_invariance_under_the_frobenius_weyl_element(self, gl2_q2_swap):
        ctx, tw, T, S = gl2_q2_swap
        assert sorted(tuple(w.one_line()) for w in weyl_sigma_group(tw)) == [(1, 2), (2, 1)]
        s = WeylElem((1, 0))
        for c in _generic(S, T):
            a = dl_character(c, tw, ctx).values
            b = dl_character(weyl_conjugate(c, s), tw, ctx).values
            assert np.abs(a - b).max() < 1e-8

    def test_distinct_orbits_are_orthogonal(self, gl2_q2_swap):
        ctx, tw, T, S = gl2_q2_swap
        chars = {}
        for c in _generic(S, T):
            chars.setdefault(frozenset([c.exps, weyl_conjugate(c, WeylElem((1, 0))).exps]), dl_character(c, tw, ctx))
        fns = list(chars.values())
        assert len(fns) == 3
        for i, a in enumerate(fns):
            for b in fns[i + 1 :]:
                assert abs(inner_product(a.fn, b.fn)) < 1e-8

    def test_weyl_sum_averages_correctly_over_cosets(self, gl2_q2_swap):
        ctx, tw, T, S = gl2_q2_swap
        for c in _generic(S, T):
            assert nonvanishing_check(c, tw, ctx) < 1e-8


def test_generic_characters_are_irreducible_split_q3(gl2_q3):
    ctx, tw, T, S = gl2_q3
    for c in _generic(S, T):
        assert abs(z_character(c, tw, ctx).norm() - 1) < 1e-6


@pytest.mark.parametrize("which", [0, 5, -1])
def test_mackey_gl2(gl2_q3, which):
    ctx, tw, T, S = gl2_q3
    theta = _generic(S, T)[which]
    rep = verify_mackey(theta, ctx, Parabolic.borel(2))
    assert rep.generic and rep.passed
    assert rep.weyl_cosets == rep.weyl_double_cosets == 2
    assert rep.double_cosets == 3
    assert rep.max_off_weyl < 1e-6 and rep.weyl_sum_deviation < 1e-6


def test_mackey_detects_non_generic_contributions(gl2_q3):
    ctx, tw, T, S = gl2_q3
    rep = verify_mackey(characters(S)[0], ctx, Parabolic.borel(2))
    assert not rep.generic and rep.max_off_weyl > 1


def test_mackey_gl3_levi(gl3_q2):
    ctx, tw, T, S = gl3_q2
    theta = next(c for c in characters(S) if c.exps == (0, 1, 1))
    rep = verify_mackey(theta, ctx, Parabolic(((0, 1), (2,))))
    assert rep.generic and rep.passed
    assert rep.weyl_double_cosets == 2


def test_frobenius_scalar(gl2_q2_swap):
    ctx, tw, T, S = gl2_q2_swap
    theta = _generic(S, T)[0]
    rep = frobenius_scalar_check(theta, tw, ctx, m_max=2)
    assert rep.passed and max(rep.residuals) < 1e-6


@pytest.mark.slow
@pytest.mark.parametrize("cls, tau, expected", [(0, 3, 0), (1, 5, 4)])
def test_direct_count_agrees_with_orbit_count(gl2_q2_swap, cls, tau, expected):
    ctx, tw, T, S = gl2_q2_swap
    eng = z_engine(ctx, tw)
    g = int(np.flatnonzero(eng.class_pos == cls)[0])
    assert eng.class_counts()[cls, tau] == expected
    assert direct_count(eng, g, tau) == expected


def test_counts_do_not_depend_on_the_lang_seed(gl2_q2_swap):
    ctx, tw, T, S = gl2_q2_swap
    assert np.array_equal(z_engine(ctx, tw, seed=0).class_counts(), z_engine(ctx, tw, seed=7).class_counts())
