import numpy as np
import pytest

from parachar.genericity import GenericElement, NotGeneric
from parachar.matgroup import GroupContext, Parabolic, enumerate_group
from parachar.sheaffn import (
    DegeneratePairing,
    FiniteFn,
    LieLevel,
    convolve,
    delta,
    fourier,
    generic_idempotent,
    hc_support_check,
    lie_idempotent_group,
    nilpotent_mask,
    verify_fourier_induction,
    verify_idempotents,
)

TORUS = ((0,), (1,))


def _ctx(q, kind="GL", r=1):
    return GroupContext.make(kind, 2, q, r)


@pytest.mark.parametrize("q", [2, 3])
def test_trace_pairing_is_nondegenerate_for_gl(q):
    assert LieLevel.full(_ctx(q)).is_nondegenerate()


def test_sl_pairing_degenerates_in_characteristic_two():
    with pytest.raises(DegeneratePairing):
        LieLevel.full(_ctx(2, "SL"))
    assert LieLevel.full(_ctx(3, "SL")).is_nondegenerate()


@pytest.mark.parametrize("q", [2, 3])
def test_nilpotent_cone_has_q_to_the_n_n_minus_one_points(q):
    lie = LieLevel.full(_ctx(q))
    assert int(nilpotent_mask(lie).sum()) == q**2


@pytest.mark.parametrize("q", [2, 3])
def test_fourier_inversion_and_delta(q):
    lie = LieLevel.full(_ctx(q))
    rng = np.random.default_rng(q)
    f = FiniteFn(lie, rng.normal(size=len(lie)) + 1j * rng.normal(size=len(lie)))
    back = fourier(fourier(f)).values / len(lie)
    assert np.allclose(back, f.values[lie.neg_index])
    # the transform of the point mass at zero is constant 1
    assert np.allclose(fourier(delta(lie, lie.zero_index)).values, 1)


def test_convolution_with_identity_delta_is_neutral():
    G = enumerate_group(_ctx(2))
    rng = np.random.default_rng(0)
    f = FiniteFn(G, rng.normal(size=len(G)))
    e = delta(G, G.identity_index)
    assert np.allclose(convolve(e, f).values, f.values)
    assert np.allclose(convolve(f, e).values, f.values)


@pytest.mark.parametrize("q, X", [(2, (0, 1)), (2, (1, 0)), (3, (0, 1)), (3, (1, 2)), (3, (2, 0))])
def test_idempotents_and_orthogonality(q, X):
    rep = verify_idempotents(_ctx(q), GenericElement(X, 1, TORUS))
    assert rep["max_deviation"] < 1e-8, rep


@pytest.mark.parametrize("q, X", [(2, (0, 1)), (3, (0, 1)), (3, (1, 2))])
def test_parabolic_induction_of_levi_idempotent(q, X):
    rep = verify_fourier_induction(_ctx(q), GenericElement(X, 1, TORUS))
    assert rep["max_deviation"] < 1e-8
    assert rep["fourier_inversion"] < 1e-8


@pytest.mark.parametrize("q, X", [(2, (0, 1)), (3, (1, 2))])
def test_harish_chandra_support_on_the_torus(q, X):
    rep = hc_support_check(_ctx(q), GenericElement(X, 1, TORUS))
    assert rep.passed(1e-8), rep.to_json()


def test_group_idempotent_is_a_class_function():
    ctx = _ctx(2)
    G = enumerate_group(ctx)
    f = generic_idempotent(GenericElement((0, 1), 1, TORUS), "G", G).fn.values
    for g in G.generators():
        assert np.allclose(f[G.conj_index(g)], f)


def test_non_generic_element_is_rejected():
    G = enumerate_group(_ctx(2))
    with pytest.raises(NotGeneric):
        generic_idempotent(GenericElement((1, 1), 1, TORUS), "G", G)


def test_orbit_sum_matches_orbit_size():
    # the value at zero counts the orbit, scaled by |g|^{-1}
    ctx = _ctx(3)
    lie = LieLevel.full(ctx)
    G0 = enumerate_group(ctx.at_level(0))
    f = lie_idempotent_group(GenericElement((0, 1), 1, TORUS), lie, G0)
    # regular semisimple split orbit in gl_2(F_3): |GL_2| / |T| = 48 / 4
    assert np.isclose(f.values[lie.zero_index] * len(lie), 12)
