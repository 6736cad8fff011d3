import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parachar.bigfield import BigField, is_irreducible
from parachar.ring import FieldCtx, TruncRing, conway_like_modulus, split_prime_power

FIELDS = [(2, 1, 1), (2, 1, 3), (3, 1, 1), (3, 1, 2), (2, 2, 1), (5, 1, 2)]


@pytest.mark.parametrize("q, expected", [(2, (2, 1)), (4, (2, 2)), (9, (3, 2)), (7, (7, 1))])
def test_split_prime_power(q, expected):
    assert split_prime_power(q) == expected


@pytest.mark.parametrize("p, d", [(2, 1), (2, 4), (3, 3), (5, 2), (2, 24), (3, 8)])
def test_modulus_is_irreducible(p, d):
    if p**d <= 2**20:
        assert is_irreducible(list(conway_like_modulus(p, d)), p)
    assert is_irreducible(list(BigField(p, d).modulus), p)


@pytest.mark.parametrize("p, f, m", FIELDS)
def test_multiplicative_group_is_cyclic_of_right_order(p, f, m):
    F = FieldCtx(p, f, m)
    units = np.arange(1, F.size)
    # every unit satisfies x^(size-1) = 1 and inverses are two-sided
    assert np.all(F.power(units, F.size - 1) == 1)
    assert np.all(F.mul(units, F.inv(units)) == 1)


@pytest.mark.parametrize("p, f, m", FIELDS)
def test_frobenius_is_additive_and_multiplicative(p, f, m):
    F = FieldCtx(p, f, m)
    a = np.arange(F.size)[:, None]
    b = np.arange(F.size)[None, :]
    assert np.array_equal(F.frob(F.add(a, b)), F.add(F.frob(a), F.frob(b)))
    assert np.array_equal(F.frob(F.mul(a, b)), F.mul(F.frob(a), F.frob(b)))
    # F^(degree) is the identity
    assert np.array_equal(F.frob(np.arange(F.size), F.degree), np.arange(F.size))


@pytest.mark.parametrize("p, f, m", FIELDS)
def test_trace_lands_in_prime_field_and_is_additive(p, f, m):
    F = FieldCtx(p, f, m)
    a = np.arange(F.size)
    tr = F.trace_to_prime(a)
    assert tr.min() >= 0 and tr.max() < p
    assert np.array_equal(F.trace_to_prime(F.add(a, a[::-1])), (tr + tr[::-1]) % p)


@settings(max_examples=60, deadline=None)
@given(
    st.sampled_from(FIELDS),
    st.integers(0, 3),
    st.data(),
)
def test_truncated_ring_axioms(field, r, data):
    F = FieldCtx(*field)
    R = TruncRing(F, r)
    coeffs = st.lists(st.integers(0, F.size - 1), min_size=r + 1, max_size=r + 1)
    a, b, c = (np.array(data.draw(coeffs)) for _ in range(3))
    assert np.array_equal(R.mul(R.mul(a, b), c), R.mul(a, R.mul(b, c)))
    assert np.array_equal(R.mul(a, R.add(b, c)), R.add(R.mul(a, b), R.mul(a, c)))
    assert np.array_equal(R.mul(a, b), R.mul(b, a))
    if a[0] != 0:
        assert np.array_equal(R.mul(a, R.inv(a)), R.one())


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(2, 24), (3, 12), (2, 7)]), st.data())
def test_bigfield_fft_multiplication_matches_schoolbook(pd, data):
    p, d = pd
    K = BigField(p, d)
    vec = st.lists(st.integers(0, p - 1), min_size=d, max_size=d)
    a, b, c = (np.array(data.draw(vec), dtype=np.int64) for _ in range(3))
    assert np.array_equal(K.mul(a, b), _schoolbook(K, a, b))
    assert np.array_equal(K.mul(K.mul(a, b), c), K.mul(a, K.mul(b, c)))
    if np.any(a):
        assert np.array_equal(K.mul(a, K.inv(a)), K.one())


def _schoolbook(K: BigField, a, b):
    d, p = K.D, K.p
    full = np.zeros(2 * d - 1, dtype=np.int64)
    for i in range(d):
        full[i : i + d] = (full[i : i + d] + a[i] * b) % p
    mod = np.array(K.modulus, dtype=np.int64)  # monic, low-to-high, length d + 1
    for k in range(2 * d - 2, d - 1, -1):
        c = full[k]
        if c:
            full[k - d : k + 1] = (full[k - d : k + 1] - c * mod) % p
    return full[:d]
