import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parachar.charfn import (
    ClassFunction,
    DomainMismatch,
    TorusChar,
    abelian_structure,
    character_from_phases,
    characters,
    inner_product,
    regular_character,
    torus_class_function,
    trivial_character,
    weyl_conjugate,
    weyl_sigma_group,
)
from parachar.matgroup import GroupContext, WeylElem, enumerate_group

from conftest import make_structure

STRUCTURES = [
    (("GL", 2, 3, 1, None), [2, 2, 3, 3]),
    (("GL", 2, 2, 1, [2, 1]), [2, 2, 3]),
    (("GL", 2, 3, 1, [2, 1]), [8, 3, 3]),
    (("GL", 3, 2, 1, [2, 3, 1]), [2, 2, 2, 7]),
    (("GL", 3, 2, 1, None), [2, 2, 2]),
]


@pytest.mark.parametrize("config, orders", STRUCTURES)
def test_torus_invariants(config, orders):
    *_, S = make_structure(*config)
    assert sorted(S.orders) == sorted(orders)
    assert S.size == int(np.prod(orders))


@pytest.mark.parametrize("config, orders", STRUCTURES[:3])
def test_logs_are_a_homomorphism(config, orders):
    *_, S = make_structure(*config)
    G = S.group
    rng = np.random.default_rng(1)
    i, j = rng.integers(0, len(G), 200), rng.integers(0, len(G), 200)
    k = G.product_index(i, j)
    assert np.array_equal((S.logs[i] + S.logs[j]) % S.orders, S.logs[k] % S.orders)


@pytest.mark.parametrize("config, orders", STRUCTURES[:3])
def test_character_orthogonality(config, orders):
    *_, S = make_structure(*config)
    chars = characters(S)
    M = np.array([c.values for c in chars])
    gram = M @ M.conj().T / S.size
    assert np.allclose(gram, np.eye(len(chars)), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_character_group_operations(gl2_q3, data):
    *_, S = gl2_q3
    exps = st.tuples(*[st.integers(0, o - 1) for o in S.orders])
    a = TorusChar(S, data.draw(exps))
    b = TorusChar(S, data.draw(exps))
    assert np.allclose((a * b).values, a.values * b.values)
    assert (a * a.inverse()).is_trivial
    assert character_from_phases(S, a.phases) == a


def test_phase_table_that_is_not_a_character_is_rejected(gl2_q3):
    *_, S = gl2_q3
    bad = np.zeros(S.size, dtype=np.int64)
    bad[1] = 1
    with pytest.raises(ValueError):
        character_from_phases(S, bad)


def test_weyl_conjugation_is_an_involution(gl2_q3):
    *_, S = gl2_q3
    s = WeylElem((1, 0))
    for c in characters(S):
        assert weyl_conjugate(weyl_conjugate(c, s), s) == c


def test_weyl_sigma_group_sizes():
    from parachar.frobenius import FrobTwist

    assert len(weyl_sigma_group(FrobTwist.split(3))) == 6
    assert len(weyl_sigma_group(FrobTwist.from_one_line([2, 3, 1]))) == 3
    assert len(weyl_sigma_group(FrobTwist.from_one_line([2, 1]))) == 2


def test_inner_products_of_standard_functions():
    G = enumerate_group(GroupContext.make("GL", 2, 2, 1))
    reg, triv = regular_character(G), trivial_character(G)
    assert inner_product(triv, triv) == pytest.approx(1.0)
    assert inner_product(reg, triv) == pytest.approx(1.0)
    assert inner_product(reg, reg) == pytest.approx(len(G))
    assert triv.is_class_function() and reg.is_class_function()


def test_domain_mismatch(gl2_q3):
    *_, S = gl2_q3
    G = enumerate_group(GroupContext.make("GL", 2, 2, 1))
    with pytest.raises(DomainMismatch):
        inner_product(trivial_character(G), torus_class_function(characters(S)[0]))
    with pytest.raises(DomainMismatch):
        ClassFunction(G, np.ones(3))


def test_csv_is_deterministic():
    G = enumerate_group(GroupContext.make("GL", 2, 2, 0))
    f = trivial_character(G)
    text = f.to_csv()
    assert text == f.to_csv()
    assert text.splitlines()[0] == "element,re,im"
    assert len(text.splitlines()) == len(G) + 1
