from collections import Counter

import numpy as np
import pytest

from parachar.charfn import characters
from parachar.genericity import (
    DepthMismatch,
    GenericElement,
    depth,
    extract_generic_element,
    is_generic,
    is_generic_character,
    level_mask,
    psi_pairing_values,
)
from parachar.matgroup import WeylElem

from conftest import make_structure


def _brute_depth(theta, T):
    """Depth by direct inspection of diagonal entries: is theta trivial on 1 + t(...)?"""
    r = T.group.ctx.r
    for s in range(r, 0, -1):
        d = np.stack([T.elems[:, i, i, :] for i in range(T.group.ops.n)], axis=1)
        mask = np.all(d[..., 0] == 1, axis=1) & np.all(d[..., 1:s] == 0, axis=(1, 2))
        if np.any(theta.values[mask] != 1):
            if not np.allclose(theta.values[mask], 1):
                return s
    return 0


def test_depth_distribution_split_gl2_q3(gl2_q3):
    ctx, tw, T, S = gl2_q3
    counts = Counter(depth(c, T) for c in characters(S))
    assert counts == {0: 4, 1: 32}
    assert all(depth(c, T) == _brute_depth(c, T) for c in characters(S))


@pytest.mark.parametrize(
    "fixture, generic",
    [("gl2_q3", 24), ("gl2_q2_swap", 6), ("gl2_q2", 2), ("gl3_q2", 0)],
)
def test_generic_counts(fixture, generic, request):
    ctx, tw, T, S = request.getfixturevalue(fixture)
    found = 0
    for c in characters(S):
        if depth(c, T) == ctx.r:
            rep = is_generic_character(c, T)
            found += rep["ge1"] and rep["ge2"]
    assert found == generic


def test_generic_means_distinct_coordinates_for_gl(gl2_q3):
    ctx, tw, T, S = gl2_q3
    for c in characters(S):
        if depth(c, T) != 1:
            continue
        rep = is_generic_character(c, T)
        coords = rep["X_psi"]["coords"]
        assert rep["ge1"] == rep["ge2"] == (coords[0] != coords[1])


def test_extracted_element_reproduces_the_character(gl2_q3):
    ctx, tw, T, S = gl2_q3
    idx = np.flatnonzero(level_mask(T, 1))
    for c in characters(S):
        if depth(c, T) == 1:
            X = extract_generic_element(c, T)
            assert np.allclose(psi_pairing_values(X, T, 1), c.values[idx])


def test_extraction_needs_matching_depth(gl2_q3):
    ctx, tw, T, S = gl2_q3
    trivial = characters(S)[0]
    with pytest.raises(DepthMismatch):
        extract_generic_element(trivial, T)


def test_sl2_in_characteristic_two_separates_the_conditions():
    ctx, tw, T, S = make_structure("SL", 2, 2, 1)
    top = [c for c in characters(S) if depth(c, T) == 1]
    assert top
    for c in top:
        rep = is_generic_character(c, T)
        assert rep["ge1"] and not rep["ge2"]


def test_relative_genericity_inside_a_levi():
    X = GenericElement((0, 0, 1), 1, ((0, 1), (2,)))
    inside = is_generic(X, ((0, 1), (2,)), "GL")
    assert inside["ge1"] and inside["ge2"]
    # inside the Levi (0,1),(2) the torus is not generic, since coordinates 0 and 1 agree
    rel = is_generic(X, ((0,), (1,), (2,)), "GL", ambient=((0, 1), (2,)))
    assert not rel["ge1"] and rel["ge1_witness"] == [[0, 1]]


def test_weyl_action_on_generic_elements():
    X = GenericElement((0, 1, 2), 1, ((0,), (1,), (2,)))
    w = WeylElem((1, 2, 0))
    moved = X.act(w)
    assert [moved.coords[w.perm[j]] for j in range(3)] == list(X.coords)
