"""Depth of torus characters, the Lie-algebra element they determine, and genericity tests."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .charfn import TorusChar, psi0
from .errors import ParacharError
from .frobenius import FixedGroup, FrobTwist, apply_sigma
from .matgroup import Parabolic, WeylElem, weyl_group
from .ring import FieldCtx


class DepthMismatch(ParacharError):
    pass


class NotGeneric(ParacharError):
    pass


def level_mask(T: FixedGroup, s: int) -> np.ndarray:
    """Elements congruent to 1 modulo t^s."""
    ops = T.group.ops
    ident = ops.identity()
    if s == 0:
        return np.ones(len(T), dtype=bool)
    return np.all(T.elems[..., :s] == ident[..., :s], axis=(-3, -2, -1))


def depth(theta: TorusChar, T: FixedGroup) -> int:
    """Largest s <= r with theta nontrivial on the level-s subgroup (0 if none)."""
    r = T.group.ctx.r
    for s in range(r, 0, -1):
        if np.any(theta.phases[level_mask(T, s)] != 0):
            return s
    return 0


@dataclass(frozen=True)
class GenericElement:
    """Diagonal Lie-algebra element over F_{q^m}, with the Levi it is central for."""

    coords: tuple[int, ...]
    m: int
    blocks: tuple[tuple[int, ...], ...]

    def to_json(self) -> dict:
        return {"coords": list(self.coords), "m": self.m, "levi": [list(b) for b in self.blocks]}

    def act(self, w: WeylElem) -> "GenericElement":
        """(w.X)_{w(j)} = X_j, Levi blocks moved along."""
        coords = tuple(w.act_on_tuple(self.coords))
        blocks = tuple(tuple(sorted(w.perm[i] for i in b)) for b in self.blocks)
        return GenericElement(coords, self.m, blocks)


@dataclass(frozen=True)
class GenericDatum:
    """A generic element together with its depth and Levi, as consumed by factorizations."""

    element: GenericElement
    depth: int
    kind: str = "GL"


def _sigma_compatible_diagonals(T: FixedGroup) -> list[tuple[int, ...]]:
    """Diagonal X over F_{q^m} with sigma(X) = X."""
    ops = T.group.ops
    F = ops.field
    n = ops.n
    cands = np.array(list(itertools.product(range(F.size), repeat=n)), dtype=np.int64)
    mats = np.zeros((len(cands), n, n, ops.w), dtype=np.int64)
    for i in range(n):
        mats[:, i, i, 0] = cands[:, i]
    img = apply_sigma(mats, T.tw, 1, ops)
    keep = np.all(img == mats, axis=(1, 2, 3))
    return [tuple(int(c) for c in row) for row in cands[keep]]


def _level_quotient(T: FixedGroup, s: int) -> tuple[np.ndarray, np.ndarray]:
    """(indices, Y-vectors) of level-s torus elements, Y the t^s diagonal coefficients."""
    idx = np.flatnonzero(level_mask(T, s))
    ys = np.stack([T.elems[idx, i, i, s] for i in range(T.group.ops.n)], axis=1)
    return idx, ys


def _pairing_traces(X, ys: np.ndarray, F: FieldCtx, base: FieldCtx) -> np.ndarray:
    """Tr_{F_q/F_p}(sum_i X_i Y_i) for each row of ys."""
    total = np.zeros(len(ys), dtype=np.int64)
    for i, c in enumerate(X):
        total = F.add(total, F.mul(np.full(len(ys), c, dtype=np.int64), ys[:, i]))
    return base.trace_to_prime(F.restrict_codes(total, base))


def extract_generic_element(theta: TorusChar, T: FixedGroup, s: int | None = None) -> GenericElement:
    """The diagonal X with theta(1 + t^s Y) = psi0(<X, Y>) on the level-s quotient."""
    d = depth(theta, T)
    if s is None:
        s = d
    if s < 1 or d != s:
        raise DepthMismatch(f"character has depth {d}, requested {s}")
    ops = T.group.ops
    F = ops.field
    base = T.group.ctx.field
    idx, ys = _level_quotient(T, s)
    L = theta.structure.exponent
    p = F.p
    target = theta.phases[idx]
    matches = []
    for X in _sigma_compatible_diagonals(T):
        a = _pairing_traces(X, ys, F, base)
        if L % p == 0 and np.array_equal((a * (L // p)) % L, target):
            matches.append(X)
    if not matches:
        raise DepthMismatch("no Lie-algebra element matches the character on its top level")
    n = ops.n
    if T.group.ctx.kind == "GL" and len(matches) != 1:
        raise AssertionError("trace pairing is degenerate on the torus")  # pragma: no cover
    return GenericElement(min(matches), T.m, tuple((i,) for i in range(n)))


def _coords_differ(X: GenericElement, i: int, j: int) -> bool:
    return X.coords[i] != X.coords[j]


def _fixes(X: GenericElement, w: WeylElem, kind: str, F: FieldCtx) -> bool:
    """Whether w fixes X (modulo scalars for SL)."""
    moved = w.act_on_tuple(X.coords)
    if kind == "GL":
        return tuple(moved) == tuple(X.coords)
    diffs = F.sub(np.array(moved, dtype=np.int64), np.array(X.coords, dtype=np.int64))
    return bool(np.all(diffs == diffs[0]))


def is_generic(
    X: GenericElement,
    levi: Parabolic | tuple,
    kind: str = "GL",
    field: FieldCtx | None = None,
    ambient: tuple | None = None,
) -> dict:
    """Both genericity conditions for X relative to the Levi given by blocks.

    With ``ambient`` (blocks of a larger Levi) the conditions are taken inside it.
    """
    blocks = levi.blocks if isinstance(levi, Parabolic) else tuple(tuple(b) for b in levi)
    n = len(X.coords)
    block_of = {i: k for k, b in enumerate(blocks) for i in b}
    amb = tuple(tuple(b) for b in ambient) if ambient is not None else (tuple(range(n)),)
    amb_of = {i: k for k, b in enumerate(amb) for i in b}
    bad_roots = [
        (i, j)
        for i in range(n)
        for j in range(n)
        if i != j and amb_of[i] == amb_of[j] and block_of[i] != block_of[j] and not _coords_differ(X, i, j)
    ]
    ge1 = not bad_roots
    if kind == "SL" and field is None:
        raise ValueError("SL genericity needs the coefficient field")
    ambient_w = [w for w in weyl_group(n) if all(amb_of[w.perm[i]] == amb_of[i] for i in range(n))]
    stab = {tuple(w.perm) for w in ambient_w if _fixes(X, w, kind, field)}
    levi_w = {tuple(w.perm) for w in ambient_w if all(block_of[w.perm[i]] == block_of[i] for i in range(n))}
    ge2 = stab == levi_w
    return {
        "ge1": ge1,
        "ge2": ge2,
        "ge1_witness": [list(bad_roots[0])] if bad_roots else None,
        "stabilizer": sorted([list(WeylElem(s).one_line()) for s in stab]),
    }


def norm_of_coroot_line(T: FixedGroup, alpha: tuple[int, int], r: int) -> np.ndarray:
    """Indices in T^sigma of N(1 + t^r y H_alpha) for all y in F_{q^m}."""
    ops = T.group.ops
    F = ops.field
    i, j = alpha
    N = T.tw.n
    ys = np.arange(F.size, dtype=np.int64)
    u = np.broadcast_to(ops.identity(), (F.size, ops.n, ops.n, ops.w)).copy()
    u[:, i, i, r] = ys
    u[:, j, j, r] = F.neg(ys)
    prod = u.copy()
    cur = u
    for _ in range(1, N):
        cur = apply_sigma(cur, T.tw, 1, ops)
        prod = ops.matmul(prod, cur)
    return T.group.find(prod)


def is_generic_character(theta: TorusChar, T: FixedGroup, levi: Parabolic | None = None) -> dict:
    """Genericity of a top-depth torus character: norm test per root, then the stabilizer test."""
    ctx = T.group.ctx
    r = ctx.r
    d = depth(theta, T)
    if r < 1 or d != r:
        raise DepthMismatch(f"character has depth {d}, expected {r}")
    n = ctx.n
    blocks = levi.blocks if levi is not None else tuple((i,) for i in range(n))
    block_of = {i: k for k, b in enumerate(blocks) for i in b}
    failing = []
    for i in range(n):
        for j in range(n):
            if i == j or block_of[i] == block_of[j]:
                continue
            idx = norm_of_coroot_line(T, (i, j), r)
            if not np.any(theta.phases[idx] != 0):
                failing.append([i, j])
    X = extract_generic_element(theta, T, r)
    X = GenericElement(X.coords, X.m, blocks)
    report = is_generic(X, blocks, ctx.kind, T.group.ops.field)
    return {
        "theta": list(theta.exps),
        "depth": d,
        "ge1": not failing,
        "ge2": report["ge2"],
        "ge1_failing_roots": failing,
        "X_psi": X.to_json(),
    }


def psi_pairing_values(X: GenericElement, T: FixedGroup, s: int) -> np.ndarray:
    """psi0(<X, Y>) over the level-s quotient, for cross-checking extraction."""
    F = T.group.ops.field
    base = T.group.ctx.field
    _, ys = _level_quotient(T, s)
    tr = _pairing_traces(X.coords, ys, F, base)
    return np.exp(2j * np.pi * tr / F.p)


__all__ = [
    "DepthMismatch",
    "NotGeneric",
    "GenericDatum",
    "GenericElement",
    "depth",
    "extract_generic_element",
    "is_generic",
    "is_generic_character",
    "level_mask",
    "norm_of_coroot_line",
    "psi0",
    "psi_pairing_values",
]
