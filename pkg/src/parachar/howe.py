"""Howe factorization of torus characters and the iterated induction along a Levi tower."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charfn import ClassFunction, TorusChar, characters
from .errors import ParacharError
from .frobenius import FrobTwist
from .genericity import DepthMismatch, extract_generic_element, is_generic
from .induction import (
    InducedCharacter,
    TwistNotSplit,
    block_det_torus,
    sigma_group,
    sigma_torus,
)
from .matgroup import GroupContext, MatGroup, Parabolic, enumerate_group, levi_projection, membership


class NotLeviSubsystem(ParacharError):
    pass


class UnsupportedKind(ParacharError):
    pass


class InvalidTower(ParacharError):
    pass


Blocks = tuple[tuple[int, ...], ...]


def _canon(blocks) -> Blocks:
    return tuple(sorted(tuple(sorted(int(x) for x in b)) for b in blocks))


def _level_mask(G: MatGroup, s: int) -> np.ndarray:
    """Elements congruent to 1 modulo t^s (all elements for s = 0)."""
    if s <= 0:
        return np.ones(len(G), dtype=bool)
    return membership(G.elems, "kernel", G.ops, s=s)


# -- root levels -------------------------------------------------------------------


@dataclass(frozen=True)
class RootLevelSet:
    """For each level s in 1..r the roots on whose coroot the character dies at level >= s."""

    n: int
    r: int
    levels: dict

    def blocks(self, s: int) -> Blocks:
        """The Levi partition cut out by the roots at level s (level r + 1 is everything)."""
        if s > self.r:
            return (tuple(range(self.n)),)
        return _partition(self.n, self.levels[s])

    @property
    def jumps(self) -> list[int]:
        """Levels s with a root that survives at s + 1 but not at s."""
        out = []
        for s in range(1, self.r + 1):
            upper = self.levels.get(s + 1, None)
            full = {(i, j) for i in range(self.n) for j in range(self.n) if i != j}
            if (upper if upper is not None else full) != self.levels[s]:
                out.append(s)
        return out

    def to_json(self) -> dict:
        return {
            "levels": {str(s): sorted([list(a) for a in roots]) for s, roots in sorted(self.levels.items())},
            "jumps": self.jumps,
        }


def _partition(n: int, roots) -> Blocks:
    """Blocks of the relation generated by roots; raises unless the roots are exactly that relation."""
    parent = list(range(n))

    def root(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in roots:
        parent[root(i)] = root(j)
    groups: dict[int, list[int]] = {}
    for x in range(n):
        groups.setdefault(root(x), []).append(x)
    blocks = _canon(groups.values())
    closed = {(i, j) for b in blocks for i in b for j in b if i != j}
    if closed != set(roots):
        raise NotLeviSubsystem(f"roots {sorted(roots)} are not the roots of a Levi subgroup")
    return blocks


def _coroot_indices(T: MatGroup, i: int, j: int, s: int) -> np.ndarray:
    """Indices of diag(.., u, .., u^{-1}, ..) with u = 1 mod t^s, in positions i and j."""
    ops = T.ops
    ident = ops.identity()
    mask = _level_mask(T, s)
    d = np.stack([T.elems[:, k, k, :] for k in range(ops.n)], axis=1)
    for k in range(ops.n):
        if k not in (i, j):
            mask &= np.all(d[:, k, :] == ident[0, 0], axis=-1)
    prod = ops.ring.mul(d[:, i, :], d[:, j, :])
    mask &= np.all(prod == ident[0, 0], axis=-1)
    return np.flatnonzero(mask)


def _require_split_gl(theta: TorusChar, tw: FrobTwist | None) -> GroupContext:
    ctx = theta.structure.group.ctx
    if ctx.kind != "GL":
        raise UnsupportedKind("the determinant-extension step needs GL_n")
    if tw is not None and not tw.is_split:
        raise TwistNotSplit("Howe factorization is implemented for the split torus")
    return ctx


def root_levels(theta: TorusChar, tw: FrobTwist | None = None) -> RootLevelSet:
    ctx = theta.structure.group.ctx
    if tw is not None and not tw.is_split:
        raise TwistNotSplit("root levels are implemented for the split torus")
    T = theta.structure.group
    n, r = ctx.n, ctx.r
    levels = {}
    for s in range(1, r + 1):
        roots = set()
        for i in range(n):
            for j in range(n):
                if i != j and not np.any(theta.phases[_coroot_indices(T, i, j, s)] != 0):
                    roots.add((i, j))
        _partition(n, roots)
        levels[s] = roots
    return RootLevelSet(n, r, levels)


# -- towers ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoweTower:
    """Levis G^0 < ... < G^d = G, depths r_0 < ... < r_d = r, characters theta_{-1}, theta_0..theta_d."""

    theta: TorusChar
    levis: tuple[Blocks, ...]
    depths: tuple[int, ...]
    base: TorusChar
    chars: tuple[TorusChar, ...]

    @property
    def d(self) -> int:
        return len(self.levis) - 1

    def to_json(self) -> dict:
        return {
            "theta": list(self.theta.exps),
            "levis": [[list(b) for b in L] for L in self.levis],
            "depths": list(self.depths),
            "characters": [list(self.base.exps)] + [list(c.exps) for c in self.chars],
        }


def _det_characters(theta: TorusChar, blocks: Blocks) -> list[TorusChar]:
    """Characters of the torus pulled back from block determinants, in lexicographic order."""
    T = theta.structure.group
    moved = T.find(block_det_torus(T.elems, Parabolic(blocks), T.ops))
    return [c for c in characters(theta.structure) if np.array_equal(c.phases[moved], c.phases)]


def _top_breaking_level(c: TorusChar, blocks: Blocks, below: int) -> int:
    """Largest s < below at which c is nontrivial on some coroot inside the blocks (0 if none)."""
    T = c.structure.group
    for s in range(below - 1, 0, -1):
        for b in blocks:
            for i in b:
                for j in b:
                    if i != j and np.any(c.phases[_coroot_indices(T, i, j, s)] != 0):
                        return s
    return 0


def factorize(theta: TorusChar, tw: FrobTwist | None = None, pick: str = "lexmin") -> HoweTower:
    """Peel off determinant characters from the top Levi down.

    ``pick`` chooses among valid determinant extensions: "lexmin" (canonical) or "lexmax".
    """
    ctx = _require_split_gl(theta, tw)
    if pick not in ("lexmin", "lexmax"):
        raise ValueError(f"unknown pick {pick!r}")
    T = theta.structure.group
    n, r = ctx.n, ctx.r
    current = theta
    blocks: Blocks = (tuple(range(n)),)
    below = r + 1
    levis, chars, depths = [], [], []
    while True:
        s = _top_breaking_level(current, blocks, below)
        agree = _level_mask(T, s + 1)
        options = [
            c for c in _det_characters(theta, blocks) if np.array_equal(c.phases[agree], current.phases[agree])
        ]
        if not options:  # pragma: no cover - coroots dead above s forces an extension
            raise AssertionError("no determinant extension found")
        if s == r:
            # the top level already breaks a coroot: the last character is taken trivial
            chi = next(c for c in options if c.is_trivial)
        else:
            chi = options[0] if pick == "lexmin" else options[-1]
        levis.append(blocks)
        chars.append(chi)
        depths.append(_char_depth(chi))
        current = current * chi.inverse()
        if s == 0:
            break
        roots = {
            (i, j)
            for b in blocks
            for i in b
            for j in b
            if i != j and not np.any(current.phases[_coroot_indices(T, i, j, s)] != 0)
        }
        blocks = _partition(n, roots)
        below = s + 1
    levis.reverse()
    chars.reverse()
    depths.reverse()
    depths[-1] = r
    return HoweTower(theta, tuple(levis), tuple(depths), current, tuple(chars))


def _char_depth(c: TorusChar) -> int:
    T = c.structure.group
    for s in range(T.ctx.r, 0, -1):
        if np.any(c.phases[_level_mask(T, s)] != 0):
            return s
    return 0


def _refines(fine: Blocks, coarse: Blocks) -> bool:
    return all(any(set(b) <= set(c) for c in coarse) for b in fine)


def check_tower(tower: HoweTower) -> None:
    """Raise InvalidTower unless the shape is well formed."""
    n = tower.theta.structure.group.ctx.n
    r = tower.theta.structure.group.ctx.r
    if len(tower.chars) != len(tower.levis) or len(tower.depths) != len(tower.levis):
        raise InvalidTower("levis, depths and characters differ in length")
    if _canon(tower.levis[-1]) != (tuple(range(n)),):
        raise InvalidTower("the top of the tower must be the whole group")
    for lo, hi in zip(tower.levis, tower.levis[1:]):
        if _canon(lo) == _canon(hi) or not _refines(lo, hi):
            raise InvalidTower("the Levi tower is not strictly increasing")
    ds = tower.depths
    if any(a >= b for a, b in zip(ds[:-1], ds[1:-1])) or (len(ds) > 1 and ds[-2] > ds[-1]) or ds[-1] != r:
        raise InvalidTower(f"depths {list(ds)} are not increasing up to {r}")


def verify_factorization(tower: HoweTower) -> bool:
    """Pointwise product plus genericity of each non-top character at its depth."""
    try:
        check_tower(tower)
    except InvalidTower:
        return False
    prod = tower.base
    for c in tower.chars:
        prod = prod * c
    if not np.array_equal(prod.phases, tower.theta.phases):
        return False
    if _char_depth(tower.base) != 0:
        return False
    T = tower.theta.structure.group
    moved_ok = True
    for blocks, c in zip(tower.levis, tower.chars):
        moved = T.find(block_det_torus(T.elems, Parabolic(_canon(blocks)), T.ops))
        moved_ok &= bool(np.array_equal(c.phases[moved], c.phases))
    if not moved_ok:
        return False
    d = tower.d
    if d >= 1 and tower.depths[-2] == tower.depths[-1] and not tower.chars[-1].is_trivial:
        return False
    fixed = sigma_torus(T.ctx, FrobTwist.split(T.ctx.n, T.ctx.kind))
    for i in range(d):
        c, s = tower.chars[i], tower.depths[i]
        if s < 1 or _char_depth(c) != s:
            return False
        try:
            X = extract_generic_element(c, fixed, s)
        except DepthMismatch:
            return False
        rep = is_generic(X, tower.levis[i], "GL", ambient=tower.levis[i + 1])
        if not (rep["ge1"] and rep["ge2"]):
            return False
    return True


# -- iterated induction -----------------------------------------------------------------

_LEVI_GROUPS: dict = {}


def levi_group(ctx: GroupContext, blocks: Blocks, level: int) -> MatGroup:
    """Block-diagonal subgroup of G at the given truncation level."""
    key = (ctx, _canon(blocks), level)
    if key not in _LEVI_GROUPS:
        G = enumerate_group(ctx.at_level(level))
        mask = membership(G.elems, "L", G.ops, Parabolic(_canon(blocks)))
        _LEVI_GROUPS[key] = G if mask.all() else G.subgroup(mask, f"L{list(_canon(blocks))}")
    return _LEVI_GROUPS[key]


def _det_char_values(chi: TorusChar, blocks: Blocks, H: MatGroup) -> np.ndarray:
    """chi through block determinants, on a Levi group at a level no lower than chi's depth."""
    T = chi.structure.group
    dets = block_det_torus(H.elems, Parabolic(_canon(blocks)), H.ops)
    lifted = np.zeros(dets.shape[:-1] + (T.ops.w,), dtype=np.int64)
    lifted[..., : dets.shape[-1]] = dets
    return chi.values[T.find(lifted)]


def _inflate(values: np.ndarray, src: MatGroup, dst: MatGroup) -> np.ndarray:
    if src is dst:
        return values
    return values[src.find(dst.ops.reduce(dst.elems, src.ctx.r))]


_INDUCTION_TABLES: dict = {}


def _induction_table(H: MatGroup, Q: Parabolic, L: MatGroup):
    """(Q indices, their Levi positions in L, conjugation index rows per coset of Q)."""
    key = (id(H), Q, id(L))
    if key not in _INDUCTION_TABLES:
        qmask = membership(H.elems, "P", H.ops, Q)
        q_idx = np.flatnonzero(qmask)
        levi_pos = L.find(levi_projection(H.elems[q_idx], Q))
        if qmask.all():
            conj = None
        else:
            reps = np.unique(H.coset_labels(H.subgroup(qmask), "left"))
            conj = H.conj_table(reps, H.class_reps)
        _INDUCTION_TABLES[key] = (q_idx, levi_pos, conj)
    return _INDUCTION_TABLES[key]


def _induce(H: MatGroup, Q: Parabolic, L: MatGroup, levi_values: np.ndarray) -> np.ndarray:
    """Sum over H/Q of the Levi-inflated function at x^{-1} g x."""
    q_idx, levi_pos, conj = _induction_table(H, Q, L)
    tilde = np.zeros(len(H), dtype=np.complex128)
    tilde[q_idx] = levi_values[levi_pos]
    if conj is None:
        return tilde
    return tilde[conj].sum(axis=0)[H.class_position]


def default_parabolics(tower: HoweTower) -> list[Parabolic]:
    """For each step, the lower Levi's blocks ordered by their smallest index."""
    n = tower.theta.structure.group.ctx.n
    lower = [tuple((i,) for i in range(n))] + list(tower.levis[:-1])
    return [Parabolic(tuple(sorted(_canon(lo), key=min))) for lo in lower]


def tower_induce(tower: HoweTower, parabolics: list[Parabolic] | None = None, tw: FrobTwist | None = None) -> InducedCharacter:
    """Induce level by level: from G^{i-1} to G^i at depth r_{i-1}, inflate to r_i, twist by theta_i."""
    check_tower(tower)
    ctx = tower.theta.structure.group.ctx
    tw = tw or FrobTwist.split(ctx.n, ctx.kind)
    if not tw.is_split:
        raise TwistNotSplit("tower induction is implemented for the split torus")
    if parabolics is None:
        parabolics = default_parabolics(tower)
    if len(parabolics) != len(tower.levis):
        raise InvalidTower("need one parabolic per induction step")
    n = ctx.n
    lower_levis = [tuple((i,) for i in range(n))] + list(tower.levis[:-1])
    for Q, lo, hi in zip(parabolics, lower_levis, tower.levis):
        if _canon(Q.blocks) != _canon(lo):
            raise InvalidTower(f"parabolic {Q.blocks} does not have Levi {lo}")
        if not _refines(lo, hi):
            raise InvalidTower("parabolic Levi is not inside the next Levi")
    torus_blocks = lower_levis[0]
    prev_group = levi_group(ctx, torus_blocks, 0)
    values = _det_char_values(tower.base, torus_blocks, prev_group)
    prev_level = 0
    for Q, hi, level, chi in zip(parabolics, tower.levis, tower.depths, tower.chars):
        H = levi_group(ctx, hi, prev_level)
        induced = _induce(H, Q, prev_group, values)
        H_up = levi_group(ctx, hi, level)
        values = _inflate(induced, H, H_up) * _det_char_values(chi, hi, H_up)
        prev_group, prev_level = H_up, level
    G = sigma_group(ctx, tw)
    if prev_group is not G:
        values = values[prev_group.find(G.elems)]
    fn = ClassFunction(G, values, "tower")
    return InducedCharacter(
        tower.theta, tw, fn, "howe-tower", {"tower": tower.to_json(), "parabolics": [[list(b) for b in Q.blocks] for Q in parabolics]}
    )


def parabolic_choices(tower: HoweTower) -> list[list[Parabolic]]:
    """All orderings of lower-Levi blocks inside each upper block, one list per choice vector."""
    import itertools

    n = tower.theta.structure.group.ctx.n
    lower_levis = [tuple((i,) for i in range(n))] + list(tower.levis[:-1])
    per_step = []
    for lo, hi in zip(lower_levis, tower.levis):
        opts = []
        for perm in itertools.permutations(_canon(lo)):
            # order within each upper block is what matters; the relative order across blocks is irrelevant
            key = tuple(tuple(b for b in perm if set(b) <= set(h)) for h in _canon(hi))
            opts.append((key, Parabolic(tuple(perm))))
        seen, uniq = set(), []
        for key, Q in opts:
            if key not in seen:
                seen.add(key)
                uniq.append(Q)
        per_step.append(uniq)
    return [list(c) for c in itertools.product(*per_step)]


__all__ = [
    "HoweTower",
    "InvalidTower",
    "NotLeviSubsystem",
    "RootLevelSet",
    "UnsupportedKind",
    "check_tower",
    "default_parabolics",
    "factorize",
    "levi_group",
    "parabolic_choices",
    "root_levels",
    "tower_induce",
    "verify_factorization",
]
