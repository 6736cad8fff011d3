"""Matrix groups GL_n (n <= 3) and SL_2 over F_{q^m}[t]/t^{r+1}.

Group elements travel in batches as int arrays of shape (..., n, n, r+1)
holding field codes. An enumerated group keeps its elements sorted by a
mixed-radix key, so membership and index lookup are a searchsorted away;
cosets, double cosets and conjugacy classes are connected components of the
graph spanned by multiplying with a generating set.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CapExceeded, ParacharError
from .ring import FieldCtx, TruncRing, TruncRingElem

CACHE_FORMAT = 1
DEFAULT_CAP = 10**8


class NotInvertible(ParacharError):
    pass


class CacheMismatch(ParacharError):
    pass


class InvalidGroup(ParacharError):
    pass


@dataclass(frozen=True)
class GroupContext:
    """Which jet group: kind GL (n <= 3) or SL (n = 2), base field F_q, level r."""

    kind: str
    n: int
    field: FieldCtx
    r: int

    def __post_init__(self):
        if self.kind not in ("GL", "SL"):
            raise InvalidGroup(f"unknown kind {self.kind!r}")
        if self.kind == "GL" and not 1 <= self.n <= 3:
            raise InvalidGroup("GL_n needs 1 <= n <= 3")
        if self.kind == "SL" and self.n != 2:
            raise InvalidGroup("only SL_2 is supported")
        if self.r < 0:
            raise InvalidGroup("level r must be non-negative")
        if self.field.m != 1:
            raise InvalidGroup("the context field must be the base field F_q (m = 1)")

    @classmethod
    def make(cls, kind: str, n: int, q: int, r: int) -> "GroupContext":
        from .ring import split_prime_power

        p, f = split_prime_power(q)
        return cls(kind, n, FieldCtx(p, f, 1), r)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def f(self) -> int:
        return self.field.f

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def dim_G(self) -> int:
        return self.n * self.n if self.kind == "GL" else self.n * self.n - 1

    @property
    def dim_G_r(self) -> int:
        return (self.r + 1) * self.dim_G

    @property
    def label(self) -> str:
        return f"{self.kind}_{self.n}"

    def at_level(self, r: int) -> "GroupContext":
        return GroupContext(self.kind, self.n, self.field, r)

    def ops(self, m: int = 1) -> "MatOps":
        return MatOps(self.field.with_m(m), self.n, self.r)

    def predicted_order(self, m: int = 1) -> int:
        Q = self.q**m
        if self.kind == "GL":
            g0 = 1
            for i in range(self.n):
                g0 *= Q**self.n - Q**i
        else:
            g0 = Q * (Q * Q - 1)
        return g0 * Q ** (self.r * self.dim_G)


@dataclass(frozen=True)
class GroupElem:
    """An n x n matrix of truncated-ring elements."""

    entries: tuple[tuple[TruncRingElem, ...], ...]


class MatOps:
    """Batched matrix arithmetic over F_{q^m}[t]/t^{r+1}."""

    def __init__(self, field: FieldCtx, n: int, r: int):
        self.field, self.n, self.r = field, n, r
        self.ring = TruncRing(field, r)
        self.w = r + 1

    def identity(self, shape=()) -> np.ndarray:
        out = np.zeros(tuple(shape) + (self.n, self.n, self.w), dtype=np.int64)
        for i in range(self.n):
            out[..., i, i, 0] = 1
        return out

    def from_ints(self, mat) -> np.ndarray:
        """Constant matrix with prime-field integer entries (e.g. Weyl lifts)."""
        mat = np.asarray(mat, dtype=np.int64) % self.field.p
        out = np.zeros(mat.shape + (self.w,), dtype=np.int64)
        out[..., 0] = mat
        return out

    def matmul(self, a, b) -> np.ndarray:
        R = self.ring
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        shape = np.broadcast_shapes(a.shape[:-3], b.shape[:-3])
        out = np.zeros(shape + (self.n, self.n, self.w), dtype=np.int64)
        for i in range(self.n):
            for j in range(self.n):
                acc = R.mul(a[..., i, 0, :], b[..., 0, j, :])
                for k in range(1, self.n):
                    acc = R.add(acc, R.mul(a[..., i, k, :], b[..., k, j, :]))
                out[..., i, j, :] = acc
        return out

    def det(self, a) -> np.ndarray:
        R = self.ring
        a = np.asarray(a, dtype=np.int64)
        n = self.n
        if n == 1:
            return a[..., 0, 0, :]
        if n == 2:
            return R.sub(R.mul(a[..., 0, 0, :], a[..., 1, 1, :]), R.mul(a[..., 0, 1, :], a[..., 1, 0, :]))
        acc = None
        for perm in itertools.permutations(range(n)):
            term = a[..., 0, perm[0], :]
            for i in range(1, n):
                term = R.mul(term, a[..., i, perm[i], :])
            if _perm_sign(perm) < 0:
                term = R.neg(term)
            acc = term if acc is None else R.add(acc, term)
        return acc

    def adjugate(self, a) -> np.ndarray:
        R = self.ring
        a = np.asarray(a, dtype=np.int64)
        n = self.n
        out = np.zeros_like(a)
        if n == 1:
            out[..., 0, 0, :] = R.one(a.shape[:-3])
            return out
        sub = MatOps(self.field, n - 1, self.r)
        for i in range(n):
            for j in range(n):
                rows = [k for k in range(n) if k != j]
                cols = [k for k in range(n) if k != i]
                minor = sub.det(a[..., rows, :, :][..., :, cols, :])
                out[..., i, j, :] = minor if (i + j) % 2 == 0 else R.neg(minor)
        return out

    def is_invertible(self, a) -> np.ndarray:
        return self.det(a)[..., 0] != 0

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        d = self.det(a)
        if np.any(d[..., 0] == 0):
            raise NotInvertible("reduction mod t is singular")
        dinv = self.ring.inv(d)
        return self.ring.mul(self.adjugate(a), dinv[..., None, None, :])

    def frob(self, a, k: int = 1) -> np.ndarray:
        """Entrywise a -> a^(q^k)."""
        return self.field.frob(a, k)

    def reduce(self, a, level: int) -> np.ndarray:
        return np.asarray(a)[..., : level + 1]

    def keys(self, a) -> np.ndarray:
        """Mixed-radix integer keys; object dtype when they would overflow."""
        a = np.asarray(a, dtype=np.int64)
        flat = a.reshape(a.shape[:-3] + (self.n * self.n * a.shape[-1],))
        size = self.field.size
        digits = flat.shape[-1]
        if digits * np.log2(size) < 62:
            weights = size ** np.arange(digits - 1, -1, -1, dtype=np.int64)
            return flat @ weights
        out = np.empty(flat.shape[:-1], dtype=object)
        for idx in np.ndindex(flat.shape[:-1]):
            k = 0
            for c in flat[idx]:
                k = k * size + int(c)
            out[idx] = k
        return out

    # -- value types ------------------------------------------------------

    def to_elem(self, a) -> GroupElem:
        a = np.asarray(a)
        return GroupElem(tuple(tuple(self.ring.elem(a[i, j]) for j in range(self.n)) for i in range(self.n)))

    def from_elem(self, g: GroupElem) -> np.ndarray:
        if len(g.entries) != self.n:
            raise ValueError("wrong matrix size")
        return np.array([[self.ring.array(x) for x in row] for row in g.entries], dtype=np.int64)

    def encode(self, a) -> list:
        """JSON-friendly nested lists: entry -> t-coefficient -> F_p coordinates."""
        dig = self.field.digits(np.asarray(a))
        return dig.tolist()

    def decode(self, data) -> np.ndarray:
        return self.field.from_digits(np.asarray(data, dtype=np.int64))


def _perm_sign(perm) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def mat_inv(g: GroupElem, ctx: GroupContext, m: int = 1) -> GroupElem:
    ops = ctx.ops(m)
    return ops.to_elem(ops.inv(ops.from_elem(g)))


# -- Weyl group, roots, parabolics ----------------------------------------------


@dataclass(frozen=True)
class WeylElem:
    """Permutation w of {0..n-1} (stored 0-based); the lift sends e_j to +-e_{w(j)}."""

    perm: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"not a permutation: {self.perm}")

    @classmethod
    def identity(cls, n: int) -> "WeylElem":
        return cls(tuple(range(n)))

    @classmethod
    def from_one_line(cls, seq) -> "WeylElem":
        """From 1-based one-line notation."""
        return cls(tuple(int(x) - 1 for x in seq))

    def one_line(self) -> list[int]:
        return [x + 1 for x in self.perm]

    @property
    def n(self) -> int:
        return len(self.perm)

    def __mul__(self, other: "WeylElem") -> "WeylElem":
        return WeylElem(tuple(self.perm[other.perm[i]] for i in range(self.n)))

    def inverse(self) -> "WeylElem":
        inv = [0] * self.n
        for i, x in enumerate(self.perm):
            inv[x] = i
        return WeylElem(tuple(inv))

    def length(self) -> int:
        return sum(1 for i in range(self.n) for j in range(i + 1, self.n) if self.perm[i] > self.perm[j])

    def order(self) -> int:
        k, cur = 1, self
        ident = WeylElem.identity(self.n)
        while cur != ident:
            cur = cur * self
            k += 1
        return k

    def is_identity(self) -> bool:
        return self.perm == tuple(range(self.n))

    def cycles(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for i in range(self.n):
            if i in seen:
                continue
            cyc, j = [], i
            while j not in seen:
                seen.add(j)
                cyc.append(j)
                j = self.perm[j]
            out.append(tuple(cyc))
        return out

    def lift(self, kind: str = "GL") -> np.ndarray:
        """Integer matrix of the chosen lift."""
        n = self.n
        mat = np.zeros((n, n), dtype=np.int64)
        for j in range(n):
            mat[self.perm[j], j] = 1
        if kind == "SL" and _perm_sign(self.perm) < 0:
            # standard SL_2 lift [[0,-1],[1,0]]
            j = next(j for j in range(n) if self.perm[j] < j)
            mat[self.perm[j], j] = -1
        return mat

    def act_on_tuple(self, xs):
        """(w.x)_{w(j)} = x_j, matching conjugation of diagonals by the lift."""
        out = [None] * self.n
        for j, x in enumerate(xs):
            out[self.perm[j]] = x
        return tuple(out)


def weyl_group(n: int) -> list[WeylElem]:
    return [WeylElem(p) for p in itertools.permutations(range(n))]


def simple_reflection(n: int, i: int) -> WeylElem:
    perm = list(range(n))
    perm[i], perm[i + 1] = perm[i + 1], perm[i]
    return WeylElem(tuple(perm))


@dataclass(frozen=True)
class RootDatum:
    """Type A root datum: roots alpha_ij = e_i - e_j."""

    n: int

    @property
    def roots(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(self.n) if i != j]

    @property
    def positive(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(self.n) if i < j]

    def coroot(self, alpha, u, ops: MatOps) -> np.ndarray:
        """alpha^vee(u) = diag with u at i and u^{-1} at j."""
        i, j = alpha
        u = np.asarray(u, dtype=np.int64)
        out = ops.identity(u.shape[:-1])
        out[..., i, i, :] = u
        out[..., j, j, :] = ops.ring.inv(u)
        return out

    def root_subgroup(self, alpha, c, ops: MatOps) -> np.ndarray:
        """u_alpha(c) = 1 + c E_ij."""
        i, j = alpha
        c = np.asarray(c, dtype=np.int64)
        out = ops.identity(c.shape[:-1])
        out[..., i, j, :] = c
        return out

    def evaluate(self, alpha, t, ops: MatOps) -> np.ndarray:
        """alpha(t) = t_i / t_j for diagonal t."""
        i, j = alpha
        t = np.asarray(t)
        return ops.ring.mul(t[..., i, i, :], ops.ring.inv(t[..., j, j, :]))


@dataclass(frozen=True)
class Parabolic:
    """Parabolic containing the diagonal torus, given by an ordered set partition.

    Entry (i, j) may be nonzero iff block(i) comes no later than block(j).
    Contiguous blocks in increasing order give the standard parabolics.
    """

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = sorted(x for b in self.blocks for x in b)
        if flat != list(range(len(flat))) or any(len(b) == 0 for b in self.blocks):
            raise ValueError(f"blocks {self.blocks} do not partition 0..n-1")

    @classmethod
    def standard(cls, composition) -> "Parabolic":
        blocks, start = [], 0
        for size in composition:
            if size <= 0:
                raise ValueError("block sizes must be positive")
            blocks.append(tuple(range(start, start + size)))
            start += size
        return cls(tuple(blocks))

    @classmethod
    def borel(cls, n: int) -> "Parabolic":
        return cls.standard([1] * n)

    @classmethod
    def whole(cls, n: int) -> "Parabolic":
        return cls.standard([n])

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def composition(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    @property
    def is_standard(self) -> bool:
        return self == Parabolic.standard(self.composition)

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        out = [0] * self.n
        for k, b in enumerate(self.blocks):
            for x in b:
                out[x] = k
        return tuple(out)

    @cached_property
    def levi_mask(self) -> np.ndarray:
        b = np.array(self.block_of)
        return b[:, None] == b[None, :]

    @cached_property
    def parabolic_mask(self) -> np.ndarray:
        b = np.array(self.block_of)
        return b[:, None] <= b[None, :]

    def levi_blocks(self) -> tuple[tuple[int, ...], ...]:
        return tuple(sorted(self.blocks))

    def levi_roots(self) -> list[tuple[int, int]]:
        return [(i, j) for (i, j) in RootDatum(self.n).roots if self.block_of[i] == self.block_of[j]]

    def unipotent_roots(self) -> list[tuple[int, int]]:
        return [(i, j) for (i, j) in RootDatum(self.n).roots if self.block_of[i] < self.block_of[j]]

    def weyl_subgroup(self) -> list[WeylElem]:
        return [w for w in weyl_group(self.n) if all(self.block_of[w.perm[i]] == self.block_of[i] for i in range(self.n))]

    def opposite(self) -> "Parabolic":
        return Parabolic(tuple(reversed(self.blocks)))


StdParabolic = Parabolic


# -- membership ---------------------------------------------------------------


SUBGROUPS = ("G", "B", "T", "U", "U_P", "L", "P", "kernel")


def membership(a, subgroup: str, ops: MatOps, P: Parabolic | None = None, s: int = 1) -> np.ndarray:
    """Vectorized pattern test; `kernel` is the congruence subgroup g = 1 mod t^s."""
    a = np.asarray(a, dtype=np.int64)
    n = ops.n
    eye = ops.identity()
    nonzero = np.any(a != 0, axis=-1)
    if subgroup == "G":
        return ops.is_invertible(a)
    if subgroup in ("B", "T", "U"):
        P = Parabolic.borel(n)
        subgroup = {"B": "P", "T": "L", "U": "U_P"}[subgroup]
    if subgroup == "kernel":
        diff = a[..., :s] != eye[..., :s]
        return ~np.any(diff, axis=(-3, -2, -1))
    if P is None:
        raise ValueError(f"subgroup {subgroup} needs a parabolic")
    outside_p = ~P.parabolic_mask
    in_p = ~np.any(nonzero & outside_p, axis=(-2, -1))
    if subgroup == "P":
        return in_p
    outside_l = ~P.levi_mask
    in_l = ~np.any(nonzero & outside_l, axis=(-2, -1))
    if subgroup == "L":
        return in_l
    if subgroup == "U_P":
        lev = np.where(P.levi_mask[..., None], a, eye)
        is_one = ~np.any(lev != eye, axis=(-3, -2, -1))
        return in_p & is_one
    raise ValueError(f"unknown subgroup {subgroup!r}")


def levi_projection(a, P: Parabolic) -> np.ndarray:
    """P -> L: zero the entries outside the Levi blocks."""
    a = np.asarray(a)
    return np.where(P.levi_mask[..., None], a, 0)


# -- enumerated groups --------------------------------------------------------------


class MatGroup:
    """A finite group given by its sorted element array."""

    def __init__(self, ctx: GroupContext, m: int, elems: np.ndarray, label: str = "", sort: bool = True):
        self.ctx, self.m = ctx, m
        self.ops = ctx.ops(m)
        elems = np.asarray(elems, dtype=np.int64)
        keys = self.ops.keys(elems)
        if sort:
            order = np.argsort(keys, kind="stable")
            elems, keys = elems[order], keys[order]
        self.elems = elems
        self.keys = keys
        self.label = label
        self._cache: dict = {}

    def __len__(self) -> int:
        return len(self.elems)

    @property
    def order(self) -> int:
        return len(self.elems)

    def find(self, a, strict: bool = True) -> np.ndarray:
        """Indices of the given matrices; -1 (or an error) when absent."""
        k = self.ops.keys(a)
        if self.keys.dtype == object or np.asarray(k).dtype == object:
            lookup = self._cache.setdefault("dict", {int(x): i for i, x in enumerate(self.keys)})
            flat = np.asarray(k, dtype=object).ravel()
            idx = np.array([lookup.get(int(x), -1) for x in flat], dtype=np.int64).reshape(np.shape(k))
        else:
            pos = np.searchsorted(self.keys, k)
            pos = np.clip(pos, 0, len(self.keys) - 1)
            idx = np.where(self.keys[pos] == k, pos, -1)
        if strict and np.any(idx < 0):
            raise InvalidGroup(f"element not in {self.label or 'group'}")
        return idx

    def contains(self, a) -> np.ndarray:
        return self.find(a, strict=False) >= 0

    @cached_property
    def identity_index(self) -> int:
        return int(self.find(self.ops.identity()))

    @cached_property
    def inverse_index(self) -> np.ndarray:
        return self.find(self.ops.inv(self.elems))

    def left_mul_index(self, a) -> np.ndarray:
        """Indices of a * g for all g."""
        return self.find(self.ops.matmul(a, self.elems))

    def right_mul_index(self, a) -> np.ndarray:
        return self.find(self.ops.matmul(self.elems, a))

    def conj_index(self, a) -> np.ndarray:
        """Indices of a^{-1} g a."""
        ainv = self.ops.inv(a)
        return self.find(self.ops.matmul(self.ops.matmul(ainv, self.elems), a))

    def conj_table(self, xs: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Row k holds the indices of x_k^{-1} g x_k for g = elems[targets]."""
        gs = self.elems[np.asarray(targets)]
        rows = []
        for x in np.asarray(xs):
            a = self.elems[x]
            rows.append(self.find(self.ops.matmul(self.ops.matmul(self.ops.inv(a), gs), a)))
        return np.stack(rows).astype(np.int32) if rows else np.zeros((0, len(gs)), dtype=np.int32)

    @cached_property
    def class_position(self) -> np.ndarray:
        """Position of each element's class in class_reps."""
        return np.searchsorted(self.class_reps, self.class_labels)

    def product_index(self, i, j) -> np.ndarray:
        return self.find(self.ops.matmul(self.elems[i], self.elems[j]))

    def subgroup(self, mask, label: str = "") -> "MatGroup":
        return MatGroup(self.ctx, self.m, self.elems[np.asarray(mask)], label=label, sort=False)

    # -- generators and orbit machinery ---------------------------------------

    def closure_mask(self, gens: np.ndarray) -> np.ndarray:
        """Subgroup generated by the given elements (as a mask)."""
        reached = np.zeros(len(self), dtype=bool)
        reached[self.identity_index] = True
        frontier = np.array([self.identity_index])
        while frontier.size:
            new = []
            for g in gens:
                idx = self.find(self.ops.matmul(self.elems[frontier], g))
                new.append(idx[~reached[idx]])
                reached[idx] = True
            frontier = np.unique(np.concatenate(new)) if new else np.array([], dtype=np.int64)
        return reached

    def generators(self, seed: int = 0) -> np.ndarray:
        """A small generating set, chosen with a seeded RNG and verified by closure."""
        if "gens" not in self._cache:
            rng = np.random.default_rng(seed)
            if len(self) == 1:
                self._cache["gens"] = self.elems[:0]
                return self._cache["gens"]
            picks = list(rng.choice(len(self), size=min(2, len(self)), replace=False))
            while True:
                reached = self.closure_mask(self.elems[picks])
                if reached.all():
                    break
                outside = np.flatnonzero(~reached)
                picks.append(int(rng.choice(outside)))
            self._cache["gens"] = self.elems[sorted(picks)]
        return self._cache["gens"]

    def _components(self, perms: list[np.ndarray]) -> np.ndarray:
        n = len(self)
        if not perms:
            return np.arange(n)
        rows = np.concatenate([np.arange(n)] * len(perms))
        cols = np.concatenate(perms)
        graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
        _, labels = connected_components(graph, directed=True, connection="weak")
        # canonical label: smallest member index
        first = np.full(labels.max() + 1, n, dtype=np.int64)
        np.minimum.at(first, labels, np.arange(n))
        return first[labels]

    @cached_property
    def class_labels(self) -> np.ndarray:
        """Conjugacy class of each element, labelled by its smallest member."""
        return self._components([self.conj_index(g) for g in self.generators()])

    @cached_property
    def class_reps(self) -> np.ndarray:
        return np.unique(self.class_labels)

    @cached_property
    def class_sizes(self) -> dict[int, int]:
        labels, counts = np.unique(self.class_labels, return_counts=True)
        return dict(zip(labels.tolist(), counts.tolist()))

    def coset_labels(self, sub: "MatGroup", side: str = "left") -> np.ndarray:
        """Labels of gH (side='left') or Hg (side='right')."""
        gens = sub.generators()
        if side == "left":
            perms = [self.right_mul_index(h) for h in gens]
        else:
            perms = [self.left_mul_index(h) for h in gens]
        return self._components(perms)

    def double_coset_labels(self, left: "MatGroup", right: "MatGroup") -> np.ndarray:
        perms = [self.left_mul_index(h) for h in left.generators()]
        perms += [self.right_mul_index(h) for h in right.generators()]
        return self._components(perms)

    @cached_property
    def element_orders(self) -> np.ndarray:
        orders = np.zeros(len(self), dtype=np.int64)
        cur = self.elems.copy()
        ident = self.ops.identity()
        k = 1
        while np.any(orders == 0):
            done = np.all(cur == ident, axis=(-3, -2, -1)) & (orders == 0)
            orders[done] = k
            cur = self.ops.matmul(cur, self.elems)
            k += 1
        return orders

    @property
    def exponent(self) -> int:
        return int(np.lcm.reduce(self.element_orders))

    def is_abelian(self) -> bool:
        gens = self.generators()
        for a in gens:
            for b in gens:
                if not np.array_equal(self.ops.matmul(a, b), self.ops.matmul(b, a)):
                    return False
        return True


# -- enumeration -------------------------------------------------------------------


def _level0_elements(ctx: GroupContext, ops: MatOps) -> np.ndarray:
    F = ops.field
    n = ctx.n
    size = F.size
    total = size ** (n * n)
    if total > 5 * 10**7:
        raise CapExceeded(total, 5 * 10**7)
    codes = np.arange(total, dtype=np.int64)
    digits = (codes[:, None] // size ** np.arange(n * n - 1, -1, -1, dtype=np.int64)) % size
    mats = digits.reshape(-1, n, n)[..., None]
    d = MatOps(F, n, 0).det(mats)[..., 0]
    keep = d == 1 if ctx.kind == "SL" else d != 0
    return mats[keep][..., 0]


def _cache_path(cache_dir, ctx: GroupContext, m: int, tag: str = "") -> Path:
    name = f"{ctx.kind}{ctx.n}_p{ctx.p}_f{ctx.f}_m{m}_r{ctx.r}{tag}.npz"
    return Path(cache_dir) / name


def _header(ctx: GroupContext, m: int, count: int, extra: dict | None = None) -> dict:
    h = {
        "format": CACHE_FORMAT,
        "kind": ctx.kind,
        "n": ctx.n,
        "p": ctx.p,
        "f": ctx.f,
        "m": m,
        "r": ctx.r,
        "count": count,
        "modulus": list(ctx.field.with_m(m).modulus),
    }
    if extra:
        h.update(extra)
    return h


def save_group(path: Path, header: dict, elems: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez_compressed(tmp, header=np.array(json.dumps(header, sort_keys=True)), elems=elems)
    tmp.replace(path)


def load_group(path: Path, expected: dict) -> np.ndarray | None:
    if not path.exists():
        return None
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        want = {k: v for k, v in expected.items() if k != "count"}
        got = {k: header.get(k) for k in want}
        if got != want:
            raise CacheMismatch(f"cache {path} has header {header}, expected {want}")
        elems = data["elems"]
    if len(elems) != header["count"]:
        raise CacheMismatch(f"cache {path} is truncated")
    return elems


_MEMO: dict = {}


def enumerate_group(ctx: GroupContext, m: int = 1, cap: int = DEFAULT_CAP, cache_dir=None) -> MatGroup:
    """All of G_r(F_{q^m}) in canonical (sorted-key) order."""
    predicted = ctx.predicted_order(m)
    if predicted > cap:
        raise CapExceeded(predicted, cap)
    memo_key = (ctx, m)
    if memo_key in _MEMO:
        return _MEMO[memo_key]
    ops = ctx.ops(m)
    label = f"{ctx.label}(F_{ctx.q**m}[t]/t^{ctx.r + 1})"
    elems = None
    if cache_dir is not None:
        elems = load_group(_cache_path(cache_dir, ctx, m), _header(ctx, m, predicted))
    if elems is None:
        g0 = _level0_elements(ctx, ops)
        n2 = ctx.n * ctx.n
        size = ops.field.size
        extra = size ** (n2 * ctx.r)
        if ctx.kind == "GL":
            hi_codes = np.arange(extra, dtype=np.int64)
            hi = (hi_codes[:, None] // size ** np.arange(n2 * ctx.r - 1, -1, -1, dtype=np.int64)) % size
            hi = hi.reshape(extra, ctx.r, ctx.n, ctx.n).transpose(0, 2, 3, 1)
            elems = np.empty((len(g0), extra, ctx.n, ctx.n, ctx.r + 1), dtype=np.int64)
            elems[..., 0] = g0[:, None]
            elems[..., 1:] = hi[None]
            elems = elems.reshape(-1, ctx.n, ctx.n, ctx.r + 1)
        else:
            elems = _sl_lifts(ctx, ops, g0)
        if len(elems) != predicted:
            raise AssertionError(f"enumerated {len(elems)} != predicted {predicted}")
        group = MatGroup(ctx, m, elems, label=label)
        elems = group.elems
        if cache_dir is not None:
            save_group(_cache_path(cache_dir, ctx, m), _header(ctx, m, len(elems)), elems)
    group = MatGroup(ctx, m, elems, label=label, sort=False)
    _MEMO[memo_key] = group
    return group


def _sl_lifts(ctx: GroupContext, ops: MatOps, g0: np.ndarray) -> np.ndarray:
    """Lift SL_n(F) level by level: free higher coefficients, then det = 1."""
    size = ops.field.size
    n2 = ctx.n * ctx.n
    cur = g0[..., None]
    for lev in range(1, ctx.r + 1):
        hi_codes = np.arange(size**n2, dtype=np.int64)
        hi = ((hi_codes[:, None] // size ** np.arange(n2 - 1, -1, -1, dtype=np.int64)) % size).reshape(-1, ctx.n, ctx.n)
        nxt = np.empty((len(cur), len(hi), ctx.n, ctx.n, lev + 1), dtype=np.int64)
        nxt[..., :lev] = cur[:, None]
        nxt[..., lev] = hi[None]
        nxt = nxt.reshape(-1, ctx.n, ctx.n, lev + 1)
        d = MatOps(ops.field, ctx.n, lev).det(nxt)
        one = np.zeros(lev + 1, dtype=np.int64)
        one[0] = 1
        cur = nxt[np.all(d == one, axis=-1)]
    return cur


# -- Bruhat decomposition -------------------------------------------------------------


def bruhat_cell_batch(a, ops: MatOps) -> np.ndarray:
    """Permutations w (rows: w(j) per column j) with reduction in B w B."""
    F = ops.field
    g = np.array(np.asarray(a)[..., 0], dtype=np.int64)
    batch = g.shape[:-2]
    g = g.reshape((-1, ops.n, ops.n))
    nb, n = len(g), ops.n
    used = np.zeros((nb, n), dtype=bool)
    perm = np.zeros((nb, n), dtype=np.int64)
    rows = np.arange(nb)
    for j in range(n):
        cand = (g[:, :, j] != 0) & ~used
        if not cand.any(axis=1).all():
            raise NotInvertible("reduction mod t is singular")
        piv = n - 1 - np.argmax(cand[:, ::-1], axis=1)
        perm[:, j] = piv
        used[rows, piv] = True
        pivrow = g[rows, piv]  # (nb, n)
        pinv = F.inv(pivrow[:, j])
        for k in range(n):
            act = (~used[:, k]) & (k < piv)
            if not act.any():
                continue
            factor = F.mul(g[:, k, j], pinv)
            newrow = F.sub(g[:, k], F.mul(factor[:, None], pivrow))
            g[act, k] = newrow[act]
    return perm.reshape(batch + (n,))


def bruhat_cell(g: GroupElem, ctx: GroupContext, m: int = 1) -> WeylElem:
    ops = ctx.ops(m)
    return WeylElem(tuple(int(x) for x in bruhat_cell_batch(ops.from_elem(g), ops)))


def standard_subgroups(G: MatGroup, P: Parabolic | None = None) -> dict[str, MatGroup]:
    """B, T, U (and P, L, U_P when a parabolic is given) inside G."""
    ops = G.ops
    out = {}
    for name in ("B", "T", "U"):
        out[name] = G.subgroup(membership(G.elems, name, ops), label=name)
    if P is not None:
        for name in ("P", "L", "U_P"):
            out[name] = G.subgroup(membership(G.elems, name, ops, P=P), label=name)
    return out


def weyl_lift(w: WeylElem, ctx: GroupContext, ops: MatOps) -> np.ndarray:
    return ops.from_ints(w.lift(ctx.kind))


@dataclass
class BruhatReport:
    s: WeylElem
    w: WeylElem
    case: str
    product_size: int
    expected_size: int
    pieces: dict = field(default_factory=dict)
    disjoint: bool = True
    literal_checked: bool = False
    passed: bool = False

    def to_json(self) -> dict:
        return {
            "s": self.s.one_line(),
            "w": self.w.one_line(),
            "case": self.case,
            "product_size": self.product_size,
            "expected_size": self.expected_size,
            "pieces": self.pieces,
            "disjoint": self.disjoint,
            "literal_checked": self.literal_checked,
            "pass": self.passed,
        }


def verify_bruhat_multiplication(
    ctx: GroupContext, s: WeylElem, w: WeylElem, cap: int = DEFAULT_CAP, cache_dir=None, literal_limit: int = 2 * 10**7
) -> BruhatReport:
    """Check B s B . B w B against the two-case prediction, exhaustively."""
    if s.length() != 1:
        raise ValueError("s must be a simple reflection")
    G = enumerate_group(ctx, 1, cap=cap, cache_dir=cache_dir)
    ops = G.ops
    subs = standard_subgroups(G)
    B = subs["B"]
    labels = G.double_coset_labels(B, B)

    def cell(x: WeylElem) -> np.ndarray:
        lab = labels[int(G.find(weyl_lift(x, ctx, ops)))]
        return labels == lab

    bsb, bwb = cell(s), cell(w)
    sw = s * w
    # the product is the union of the double cosets meeting s.B.w
    sbw = ops.matmul(ops.matmul(weyl_lift(s, ctx, ops), B.elems), weyl_lift(w, ctx, ops))
    hit = np.unique(labels[G.find(sbw)])
    product = np.isin(labels, hit)
    literal = False
    xs, ys = np.flatnonzero(bsb), np.flatnonzero(bwb)
    if len(xs) * len(ys) <= literal_limit:
        direct = np.zeros(len(G), dtype=bool)
        chunk = max(1, 200000 // max(len(ys), 1))
        for start in range(0, len(xs), chunk):
            xa = G.elems[xs[start : start + chunk]]
            prod = ops.matmul(xa[:, None], G.elems[ys][None, :])
            direct[G.find(prod).ravel()] = True
        if not np.array_equal(direct, product):
            raise AssertionError("double-coset product disagrees with literal product")
        literal = True
    pieces: dict = {}
    if sw.length() == w.length() + 1:
        case = "length-additive"
        expected = cell(sw)
        disjoint = True
        pieces["B(sw)B"] = int(expected.sum())
    else:
        case = "length-reducing"
        k = next(i for i in range(ctx.n - 1) if s.perm[i] == i + 1)
        neg_root = (k + 1, k)  # -alpha for alpha = e_k - e_{k+1}
        rd = RootDatum(ctx.n)
        field_size = ops.field.size
        cs = []
        for code in range(field_size ** ctx.r):
            c = np.zeros(ctx.r + 1, dtype=np.int64)
            for k in range(ctx.r):
                c[k + 1] = (code // field_size**k) % field_size
            cs.append(c)
        u = rd.root_subgroup(neg_root, np.array(cs), ops)
        first = ops.matmul(u, weyl_lift(sw, ctx, ops))
        first_mask = np.isin(labels, np.unique(labels[G.find(first)]))
        expected = first_mask | bwb
        disjoint = not np.any(first_mask & bwb)
        pieces["B U_{-alpha,0+} sw B"] = int(first_mask.sum())
        pieces["BwB"] = int(bwb.sum())
    ok = bool(np.array_equal(product, expected)) and disjoint
    return BruhatReport(s, w, case, int(product.sum()), int(expected.sum()), pieces, disjoint, literal, ok)
