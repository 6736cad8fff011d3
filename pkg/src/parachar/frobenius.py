"""Twisted Frobenius maps, their fixed groups, Lang solving, very regular elements.

sigma(g) = w g^(q) w^{-1} with w a signed permutation matrix. Fixed groups
are found by linear algebra: the fixed points of a q-semilinear map form an
F_p-subspace of the matrix-entry space, and the group is the invertible part
of that subspace.

Solutions of Lang equations generally live over fields of degree 50-200, so
they are computed in a ``BigField`` and returned in its coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bigfield import BigField, Embedding, LinearSolver, nullspace
from .errors import CapExceeded, ParacharError
from .matgroup import (
    GroupContext,
    GroupElem,
    MatGroup,
    MatOps,
    Parabolic,
    WeylElem,
    membership,
)
from .ring import FieldCtx

FIXED_SPACE_CAP = 2 * 10**6


class NoInvertibleSolution(ParacharError):
    pass


class TwistMismatch(ParacharError):
    pass


@dataclass(frozen=True)
class FrobTwist:
    """sigma = Ad(lift(w)) o (q-power map); n = ord(w)."""

    w: WeylElem
    kind: str = "GL"

    @classmethod
    def split(cls, n: int, kind: str = "GL") -> "FrobTwist":
        return cls(WeylElem.identity(n), kind)

    @classmethod
    def from_one_line(cls, seq, kind: str = "GL") -> "FrobTwist":
        return cls(WeylElem.from_one_line(seq), kind)

    @property
    def n(self) -> int:
        return self.w.order()

    @property
    def rank(self) -> int:
        return self.w.n

    @property
    def is_split(self) -> bool:
        return self.w.is_identity()

    def lift(self) -> np.ndarray:
        return self.w.lift(self.kind)

    def lift_power(self, k: int) -> np.ndarray:
        """Integer matrix lift^k (entries stay in {0, +-1})."""
        base = self.lift()
        out = np.eye(self.rank, dtype=np.int64)
        for _ in range(k % (2 * self.n) if self.kind == "SL" else k % self.n):
            out = out @ base
        return out

    def serialize(self, q: int) -> dict:
        return {"perm": self.w.one_line(), "q": q, "n": self.n}

    def cycle_type(self) -> list[int]:
        return sorted(len(c) for c in self.w.cycles())


def apply_sigma(a, tw: FrobTwist, k: int, ops: MatOps) -> np.ndarray:
    """sigma^k on a batch of matrices over a tabled field."""
    lift = ops.from_ints(tw.lift_power(k))
    liftinv = ops.from_ints(np.round(np.linalg.inv(tw.lift_power(k))).astype(np.int64))
    return ops.matmul(ops.matmul(lift, ops.frob(a, k)), liftinv)


def apply_sigma_elem(g: GroupElem, tw: FrobTwist, k: int, ctx: GroupContext, m: int) -> GroupElem:
    ops = ctx.ops(m)
    return ops.to_elem(apply_sigma(ops.from_elem(g), tw, k, ops))


# -- fixed groups -----------------------------------------------------------------


@dataclass
class FixedGroup:
    """Elements of G_r(F_{q^m}) fixed by Ad(conjugator) o sigma^k."""

    group: MatGroup
    tw: FrobTwist
    k: int
    conjugator: np.ndarray | None
    pattern: str

    @property
    def m(self) -> int:
        return self.group.m

    @property
    def elems(self) -> np.ndarray:
        return self.group.elems

    def __len__(self) -> int:
        return len(self.group)

    def header(self) -> dict:
        return {"twist": self.tw.w.one_line(), "k": self.k, "pattern": self.pattern}


def default_extension(tw: FrobTwist, k: int) -> int:
    """Degree m over F_q containing all fixed points of sigma^k."""
    wk = WeylElem.identity(tw.rank)
    for _ in range(k):
        wk = wk * tw.w
    return k * wk.order()


def _pattern_mask(pattern: str, n: int) -> np.ndarray:
    if pattern == "all":
        return np.ones((n, n), dtype=bool)
    if pattern == "diagonal":
        return np.eye(n, dtype=bool)
    raise ValueError(f"unknown pattern {pattern!r}")


def fixed_space_basis(ops: MatOps, semilinear, mask: np.ndarray) -> np.ndarray:
    """F_p-basis of {X supported on mask : semilinear(X) = X}, as code arrays."""
    F = ops.field
    deg = F.degree
    pos = [(i, j) for i in range(ops.n) for j in range(ops.n) if mask[i, j]]
    dim = len(pos) * ops.w * deg
    basis = np.zeros((dim, ops.n, ops.n, ops.w), dtype=np.int64)
    k = 0
    for i, j in pos:
        for lev in range(ops.w):
            for d in range(deg):
                basis[k, i, j, lev] = F.p**d
                k += 1
    images = semilinear(basis)

    def coords(arr):
        dig = F.digits(arr)  # (dim, n, n, w, deg)
        return np.stack([dig[:, i, j].reshape(len(arr), -1) for i, j in pos], axis=1).reshape(len(arr), -1)

    mat = (coords(images) - coords(basis)).T % F.p
    kern = nullspace(mat, F.p)
    out = np.zeros((len(kern), ops.n, ops.n, ops.w), dtype=np.int64)
    for b, vec in enumerate(kern):
        vec = vec.reshape(len(pos), ops.w, deg)
        for t, (i, j) in enumerate(pos):
            out[b, i, j] = F.from_digits(vec[t])
    return out


def span_elements(ops: MatOps, basis: np.ndarray, cap: int = FIXED_SPACE_CAP) -> np.ndarray:
    """All F_p-combinations of the basis, as code arrays."""
    F = ops.field
    p, d = F.p, len(basis)
    total = p**d
    if total > cap:
        raise CapExceeded(total, cap)
    combos = (np.arange(total, dtype=np.int64)[:, None] // p ** np.arange(d, dtype=np.int64)) % p
    dig_basis = F.digits(basis)  # (d, n, n, w, deg)
    dig = np.tensordot(combos, dig_basis, axes=(1, 0)) % p
    return F.from_digits(dig)


def fixed_group(
    ctx: GroupContext,
    tw: FrobTwist,
    k: int = 1,
    conjugator=None,
    m: int | None = None,
    pattern: str = "all",
    cap: int = FIXED_SPACE_CAP,
) -> FixedGroup:
    """All g with (Ad(conjugator) o sigma^k)(g) = g, over F_{q^m}."""
    if tw.rank != ctx.n:
        raise TwistMismatch("twist rank differs from the group rank")
    if m is None:
        if conjugator is not None:
            raise ValueError("pass the working extension m together with a conjugator")
        m = default_extension(tw, k)
    ops = ctx.ops(m)
    conj = None if conjugator is None else np.asarray(conjugator, dtype=np.int64)
    conj_inv = None if conj is None else ops.inv(conj)

    def semilinear(x):
        y = apply_sigma(x, tw, k, ops)
        if conj is not None:
            y = ops.matmul(ops.matmul(conj, y), conj_inv)
        return y

    basis = fixed_space_basis(ops, semilinear, _pattern_mask(pattern, ctx.n))
    cand = span_elements(ops, basis, cap)
    d = ops.det(cand)
    if ctx.kind == "SL":
        one = np.zeros(ctx.r + 1, dtype=np.int64)
        one[0] = 1
        keep = np.all(d == one, axis=-1)
    else:
        keep = d[..., 0] != 0
    group = MatGroup(ctx, m, cand[keep], label=f"fixed({tw.w.one_line()},k={k},{pattern})")
    return FixedGroup(group, tw, k, conj, pattern)


def torus_fixed(ctx: GroupContext, tw: FrobTwist, k: int = 1) -> FixedGroup:
    return fixed_group(ctx, tw, k, pattern="diagonal")


def predicted_torus_order(ctx: GroupContext, tw: FrobTwist) -> int:
    """prod_j (q^{c_j} - 1) q^{c_j r} over the cycles of w (GL); SL_2 handled separately."""
    q, r = ctx.q, ctx.r
    if ctx.kind == "SL":
        c = tw.cycle_type()
        if c == [1, 1]:
            return (q - 1) * q**r
        return (q + 1) * q**r
    out = 1
    for c in tw.cycle_type():
        out *= (q**c - 1) * q ** (c * r)
    return out


# -- matrices over a big field -----------------------------------------------------


class BigMatOps:
    """Matrix arithmetic over W[t]/t^{r+1}, W a BigField; arrays (..., n, n, r+1, D)."""

    def __init__(self, big: BigField, n: int, r: int):
        self.big, self.n, self.r, self.w = big, n, r, r + 1

    def identity(self, shape=()) -> np.ndarray:
        out = np.zeros(tuple(shape) + (self.n, self.n, self.w, self.big.D), dtype=np.int64)
        for i in range(self.n):
            out[..., i, i, 0, 0] = 1
        return out

    def from_ints(self, mat) -> np.ndarray:
        mat = np.asarray(mat, dtype=np.int64) % self.big.p
        out = np.zeros(mat.shape + (self.w, self.big.D), dtype=np.int64)
        out[..., 0, 0] = mat
        return out

    def ring_mul(self, a, b):
        W = self.big
        shape = np.broadcast_shapes(a.shape, b.shape)
        out = np.zeros(shape, dtype=np.int64)
        for i in range(self.w):
            for j in range(self.w - i):
                out[..., i + j, :] += W.mul(a[..., i, :], b[..., j, :])
        return out % W.p

    def ring_inv(self, a):
        W = self.big
        out = np.zeros_like(a)
        a0inv = W.inv(a[..., 0, :])
        out[..., 0, :] = a0inv
        for k in range(1, self.w):
            acc = np.zeros(a.shape[:-2] + (W.D,), dtype=np.int64)
            for i in range(1, k + 1):
                acc += W.mul(a[..., i, :], out[..., k - i, :])
            out[..., k, :] = W.neg(W.mul(a0inv, acc % W.p))
        return out

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        shape = np.broadcast_shapes(a.shape[:-4], b.shape[:-4])
        out = np.zeros(shape + (self.n, self.n, self.w, self.big.D), dtype=np.int64)
        for i in range(self.n):
            for j in range(self.n):
                acc = 0
                for k in range(self.n):
                    acc = acc + self.ring_mul(a[..., i, k, :, :], b[..., k, j, :, :])
                out[..., i, j, :, :] = acc % self.big.p
        return out

    def det(self, a):
        a = np.asarray(a, dtype=np.int64)
        n, p = self.n, self.big.p
        if n == 1:
            return a[..., 0, 0, :, :]
        if n == 2:
            return (self.ring_mul(a[..., 0, 0, :, :], a[..., 1, 1, :, :]) - self.ring_mul(a[..., 0, 1, :, :], a[..., 1, 0, :, :])) % p
        acc = 0
        import itertools

        for perm in itertools.permutations(range(n)):
            term = a[..., 0, perm[0], :, :]
            for i in range(1, n):
                term = self.ring_mul(term, a[..., i, perm[i], :, :])
            sign = 1
            for i in range(n):
                for j in range(i + 1, n):
                    if perm[i] > perm[j]:
                        sign = -sign
            acc = acc + sign * term
        return acc % p

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        n, p = self.n, self.big.p
        adj = np.zeros_like(a)
        if n == 1:
            adj[..., 0, 0, 0, 0] = 1
        else:
            sub = BigMatOps(self.big, n - 1, self.r)
            for i in range(n):
                for j in range(n):
                    rows = [k for k in range(n) if k != j]
                    cols = [k for k in range(n) if k != i]
                    minor = sub.det(a[..., rows, :, :, :][..., :, cols, :, :])
                    adj[..., i, j, :, :] = minor if (i + j) % 2 == 0 else (-minor) % p
        d = self.det(a)
        if np.any(self.big.is_zero(d[..., 0, :])):
            raise NoInvertibleSolution("matrix is not invertible")
        dinv = self.ring_inv(d)
        return self.ring_mul(adj, dinv[..., None, None, :, :])

    def frob(self, a, e: int):
        """Entrywise a -> a^(p^e)."""
        return self.big.frob(a, e)

    def sigma(self, a, tw: FrobTwist, k: int, f: int):
        lift = self.from_ints(tw.lift_power(k))
        liftinv = self.from_ints(np.round(np.linalg.inv(tw.lift_power(k))).astype(np.int64))
        return self.matmul(self.matmul(lift, self.frob(a, f * k)), liftinv)

    def equal(self, a, b) -> bool:
        return bool(np.array_equal(np.asarray(a) % self.big.p, np.asarray(b) % self.big.p))


class WorkingField:
    """A BigField with an embedding of a tabled field F_{q^m} and matrix ops."""

    def __init__(self, ctx: GroupContext, m: int, degree: int):
        if degree % (ctx.f * m):
            raise ValueError("working degree must be a multiple of f*m")
        self.ctx, self.m = ctx, m
        self.big = BigField(ctx.p, degree)
        self.small = ctx.field.with_m(m)
        self.emb = Embedding(self.small, self.big)
        self.ops = BigMatOps(self.big, ctx.n, ctx.r)
        self.solver_cache: dict = {}

    @property
    def degree(self) -> int:
        return self.big.D

    def to_big(self, codes) -> np.ndarray:
        return self.emb.to_big(codes)

    def from_big(self, vecs) -> np.ndarray:
        return self.emb.from_big(vecs)


@dataclass
class LangSolution:
    """x over the working field with sigma^k(x) = left . x . right, verified."""

    x: np.ndarray
    field: WorkingField
    k: int

    def encode(self) -> list:
        return self.x.tolist()


def _lang_operator(wf: WorkingField, tw: FrobTwist, k: int, left0, right0) -> np.ndarray:
    """F_p-matrix of X -> sigma^k(X) - left0 X right0 on M_n(W)."""
    big, n = wf.big, wf.ctx.n
    D = big.D
    dim = n * n * D
    basis = np.zeros((dim, n, n, 1, D), dtype=np.int64)
    idx = 0
    for i in range(n):
        for j in range(n):
            for d in range(D):
                basis[idx, i, j, 0, d] = 1
                idx += 1
    lvl0 = BigMatOps(big, n, 0)
    img = lvl0.sigma(basis, tw, k, wf.ctx.f)
    img = (img - lvl0.matmul(lvl0.matmul(left0[None, :, :, :1, :], basis), right0[None, :, :, :1, :])) % big.p
    return img.reshape(dim, dim).T


def solve_lang_big(
    wf: WorkingField,
    tw: FrobTwist,
    k: int,
    left: np.ndarray,
    right: np.ndarray,
    rng: np.random.Generator,
    max_tries: int = 200,
) -> LangSolution:
    """Find invertible x over W[t]/t^{r+1} with sigma^k(x) = left x right."""
    big, ops = wf.big, wf.ops
    n, w, D, p = wf.ctx.n, ops.w, big.D, big.p
    key = (tw, k, np.ascontiguousarray(left[:, :, 0]).tobytes(), np.ascontiguousarray(right[:, :, 0]).tobytes())
    solver = wf.solver_cache.get(key)
    if solver is None:
        op = _lang_operator(wf, tw, k, left[..., :, :, 0:1, :], right[..., :, :, 0:1, :])
        solver = LinearSolver(op, p)
        if len(wf.solver_cache) < 4096:
            wf.solver_cache[key] = solver
    kern = solver.kernel()
    if len(kern) == 0:
        raise NoInvertibleSolution("level-0 Lang system has no nonzero solution")
    lvl0 = BigMatOps(big, n, 0)
    x0 = None
    for _ in range(max_tries):
        coeffs = rng.integers(0, p, size=len(kern))
        cand = (coeffs @ kern) % p
        mat = cand.reshape(1, n, n, 1, D)
        if not big.is_zero(lvl0.det(mat)[0, 0]):
            x0 = mat[0, :, :, 0, :]
            break
    if x0 is None:
        raise NoInvertibleSolution("no invertible level-0 solution found; working field too small?")
    x = np.zeros((n, n, w, D), dtype=np.int64)
    x[:, :, 0, :] = x0
    for lev in range(1, w):
        # sigma^k(x_l) - L0 x_l R0 = sum over (a, b, c), b < l, a + b + c = l of L_a x_b R_c
        rhs = np.zeros((n, n, D), dtype=np.int64)
        for a in range(lev + 1):
            for b in range(lev):
                c = lev - a - b
                if c < 0:
                    continue
                term = lvl0.matmul(
                    lvl0.matmul(left[:, :, a : a + 1, :], x[:, :, b : b + 1, :]),
                    right[:, :, c : c + 1, :],
                )
                rhs = (rhs + term[:, :, 0, :]) % p
        sol = solver.solve(rhs.reshape(-1))
        if sol is None:
            raise NoInvertibleSolution(f"level {lev} Lang system inconsistent; working field too small")
        x[:, :, lev, :] = sol.reshape(n, n, D)
    lhs = ops.sigma(x, tw, k, wf.ctx.f)
    rhs_full = ops.matmul(ops.matmul(left, x), right)
    if not ops.equal(lhs, rhs_full):
        raise NoInvertibleSolution("substitution check failed")
    return LangSolution(x, wf, k)


def lang_degree(ctx: GroupContext, k: int, order_bound: int, m: int = 1) -> int:
    """Working degree over F_p: f * lcm(k * order_bound, m)."""
    return ctx.f * math.lcm(k * order_bound, m)


def solve_twisted_lang(
    g,
    tw: FrobTwist,
    k: int,
    ctx: GroupContext,
    m: int,
    conjugator=None,
    seed: int = 0,
    order_bound: int | None = None,
    wf: WorkingField | None = None,
) -> LangSolution:
    """x with sigma^k(x) = g x (or sigma^k(x) = g x conjugator^{-1}).

    g (and the conjugator) are code arrays over F_{q^m}. The working field is
    F_{q^{k K}} with K a multiple of the orders involved.
    """
    ops = ctx.ops(m)
    g = np.asarray(g, dtype=np.int64)
    if order_bound is None:
        order_bound = _element_order(g, ops)
        if conjugator is not None:
            order_bound = math.lcm(order_bound, _element_order(np.asarray(conjugator), ops))
    if wf is None:
        wf = WorkingField(ctx, m, lang_degree(ctx, k, order_bound, m))
    left = wf.to_big(g)
    if conjugator is None:
        right = wf.ops.identity()
    else:
        right = wf.to_big(ops.inv(np.asarray(conjugator, dtype=np.int64)))
    sol = solve_lang_big(wf, tw, k, left, right, np.random.default_rng(seed))
    if ctx.kind == "SL":
        sol = _fix_det_right(sol, tw, k, ctx)
    return sol


def _element_order(a, ops: MatOps, limit: int = 10**6) -> int:
    cur = np.asarray(a, dtype=np.int64)
    ident = ops.identity()
    k = 1
    while not np.array_equal(cur, ident):
        cur = ops.matmul(cur, a)
        k += 1
        if k > limit:
            raise ValueError("element order exceeds limit")
    return k


def _fix_det_right(sol: LangSolution, tw: FrobTwist, k: int, ctx: GroupContext) -> LangSolution:
    """Right-multiply by a sigma^k-fixed element of GL_n to reach det 1."""
    wf = sol.field
    gl = GroupContext("GL", ctx.n, ctx.field, ctx.r)
    fixed = fixed_group(gl, tw, k)
    fm = fixed.m
    big = wf.big
    if big.D % (ctx.f * fm):
        raise NoInvertibleSolution("working field does not contain the fixed group field")
    emb = Embedding(ctx.field.with_m(fm), big)
    d = wf.ops.det(sol.x)
    dinv = wf.ops.ring_inv(d)
    dets = fixed.group.ops.det(fixed.elems)
    target = emb.from_big(dinv)
    hit = np.flatnonzero(np.all(dets == target, axis=-1))
    if hit.size == 0:
        raise NoInvertibleSolution("no fixed element with the required determinant")
    e = emb.to_big(fixed.elems[hit[0]])
    return LangSolution(wf.ops.matmul(sol.x, e), wf, sol.k)


# -- very regular elements ----------------------------------------------------------


@dataclass(frozen=True)
class VeryRegularReport:
    element: list
    is_vreg: bool
    charpoly: list[int]
    witness: dict

    def to_json(self) -> dict:
        return {"element": self.element, "is_vreg": self.is_vreg, "charpoly": self.charpoly, "witness": self.witness}


def char_poly_codes(a, ops: MatOps) -> np.ndarray:
    """Coefficients (c_0..c_{n-1}, 1) of det(x - a) for the reductions mod t."""
    F = ops.field
    a0 = np.asarray(a)[..., 0]
    n = ops.n
    shape = a0.shape[:-2]
    out = np.zeros(shape + (n + 1,), dtype=np.int64)
    out[..., n] = 1
    tr = a0[..., 0, 0]
    for i in range(1, n):
        tr = F.add(tr, a0[..., i, i])
    out[..., n - 1] = F.neg(tr)
    lvl0 = MatOps(F, n, 0)
    det = lvl0.det(np.asarray(a)[..., :1])[..., 0]
    if n == 2:
        out[..., 0] = det
    elif n == 3:
        c2 = np.zeros(shape, dtype=np.int64)
        for i in range(3):
            for j in range(i + 1, 3):
                c2 = F.add(c2, F.sub(F.mul(a0[..., i, i], a0[..., j, j]), F.mul(a0[..., i, j], a0[..., j, i])))
        out[..., 1] = c2
        out[..., 0] = F.neg(det)
    else:
        out[..., 0] = F.neg(det)
    return out


def _trim(x: list[int]) -> list[int]:
    x = list(x)
    while x and x[-1] == 0:
        x.pop()
    return x


def _poly_gcd_field(a: list[int], b: list[int], F: FieldCtx) -> list[int]:
    """Euclid over F on code lists (low degree first); result not normalized."""
    a, b = _trim(a), _trim(b)
    while b:
        inv = int(F.inv(b[-1]))
        while len(a) >= len(b):
            c = int(F.mul(a[-1], inv))
            s = len(a) - len(b)
            for i, bi in enumerate(b):
                a[s + i] = int(F.sub(a[s + i], F.mul(c, bi)))
            a = _trim(a)
        a, b = b, a
    return a


def _derivative(poly: list[int], F: FieldCtx) -> list[int]:
    out = []
    for i in range(1, len(poly)):
        c = 0
        for _ in range(i % F.p):
            c = int(F.add(c, poly[i]))
        out.append(c)
    return out


def squarefree_mask(polys: np.ndarray, F: FieldCtx) -> np.ndarray:
    """True where the polynomial has no repeated factor (gcd with f' constant)."""
    flat = polys.reshape(-1, polys.shape[-1])
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    res = np.zeros(len(uniq), dtype=bool)
    for k, poly in enumerate(uniq):
        poly = [int(c) for c in poly]
        g = _poly_gcd_field(poly, _derivative(poly, F), F)
        res[k] = len(g) == 1
    return res[inv.reshape(-1)].reshape(polys.shape[:-1])


def very_regular_mask(a, ops: MatOps) -> np.ndarray:
    """Vectorized test: reduction mod t regular semisimple."""
    return squarefree_mask(char_poly_codes(a, ops), ops.field)


def is_very_regular(g, ctx: GroupContext, m: int = 1) -> VeryRegularReport:
    ops = ctx.ops(m)
    a = ops.from_elem(g) if isinstance(g, GroupElem) else np.asarray(g, dtype=np.int64)
    cp = char_poly_codes(a, ops)
    vreg = bool(squarefree_mask(cp, ops.field))
    witness: dict
    if vreg:
        witness = {"regular_semisimple": True}
    else:
        poly = [int(c) for c in cp]
        rep = _poly_gcd_field(poly, _derivative(poly, ops.field), ops.field)
        witness = {"repeated_factor": rep}
        diag0 = a[..., 0]
        if np.all(diag0[~np.eye(ctx.n, dtype=bool)] == 0):
            d = [int(diag0[i, i]) for i in range(ctx.n)]
            pair = next(((i, j) for i in range(ctx.n) for j in range(ctx.n) if i != j and d[i] == d[j]), None)
            if pair is not None:
                witness["root"] = [pair[0] + 1, pair[1] + 1]
    return VeryRegularReport(ops.encode(a), vreg, [int(c) for c in cp], witness)


def unipotent_fixed_order(ctx: GroupContext, tw: FrobTwist, N: int) -> int:
    """|(U cap sigma U)^{Ad(tau^{-1}) sigma^N}| = q^{N (r+1) #(Phi+ cap w Phi+)}."""
    pos = [(i, j) for i in range(ctx.n) for j in range(ctx.n) if i < j]
    w = tw.w.perm
    common = sum(1 for (i, j) in pos if w[i] < w[j])
    return ctx.q ** (N * (ctx.r + 1) * common)


def sigma_unipotent_mask(tw: FrobTwist) -> np.ndarray:
    """Entries allowed off the diagonal in sigma(U) = lift U lift^{-1}."""
    n = tw.rank
    w = tw.w.perm
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i < j:
                mask[w[i], w[j]] = True
    return mask


def sigma_unipotent_membership(a, tw: FrobTwist, identity: np.ndarray) -> np.ndarray:
    """Membership in sigma(U) for tabled (..., n, n, w) or big (..., n, n, w, D) arrays."""
    coef_nd = identity.ndim - 2
    free = sigma_unipotent_mask(tw)[(...,) + (None,) * coef_nd]
    bad = (np.asarray(a) != identity) & ~free
    return ~np.any(bad, axis=tuple(range(-(coef_nd + 2), 0)))


def parabolic_of_twist(tw: FrobTwist) -> Parabolic:
    """sigma(B) as an ordered set partition (a Borel in the order w(0), w(1), ...)."""
    return Parabolic(tuple((tw.w.perm[i],) for i in range(tw.rank)))


def vreg_torus_elements(T: FixedGroup) -> np.ndarray:
    return very_regular_mask(T.elems, T.group.ops)


def in_subgroup(a, name: str, ops: MatOps, P: Parabolic | None = None) -> np.ndarray:
    return membership(a, name, ops, P=P)
