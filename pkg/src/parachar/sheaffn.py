"""Function-level sheaf calculus: Fourier transform on the top-level Lie algebra,
convolution, generic idempotents, Lie-algebra parabolic induction and the
Harish-Chandra transform.

Normalizations are explicit scalars so that composed identities hold exactly:
idempotents carry 1/|l| (torus side) or 1/|g| (group side) and Lie-algebra
induction carries 1/(|P_0| |u|).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .charfn import psi0
from .errors import ParacharError
from .genericity import GenericElement, NotGeneric, is_generic
from .matgroup import GroupContext, MatGroup, Parabolic, enumerate_group
from .ring import FieldCtx


class DegeneratePairing(ParacharError):
    pass


class LieLevel:
    """An F_q-subspace of n x n matrices with the trace pairing <X, Y> = Tr(XY)."""

    def __init__(self, field: FieldCtx, n: int, elems: np.ndarray, name: str = "g", kind: str = "GL"):
        self.field, self.n, self.kind, self.name = field, n, kind, name
        self.elems = np.asarray(elems, dtype=np.int64)  # (N, n, n) codes
        self.keys = self._keys(self.elems)
        order = np.argsort(self.keys)
        self.elems, self.keys = self.elems[order], self.keys[order]

    @classmethod
    def full(cls, ctx: GroupContext) -> "LieLevel":
        """Top-level Lie algebra of the group: all matrices (GL) or trace zero (SL, p odd)."""
        F = ctx.field
        n = ctx.n
        if ctx.kind == "SL" and F.p == 2:
            raise DegeneratePairing("trace pairing on sl_n is degenerate in characteristic 2")
        allm = np.array(list(itertools.product(range(F.size), repeat=n * n)), dtype=np.int64).reshape(-1, n, n)
        if ctx.kind == "SL":
            tr = np.zeros(len(allm), dtype=np.int64)
            for i in range(n):
                tr = F.add(tr, allm[:, i, i])
            allm = allm[tr == 0]
        return cls(F, n, allm, "g", ctx.kind)

    def _keys(self, a: np.ndarray) -> np.ndarray:
        flat = np.asarray(a, dtype=np.int64).reshape(*np.shape(a)[:-2], self.n * self.n)
        radix = self.field.size ** np.arange(self.n * self.n, dtype=np.int64)
        return flat @ radix

    def __len__(self) -> int:
        return len(self.elems)

    def index(self, a, strict: bool = True) -> np.ndarray:
        k = self._keys(a)
        pos = np.clip(np.searchsorted(self.keys, k), 0, len(self.keys) - 1)
        idx = np.where(self.keys[pos] == k, pos, -1)
        if strict and np.any(idx < 0):
            raise KeyError(f"matrix outside {self.name}")
        return idx

    def sub(self, mask: np.ndarray, name: str) -> "LieLevel":
        """Elements supported on the boolean (n, n) mask."""
        keep = np.all(self.elems[:, ~mask] == 0, axis=1)
        return LieLevel(self.field, self.n, self.elems[keep], name, self.kind)

    def torus(self) -> "LieLevel":
        return self.sub(np.eye(self.n, dtype=bool), "t")

    def levi(self, P: Parabolic) -> "LieLevel":
        return self.sub(P.levi_mask, "l")

    def parabolic(self, P: Parabolic) -> "LieLevel":
        return self.sub(P.parabolic_mask, "p")

    def nilradical(self, P: Parabolic) -> "LieLevel":
        return self.sub(P.parabolic_mask & ~P.levi_mask, "u")

    @cached_property
    def zero_index(self) -> int:
        return int(self.index(np.zeros((self.n, self.n), dtype=np.int64)))

    @cached_property
    def neg_index(self) -> np.ndarray:
        return self.index(self.field.neg(self.elems))

    def pairing_traces(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Tr(XY) in F_q for all pairs (rows of a) x (rows of b)."""
        F = self.field
        out = np.zeros((len(a), len(b)), dtype=np.int64)
        for i in range(self.n):
            for j in range(self.n):
                out = F.add(out, F.mul(a[:, i, j][:, None], b[:, j, i][None, :]))
        return out

    def psi_matrix(self, other: "LieLevel | None" = None) -> np.ndarray:
        """psi0(<X_i, Y_j>) with X from this level and Y from other (default self)."""
        other = self if other is None else other
        return psi0(self.pairing_traces(self.elems, other.elems), self.field)

    def is_nondegenerate(self) -> bool:
        tr = self.pairing_traces(self.elems, self.elems)
        return bool(np.all(np.any(tr != 0, axis=1)[np.arange(len(self)) != self.zero_index]))

    def ad_index(self, g: np.ndarray) -> np.ndarray:
        """Indices of g X g^{-1} for level-0 invertible g given as (n, n) codes."""
        F = self.field
        ginv = _mat_inv0(g, F)
        return self.index(_matmul0(_matmul0(g, self.elems, F), ginv, F))

    def encode(self, i: int) -> list:
        return self.elems[i].tolist()


def _matmul0(a, b, F: FieldCtx) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    n = a.shape[-1]
    shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (n, n)
    out = np.zeros(shape, dtype=np.int64)
    for k in range(n):
        out = F.add(out, F.mul(a[..., :, k : k + 1], b[..., k : k + 1, :]))
    return out


def _mat_inv0(g, F: FieldCtx) -> np.ndarray:
    from .matgroup import MatOps

    ops = MatOps(F, g.shape[-1], 0)
    return ops.inv(np.asarray(g)[..., None])[..., 0]


@dataclass
class FiniteFn:
    """Complex values on a finite domain (a LieLevel, a MatGroup or a coset space)."""

    domain: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)

    def support(self, tol: float = 1e-12) -> np.ndarray:
        return np.flatnonzero(np.abs(self.values) > tol)

    def to_json(self, tol: float = 1e-12) -> str:
        enc = getattr(self.domain, "encode", None)
        out = {}
        for i in self.support(tol):
            key = json.dumps(enc(int(i)) if enc else int(i), separators=(",", ":"))
            v = self.values[i]
            out[key] = [round(v.real, 12) + 0.0, round(v.imag, 12) + 0.0]
        return json.dumps(out, sort_keys=True)


# -- Fourier transform and convolution ----------------------------------------------


def fourier(f: FiniteFn) -> FiniteFn:
    """FT(f)(X) = sum_Y f(Y) psi0(<X, Y>)."""
    V = f.domain
    if not isinstance(V, LieLevel):
        raise TypeError("Fourier transform needs a LieLevel domain")
    return FiniteFn(V, V.psi_matrix() @ f.values)


def delta(domain, index: int) -> FiniteFn:
    v = np.zeros(len(domain), dtype=np.complex128)
    v[index] = 1.0
    return FiniteFn(domain, v)


def convolve(f: FiniteFn, g: FiniteFn, tol: float = 0.0) -> FiniteFn:
    """(f * g)(x) = sum_h f(h) g(h^{-1} x); group acting on itself, or a Lie level by translation.

    g.values may carry extra trailing axes (a batch of functions).
    """
    D = f.domain
    if g.domain is not D:
        if len(g.domain) != len(D):
            raise ValueError("convolution operands live on different domains")
    out = np.zeros(g.values.shape, dtype=np.complex128)
    if isinstance(D, MatGroup):
        inv = D.inverse_index
        for h in np.flatnonzero(np.abs(f.values) > tol):
            perm = D.left_mul_index(D.elems[inv[h]])  # h^{-1} x
            out += f.values[h] * g.values[perm]
    elif isinstance(D, LieLevel):
        F = D.field
        for h in np.flatnonzero(np.abs(f.values) > tol):
            perm = D.index(F.sub(D.elems, D.elems[h]))
            out += f.values[h] * g.values[perm]
    else:
        raise TypeError("unsupported convolution domain")
    return FiniteFn(D, out)


# -- generic idempotents ---------------------------------------------------------------


def kernel_indices(group: MatGroup, lie: LieLevel, r: int) -> np.ndarray:
    """Indices in the group of 1 + t^r Y for Y in the Lie level."""
    ops = group.ops
    a = np.broadcast_to(ops.identity(), (len(lie), ops.n, ops.n, ops.w)).copy()
    a[..., r] = ops.field.add(a[..., r], lie.elems)
    return group.find(a)


def lie_element_matrix(X: GenericElement, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.int64)
    for i, c in enumerate(X.coords):
        out[i, i] = c
    return out


def coadjoint_orbit(lie: LieLevel, X: np.ndarray, G0: MatGroup) -> np.ndarray:
    """Indices of the G_0(F_q)-orbit of X (the trace pairing identifies adjoint and coadjoint)."""
    F = lie.field
    mats = G0.elems[..., 0]
    conj = _matmul0(_matmul0(mats, X[None], F), _mat_inv0(mats, F), F)
    return np.unique(lie.index(conj))


def lie_idempotent_levi(X: GenericElement, lie_l: LieLevel) -> FiniteFn:
    """|l|^{-1} psi0(<X, Y>) on the Levi Lie algebra."""
    Xm = lie_element_matrix(X, lie_l.n)
    tr = lie_l.pairing_traces(Xm[None], lie_l.elems)[0]
    return FiniteFn(lie_l, psi0(tr, lie_l.field) / len(lie_l))


def lie_idempotent_group(X: GenericElement, lie_g: LieLevel, G0: MatGroup) -> FiniteFn:
    """|g|^{-1} sum over the G_0(F_q)-orbit X' of psi0(<X', Y>)."""
    orbit = coadjoint_orbit(lie_g, lie_element_matrix(X, lie_g.n), G0)
    vals = lie_g.psi_matrix()[orbit].sum(axis=0) / len(lie_g)
    return FiniteFn(lie_g, vals)


@dataclass
class IdempotentFn:
    """A generic idempotent on a finite group, with its Lie-level profile."""

    fn: FiniteFn
    lie_fn: FiniteFn
    scope: str
    X: GenericElement


def generic_idempotent(
    X: GenericElement,
    scope: str,
    group: MatGroup,
    P: Parabolic | None = None,
    check: bool = True,
) -> IdempotentFn:
    """e (scope='levi', on L_r^sigma) or f (scope='G', on G_r^sigma), extended by zero off the kernel."""
    ctx = group.ctx
    if ctx.r < 1:
        raise NotGeneric("idempotents live on the top level, which needs r >= 1")
    lie_g = LieLevel.full(ctx)
    P = P or Parabolic.borel(ctx.n)
    if check:
        rep = is_generic(GenericElement(X.coords, X.m, P.blocks), P.blocks, ctx.kind, ctx.field)
        if not (rep["ge1"] and rep["ge2"]):
            raise NotGeneric(f"X = {list(X.coords)} is not generic for the Levi {P.blocks}")
    if scope == "levi":
        lie = lie_g.levi(P)
        lf = lie_idempotent_levi(X, lie)
    elif scope == "G":
        lie = lie_g
        G0 = enumerate_group(ctx.at_level(0))
        lf = lie_idempotent_group(X, lie, G0)
    else:
        raise ValueError("scope must be 'levi' or 'G'")
    vals = np.zeros(len(group), dtype=np.complex128)
    vals[kernel_indices(group, lie, ctx.r)] = lf.values
    return IdempotentFn(FiniteFn(group, vals), lf, scope, X)


# -- Lie-algebra parabolic induction --------------------------------------------------


def lie_parabolic_induce(f: FiniteFn, P: Parabolic, lie_g: LieLevel, G0: MatGroup) -> FiniteFn:
    """(|P_0| |u|)^{-1} sum_{x in G_0} [f o pr_l extended by zero off p](Ad(x^{-1}) Z)."""
    lie_l = f.domain
    n = lie_g.n
    p_mask = P.parabolic_mask
    on_p = np.all(lie_g.elems[:, ~p_mask] == 0, axis=1)
    proj = lie_g.elems.copy()
    proj[:, ~P.levi_mask] = 0
    F_vals = np.zeros(len(lie_g), dtype=np.complex128)
    F_vals[on_p] = f.values[lie_l.index(proj[on_p])]
    P0 = int(np.sum(_in_parabolic0(G0.elems[..., 0], P)))
    u_size = lie_g.field.size ** len(P.unipotent_roots())
    out = np.zeros(len(lie_g), dtype=np.complex128)
    for x in G0.elems[..., 0]:
        xinv = _mat_inv0(x, lie_g.field)
        out += F_vals[lie_g.ad_index(xinv)]
    return FiniteFn(lie_g, out / (P0 * u_size))


def _in_parabolic0(a: np.ndarray, P: Parabolic) -> np.ndarray:
    return np.all(a[..., ~P.parabolic_mask] == 0, axis=-1)


def nilpotent_mask(lie: LieLevel) -> np.ndarray:
    F = lie.field
    cur = lie.elems
    for _ in range(lie.n - 1):
        cur = _matmul0(cur, lie.elems, F)
    return np.all(cur == 0, axis=(1, 2))


# -- Harish-Chandra transform ----------------------------------------------------------


class CosetSpace:
    """Left cosets xU of a subgroup, labelled by their smallest element index."""

    def __init__(self, group: MatGroup, sub: MatGroup):
        self.group, self.sub = group, sub
        self.labels = group.coset_labels(sub, side="left")
        self.reps = np.unique(self.labels)
        self.position = np.searchsorted(self.reps, self.labels)

    def __len__(self) -> int:
        return len(self.reps)

    def encode(self, i: int) -> list:
        return self.group.ops.encode(self.group.elems[self.reps[i]])


def hc_transform(f: FiniteFn, U: MatGroup, space: CosetSpace | None = None) -> FiniteFn:
    """(phi_! f)(xU) = sum_{u in U} f(xu)."""
    G = f.domain
    space = space or CosetSpace(G, U)
    out = np.zeros((len(space),) + f.values.shape[1:], dtype=np.complex128)
    np.add.at(out, space.position, f.values)
    return FiniteFn(space, out)


def left_torus_action(e: FiniteFn, h: FiniteFn) -> FiniteFn:
    """(e * h)(xU) = sum_t e(t) h(t^{-1} x U) for e on a subgroup normalizing U."""
    space: CosetSpace = h.domain
    G = space.group
    T = e.domain
    out = np.zeros(h.values.shape, dtype=np.complex128)
    for t in np.flatnonzero(np.abs(e.values) > 0):
        tinv = G.ops.inv(T.elems[t])
        moved = G.find(G.ops.matmul(tinv, G.elems[space.reps]))
        out += e.values[t] * h.values[space.position[moved]]
    return FiniteFn(space, out)


@dataclass
class HCSupportReport:
    X: list
    classes: int
    projected_dim: int
    max_off_borel: float
    max_off_borel_after_e: float
    witness: list | None

    def passed(self, tol: float) -> bool:
        return self.max_off_borel < tol

    def to_json(self) -> dict:
        return self.__dict__.copy()


def hc_support_check(ctx: GroupContext, X: GenericElement) -> HCSupportReport:
    """Harish-Chandra transforms of the f-projected class indicators, measured off B/U.

    Both the projected transform itself and its further e-projection on the torus side are measured.
    """
    from .frobenius import FrobTwist, torus_fixed
    from .matgroup import standard_subgroups

    G = enumerate_group(ctx)
    subs = standard_subgroups(G)
    U, B = subs["U"], subs["B"]
    f = generic_idempotent(X, "G", G).fn
    labels = G.class_labels
    reps = np.unique(labels)
    ind = (labels[:, None] == reps[None, :]).astype(np.complex128)
    proj = convolve(f, FiniteFn(G, ind))
    space = CosetSpace(G, U)
    hc = hc_transform(proj, U, space)
    off = ~B.contains(G.elems[space.reps])
    vals = np.abs(hc.values[off])
    worst = float(vals.max(initial=0.0))
    witness = None
    if worst > 1e-12:
        i, c = np.unravel_index(np.argmax(vals), vals.shape)
        witness = [space.encode(int(np.flatnonzero(off)[i])), int(reps[c])]
    T = torus_fixed(ctx, FrobTwist.split(ctx.n, ctx.kind)).group
    e_T = generic_idempotent(X, "levi", T).fn
    after = left_torus_action(e_T, hc)
    worst_e = float(np.abs(after.values[off]).max(initial=0.0))
    rank = int(np.linalg.matrix_rank(proj.values, tol=1e-8))
    return HCSupportReport(list(X.coords), len(reps), rank, worst, worst_e, witness)


# -- bundled verifiers ----------------------------------------------------------------


def _diagonal_elements(ctx: GroupContext) -> list[tuple[int, ...]]:
    return list(itertools.product(range(ctx.field.size), repeat=ctx.n))


def verify_idempotents(ctx: GroupContext, X: GenericElement) -> dict:
    """e * e = e on the torus, f * f = f on G, and orthogonality to every other diagonal element."""
    from .frobenius import FrobTwist, torus_fixed

    G = enumerate_group(ctx)
    T = torus_fixed(ctx, FrobTwist.split(ctx.n, ctx.kind)).group
    e = generic_idempotent(X, "levi", T).fn
    f = generic_idempotent(X, "G", G).fn
    dev_e = float(np.abs(convolve(e, e, 1e-15).values - e.values).max())
    dev_f = float(np.abs(convolve(f, f, 1e-15).values - f.values).max())
    orbit = {tuple(w.act_on_tuple(X.coords)) for w in weyl_group_of(ctx.n)}
    orth_e = orth_f = 0.0
    witness = None
    for coords in _diagonal_elements(ctx):
        if coords == tuple(X.coords):
            continue
        Y = GenericElement(coords, X.m, X.blocks)
        ey = generic_idempotent(Y, "levi", T, check=False).fn
        val = float(np.abs(convolve(e, ey, 1e-15).values).max())
        if val > orth_e:
            orth_e = val
            witness = {"levi": list(coords)} if val > 1e-12 else witness
        if coords in orbit:
            continue
        fy = generic_idempotent(Y, "G", G, check=False).fn
        val = float(np.abs(convolve(f, fy, 1e-15).values).max())
        if val > orth_f:
            orth_f = val
            witness = {"group": list(coords)} if val > 1e-12 else witness
    return {
        "X": list(X.coords),
        "idempotent_levi": dev_e,
        "idempotent_group": dev_f,
        "orthogonal_levi": orth_e,
        "orthogonal_group": orth_f,
        "max_deviation": max(dev_e, dev_f, orth_e, orth_f),
        "witness": witness,
    }


def weyl_group_of(n: int):
    from .matgroup import weyl_group

    return weyl_group(n)


def verify_fourier_induction(ctx: GroupContext, X: GenericElement, P: Parabolic | None = None) -> dict:
    """Lie-level parabolic induction of the Levi idempotent against the group idempotent."""
    P = P or Parabolic.borel(ctx.n)
    lie_g = LieLevel.full(ctx)
    G0 = enumerate_group(ctx.at_level(0))
    e_lie = lie_idempotent_levi(X, lie_g.levi(P))
    f_lie = lie_idempotent_group(X, lie_g, G0)
    induced = lie_parabolic_induce(e_lie, P, lie_g, G0)
    diff = np.abs(induced.values - f_lie.values)
    worst = int(np.argmax(diff))
    # Fourier inversion on the Lie level: FT(FT(h))(Y) = |g| h(-Y)
    ft2 = fourier(fourier(f_lie)).values / len(lie_g)
    inversion = float(np.abs(ft2 - f_lie.values[lie_g.neg_index]).max())
    return {
        "X": list(X.coords),
        "parabolic": [list(b) for b in P.blocks],
        "normalization": "1/(|P_0| |u|)",
        "max_deviation": float(diff[worst]),
        "fourier_inversion": inversion,
        "witness": lie_g.encode(worst) if diff[worst] > 1e-12 else None,
    }
