"""Induced characters: ordinary split induction, the fixed-point (Z-set) formula,
normalized Deligne-Lusztig type characters, Mackey and Frobenius-scalar checks.

Fixed-point counting ("y-method"). For a twist sigma with N = n * mult, the
cosets h T^sigma (U cap sigma U) with h^{-1} sigma(h) in sigma(U) and
sigma^N(h)^{-1} g h in T^sigma (U cap sigma U) are counted through exact
representatives with sigma^N(h) = g h tau^{-1}. Writing y = h^{-1} sigma(h),
such y satisfy sigma^N(y) = tau y tau^{-1}, a finite set Y_tau. For each y
a Lang solution h_0 (sigma(h_0) = h_0 y) gives z_y = h_0 N(y) tau h_0^{-1}
in G^sigma with N(y) = y sigma(y) ... sigma^{N-1}(y), and

    count(g, tau) = |C(g)| #{y in Y_tau : z_y ~ g} / (|T^sigma| |V_tau|),

V_tau the fixed points of Ad(tau^{-1}) sigma^N on U cap sigma U. z_y is
constant on orbits of T^sigma V_tau acting on Y_tau, so one Lang solve per
orbit suffices. Everything lives over F_{q^{N e}} with e the exponent of
G^sigma, since sigma^{N e} fixes every exact representative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .bigfield import nullspace
from .charfn import (
    ClassFunction,
    TorusChar,
    inner_product,
    weyl_conjugate,
    weyl_sigma_group,
)
from .errors import ParacharError
from .frobenius import (
    FrobTwist,
    WorkingField,
    fixed_group,
    sigma_unipotent_mask,
    sigma_unipotent_membership,
    solve_lang_big,
    torus_fixed,
    unipotent_fixed_order,
    vreg_torus_elements,
)
from .genericity import DepthMismatch, NotGeneric, is_generic_character
from .matgroup import (
    GroupContext,
    MatGroup,
    MatOps,
    Parabolic,
    WeylElem,
    enumerate_group,
    levi_projection,
    membership,
    weyl_group,
)


class TwistNotSplit(ParacharError):
    pass


class NoVeryRegularElement(ParacharError):
    pass


class NotFactoringThroughLevi(ParacharError):
    pass


# -- cached groups ---------------------------------------------------------------------

_SIGMA_GROUPS: dict = {}
_TORI: dict = {}


def sigma_group(ctx: GroupContext, tw: FrobTwist) -> MatGroup:
    """G_r^sigma; the split case reuses the plain enumeration."""
    key = (ctx, tw)
    if key not in _SIGMA_GROUPS:
        if tw.is_split:
            _SIGMA_GROUPS[key] = enumerate_group(ctx)
        else:
            _SIGMA_GROUPS[key] = fixed_group(ctx, tw).group
    return _SIGMA_GROUPS[key]


def sigma_torus(ctx: GroupContext, tw: FrobTwist):
    key = (ctx, tw)
    if key not in _TORI:
        _TORI[key] = torus_fixed(ctx, tw)
    return _TORI[key]


@dataclass
class InducedCharacter:
    theta: TorusChar
    twist: FrobTwist
    fn: ClassFunction
    provenance: str
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        return self.fn.values

    def norm(self) -> float:
        return inner_product(self.fn, self.fn).real


# -- characters of Levi subgroups through block determinants ----------------------------


def block_det_torus(a: np.ndarray, P: Parabolic, ops: MatOps) -> np.ndarray:
    """diag(det of each Levi block at its first index, 1 elsewhere)."""
    a = np.asarray(a, dtype=np.int64)
    out = np.broadcast_to(ops.identity(), a.shape).copy()
    for b in P.blocks:
        idx = list(b)
        sub = a[..., idx, :, :][..., :, idx, :]
        d = MatOps(ops.field, len(idx), ops.r).det(sub)
        out[..., idx[0], idx[0], :] = d
    return out


def check_factors_through_levi(theta: TorusChar, P: Parabolic) -> None:
    """Raise unless theta(t) = theta(block determinants of t) on the torus."""
    T = theta.structure.group
    moved = T.find(block_det_torus(T.elems, P, T.ops))
    if not np.array_equal(theta.phases[moved], theta.phases):
        raise NotFactoringThroughLevi(f"character does not factor through the block determinants of {P.blocks}")


def levi_character_values(theta: TorusChar, P: Parabolic, elems: np.ndarray, ops: MatOps) -> np.ndarray:
    """theta extended to P through the Levi quotient and block determinants."""
    T = theta.structure.group
    return theta.values[T.find(block_det_torus(levi_projection(elems, P), P, ops))]


# -- ordinary induction ----------------------------------------------------------------------


class SplitInducer:
    """Ind_{P^sigma}^{G^sigma} of characters inflated from the Levi, for a split twist."""

    def __init__(self, G: MatGroup, P: Parabolic, T: MatGroup):
        self.G, self.P, self.T = G, P, T
        ops = G.ops
        pmask = membership(G.elems, "P", ops, P)
        self.p_idx = np.flatnonzero(pmask)
        self.P_order = len(self.p_idx)
        Psub = G.subgroup(pmask, "P")
        reps = np.unique(G.coset_labels(Psub, "left"))
        self.coset_reps = reps
        self.conj = G.conj_table(reps, G.class_reps)  # induced characters are class functions
        self.p_torus = T.find(block_det_torus(levi_projection(G.elems[self.p_idx], P), P, ops))

    def character(self, theta: TorusChar) -> np.ndarray:
        tilde = np.zeros(len(self.G), dtype=np.complex128)
        tilde[self.p_idx] = theta.values[self.p_torus]
        return tilde[self.conj].sum(axis=0)[self.G.class_position]

    def piecewise(self, theta: TorusChar, coset_mask: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """Contribution of the selected cosets xP, evaluated at the target indices."""
        tilde = np.zeros(len(self.G), dtype=np.complex128)
        tilde[self.p_idx] = theta.values[self.p_torus]
        return tilde[self.G.conj_table(self.coset_reps[coset_mask], targets)].sum(axis=0)


_INDUCERS: dict = {}


def split_inducer(ctx: GroupContext, P: Parabolic) -> SplitInducer:
    key = (ctx, P)
    if key not in _INDUCERS:
        tw = FrobTwist.split(ctx.n, ctx.kind)
        _INDUCERS[key] = SplitInducer(sigma_group(ctx, tw), P, sigma_torus(ctx, tw).group)
    return _INDUCERS[key]


def induce_split(theta: TorusChar, ctx: GroupContext, P: Parabolic | None = None, tw: FrobTwist | None = None) -> InducedCharacter:
    """chi(g) = |P|^{-1} sum_{x : x^{-1} g x in P} theta~(x^{-1} g x)."""
    tw = tw or FrobTwist.split(ctx.n, ctx.kind)
    if not tw.is_split:
        raise TwistNotSplit("ordinary parabolic induction needs a split twist")
    P = P or Parabolic.borel(ctx.n)
    check_factors_through_levi(theta, P)
    ind = split_inducer(ctx, P)
    fn = ClassFunction(ind.G, ind.character(theta), f"Ind_P{list(P.composition)}")
    return InducedCharacter(theta, tw, fn, "split-ordinary", {"parabolic": [list(b) for b in P.blocks]})


# -- fixed-point counting ------------------------------------------------------------------


def _ring_mul_matrix(wf: WorkingField, c: np.ndarray) -> np.ndarray:
    """F_p matrix of y -> c * y on W[t]/t^{r+1}, coordinates (level, D) flattened."""
    w, D = wf.ops.w, wf.big.D
    basis = np.eye(w * D, dtype=np.int64).reshape(w * D, w, D)
    return wf.ops.ring_mul(np.broadcast_to(c, basis.shape), basis).reshape(w * D, w * D).T


def _entry_solutions(wf: WorkingField, c: np.ndarray, power: int) -> np.ndarray:
    """Basis of {y in W[t]/t^{r+1} : y^(p^power) = c y}, shape (k, w, D)."""
    w, D, p = wf.ops.w, wf.big.D, wf.big.p
    frob = np.kron(np.eye(w, dtype=np.int64), wf.big.frob_power_matrix(power))
    mat = (frob - _ring_mul_matrix(wf, c)) % p
    return nullspace(mat, p).reshape(-1, w, D)


def _span(basis: np.ndarray, p: int) -> np.ndarray:
    k = len(basis)
    combos = (np.arange(p**k, dtype=np.int64)[:, None] // p ** np.arange(k, dtype=np.int64)) % p
    return np.tensordot(combos, basis, axes=(1, 0)) % p


@dataclass
class ZPartition:
    """Counts of Z-cosets by torus label for one g."""

    g: list
    counts: dict[int, int]
    total: int
    working_degree: int
    N: int

    def to_json(self, torus: MatGroup | None = None) -> dict:
        enc = (lambda i: torus.ops.encode(torus.elems[i])) if torus is not None else (lambda i: i)
        return {
            "g": self.g,
            "N": self.N,
            "working_degree": self.working_degree,
            "total": self.total,
            "counts": [[enc(k), v] for k, v in sorted(self.counts.items())],
        }


class ZEngine:
    """Class-by-torus count table of the fixed-point formula, for one (group, twist, N)."""

    def __init__(self, ctx: GroupContext, tw: FrobTwist, mult: int = 1, seed: int = 0):
        self.ctx, self.tw, self.mult = ctx, tw, mult
        self.N = tw.n * mult
        self.G = sigma_group(ctx, tw)
        self.T = sigma_torus(ctx, tw)
        self.exponent = self.G.exponent
        self.degree = ctx.f * self.N * self.exponent
        self.wf = WorkingField(ctx, self.G.m, self.degree)
        self.V_order = unipotent_fixed_order(ctx, tw, self.N)
        self.rng = np.random.default_rng(seed)
        labels = self.G.class_labels
        self.class_reps = np.unique(labels)
        self.class_pos = np.searchsorted(self.class_reps, labels)
        self.class_size = np.bincount(self.class_pos)
        self._raw = None
        self._gl_dets = None
        self.lang_solves = 0

    # -- Y_tau and its orbits --------------------------------------------------------

    def _y_set(self, tau_big: np.ndarray, positions) -> tuple[np.ndarray, list[int]]:
        wf = self.wf
        ops = wf.ops
        p = wf.big.p
        power = self.ctx.f * self.N
        bases = []
        for a, b in positions:
            c = ops.ring_mul(tau_big[a, a], ops.ring_inv(tau_big[b, b]))
            bases.append(_entry_solutions(wf, c, power))
        dims = [len(B) for B in bases]
        ys = ops.identity((1,))
        for (a, b), B in zip(positions, bases):
            vals = _span(B, p)  # (p^k, w, D)
            new = np.repeat(ys, len(vals), axis=0)
            new[:, a, b] = np.tile(vals, (len(ys), 1, 1))
            ys = new
        return ys, dims

    def _orbit_labels(self, ys: np.ndarray, tau_big: np.ndarray) -> np.ndarray:
        """Components of Y_tau under y -> t^{-1} y t and y -> v^{-1} y sigma(v)."""
        wf = self.wf
        ops = wf.ops
        lookup = {np.ascontiguousarray(y).tobytes(): i for i, y in enumerate(ys)}
        perms = []
        for t in self.T.group.generators():
            tb = wf.to_big(t)
            moved = ops.matmul(ops.matmul(ops.inv(tb), ys), tb)
            perms.append(self._find(lookup, moved))
        n = self.ctx.n
        upos = [(a, b) for a in range(n) for b in range(n) if a < b and sigma_unipotent_mask(self.tw)[a, b]]
        vys, vdims = self._y_set(tau_big, upos)
        expected = self.V_order
        if len(vys) != expected:
            raise AssertionError(f"|V_tau| = {len(vys)}, expected {expected}")
        for a, b in upos:
            basis = _entry_solutions(wf, ops.ring_mul(tau_big[a, a], ops.ring_inv(tau_big[b, b])), self.ctx.f * self.N)
            for vec in basis:
                v = ops.identity()
                v[a, b] = vec
                sv = ops.sigma(v, self.tw, 1, self.ctx.f)
                moved = ops.matmul(ops.matmul(ops.inv(v), ys), sv)
                perms.append(self._find(lookup, moved))
        m = len(ys)
        if not perms:
            return np.arange(m)
        rows = np.concatenate([np.arange(m)] * len(perms))
        graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, np.concatenate(perms))), shape=(m, m))
        _, labels = connected_components(graph, directed=True, connection="weak")
        return labels

    @staticmethod
    def _find(lookup: dict, arr: np.ndarray) -> np.ndarray:
        out = np.empty(len(arr), dtype=np.int64)
        for i, y in enumerate(arr):
            k = lookup.get(np.ascontiguousarray(y).tobytes())
            if k is None:
                raise AssertionError("group action leaves Y_tau")
            out[i] = k
        return out

    # -- one y -----------------------------------------------------------------------

    def _fix_det(self, h: np.ndarray) -> np.ndarray:
        """Left-multiply by a sigma-fixed element of GL_n so that det h = 1 (SL only)."""
        wf = self.wf
        if self._gl_dets is None:
            gl = GroupContext("GL", self.ctx.n, self.ctx.field, self.ctx.r)
            fixed = fixed_group(gl, self.tw, 1, conjugator=None, m=self.G.m)
            dets = fixed.group.ops.det(fixed.elems)
            table = {}
            for i, d in enumerate(dets):
                table.setdefault(d.tobytes(), i)
            self._gl_dets = (fixed, table)
        fixed, table = self._gl_dets
        dinv = wf.ops.ring_inv(wf.ops.det(h))
        key = np.ascontiguousarray(wf.from_big(dinv)).tobytes()
        if key not in table:
            raise AssertionError("determinant of the Lang solution is not sigma-fixed")
        gamma = wf.to_big(fixed.elems[table[key]])
        return wf.ops.matmul(gamma, h)

    def z_of(self, y: np.ndarray, tau_big: np.ndarray) -> int:
        """Index in G^sigma of z_y = h_0 N(y) tau h_0^{-1}."""
        wf = self.wf
        ops = wf.ops
        sol = solve_lang_big(wf, self.tw, 1, ops.identity(), y, self.rng)
        self.lang_solves += 1
        h = sol.x
        if self.ctx.kind == "SL":
            h = self._fix_det(h)
        norm = y
        cur = y
        for _ in range(1, self.N):
            cur = ops.sigma(cur, self.tw, 1, self.ctx.f)
            norm = ops.matmul(norm, cur)
        z = ops.matmul(ops.matmul(ops.matmul(h, norm), tau_big), ops.inv(h))
        return int(self.G.find(wf.from_big(z)))

    # -- tables --------------------------------------------------------------------------

    def raw_counts(self) -> np.ndarray:
        """(#classes, |T^sigma|) numbers of y in Y_tau with z_y in the class."""
        if self._raw is None:
            n = self.ctx.n
            mask = sigma_unipotent_mask(self.tw)
            positions = [(a, b) for a in range(n) for b in range(n) if mask[a, b]]
            out = np.zeros((len(self.class_reps), len(self.T)), dtype=np.int64)
            for j, tau in enumerate(self.T.elems):
                tau_big = self.wf.to_big(tau)
                ys, _ = self._y_set(tau_big, positions)
                labels = self._orbit_labels(ys, tau_big)
                for lab in np.unique(labels):
                    members = np.flatnonzero(labels == lab)
                    z = self.z_of(ys[members[0]], tau_big)
                    out[self.class_pos[z], j] += len(members)
            self._raw = out
        return self._raw

    def class_counts(self) -> np.ndarray:
        """count(g, tau) per class of g, integers."""
        raw = self.raw_counts()
        num = (len(self.G) // self.class_size)[:, None] * raw
        den = len(self.T) * self.V_order
        if np.any(num % den):
            raise AssertionError("fixed-point counts are not integral")
        return num // den

    def element_counts(self, g_index: int) -> np.ndarray:
        return self.class_counts()[self.class_pos[g_index]]

    def values(self, theta: TorusChar) -> np.ndarray:
        """sum_tau theta(tau) count(g, tau) for all g in G^sigma."""
        self._check_torus(theta)
        per_class = self.class_counts() @ theta.values
        return per_class[self.class_pos]

    def _check_torus(self, theta: TorusChar) -> None:
        Tg = theta.structure.group
        if len(Tg) != len(self.T) or not np.array_equal(Tg.keys, self.T.group.keys):
            raise ValueError("character lives on a different torus")


_ENGINES: dict = {}


def z_engine(ctx: GroupContext, tw: FrobTwist, mult: int = 1, seed: int = 0) -> ZEngine:
    """Cached engine; the seed only picks which Lang solution represents each orbit."""
    key = (ctx, tw, mult, seed)
    if key not in _ENGINES:
        _ENGINES[key] = ZEngine(ctx, tw, mult, seed)
    return _ENGINES[key]


def z_partition(g, tw: FrobTwist, ctx: GroupContext, mult: int = 1) -> ZPartition:
    """Counts of Z-cosets of g by their torus label."""
    eng = z_engine(ctx, tw, mult)
    idx = int(eng.G.find(np.asarray(g, dtype=np.int64)))
    counts = eng.element_counts(idx)
    nz = {int(j): int(c) for j, c in enumerate(counts) if c}
    return ZPartition(eng.G.ops.encode(eng.G.elems[idx]), nz, int(counts.sum()), eng.degree, eng.N)


def ind_char_value(theta: TorusChar, g, tw: FrobTwist, ctx: GroupContext, mult: int = 1) -> complex:
    eng = z_engine(ctx, tw, mult)
    idx = int(eng.G.find(np.asarray(g, dtype=np.int64)))
    return complex(eng.element_counts(idx) @ theta.values)


def z_character(theta: TorusChar, tw: FrobTwist, ctx: GroupContext, mult: int = 1) -> InducedCharacter:
    eng = z_engine(ctx, tw, mult)
    fn = ClassFunction(eng.G, eng.values(theta), "z-formula")
    return InducedCharacter(theta, tw, fn, "z-formula", {"N": eng.N, "working_degree": eng.degree})


# -- direct cross-check ----------------------------------------------------------------------


def direct_count(eng: ZEngine, g_index: int, tau_index: int, chunk: int = 4096) -> int:
    """count(g, tau) by untwisting g instead of y.

    Solve sigma^N(x) = g x tau^{-1}; every exact representative is x k with k
    fixed by Ad(tau^{-1}) sigma^N, enumerated by linear algebra over the
    working field. Keep k with (xk)^{-1} sigma(xk) in sigma(U).
    """
    wf = eng.wf
    ops = wf.ops
    big = wf.big
    p = big.p
    n, w, D = eng.ctx.n, ops.w, big.D
    g_big = wf.to_big(eng.G.elems[g_index])
    tau_big = wf.to_big(eng.T.elems[tau_index])
    tau_inv = ops.inv(tau_big)
    sol = solve_lang_big(wf, eng.tw, eng.N, g_big, tau_inv, eng.rng)
    x = sol.x
    c = ops.matmul(ops.inv(x), ops.sigma(x, eng.tw, 1, eng.ctx.f))
    # fixed space of k -> tau^{-1} sigma^N(k) tau
    dim = n * n * w * D
    basis = np.eye(dim, dtype=np.int64).reshape(dim, n, n, w, D)
    img = ops.matmul(ops.matmul(tau_inv, ops.sigma(basis, eng.tw, eng.N, eng.ctx.f)), tau_big)
    kern = nullspace(((img - basis) % p).reshape(dim, dim).T, p)
    k_dim = len(kern)
    total = p**k_dim
    hits = 0
    ident = ops.identity()
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        combos = (codes[:, None] // p ** np.arange(k_dim, dtype=np.int64)) % p
        ks = ((combos @ kern) % p).reshape(-1, n, n, w, D)
        det0 = BigDet(ops).level0(ks)
        ks = ks[~big.is_zero(det0)]
        if eng.ctx.kind == "SL":
            dets = ops.det(ks)
            one = np.zeros((w, D), dtype=np.int64)
            one[0, 0] = 1
            ks = ks[np.all(dets == one, axis=(-2, -1))]
        if len(ks) == 0:
            continue
        val = ops.matmul(ops.matmul(ops.inv(ks), c), ops.sigma(ks, eng.tw, 1, eng.ctx.f))
        hits += int(np.sum(sigma_unipotent_membership(val, eng.tw, ident)))
    den = len(eng.T) * eng.V_order
    if hits % den:
        raise AssertionError("direct count is not integral")
    return hits // den


class BigDet:
    def __init__(self, ops):
        self.ops = ops

    def level0(self, a: np.ndarray) -> np.ndarray:
        from .frobenius import BigMatOps

        lvl0 = BigMatOps(self.ops.big, self.ops.n, 0)
        return lvl0.det(a[..., :1, :])[..., 0, :]


# -- Deligne-Lusztig type characters ------------------------------------------------------


def weyl_sum(theta: TorusChar, tw: FrobTwist) -> np.ndarray:
    """t -> sum_{w in W^sigma} theta^w(t) on the torus."""
    total = np.zeros(len(theta.structure.group), dtype=np.complex128)
    for w in weyl_sigma_group(tw):
        total += weyl_conjugate(theta, w, tw.kind).values
    return total


def dl_character(theta: TorusChar, tw: FrobTwist, ctx: GroupContext, check_generic: bool = True) -> InducedCharacter:
    """(-1)^{dim G_r} times the fixed-point character, rescaled by the Frobenius scalar.

    The raw fixed-point sum equals the character up to a scalar; the scalar is
    read off at the very regular torus element where the Weyl sum is largest.
    """
    eng = z_engine(ctx, tw)
    T = eng.T
    if check_generic:
        try:
            rep = is_generic_character(theta, T)
        except DepthMismatch as exc:
            raise NotGeneric(f"theta {list(theta.exps)} is not of top depth") from exc
        if not (rep["ge1"] and rep["ge2"]):
            raise NotGeneric(f"theta {list(theta.exps)} is not (T,G)-generic")
    vreg = np.flatnonzero(vreg_torus_elements(T))
    if vreg.size == 0:
        raise NoVeryRegularElement("the torus has no very regular elements")
    sign = -1 if ctx.dim_G_r % 2 else 1
    raw = sign * eng.values(theta)
    ws = weyl_sum(theta, tw)
    best = vreg[np.argmax(np.abs(ws[vreg]) + 1e-9 * np.arange(len(vreg))[::-1])]
    g_idx = int(eng.G.find(T.elems[best]))
    scalar = raw[g_idx] / ws[best]
    fn = ClassFunction(eng.G, raw / scalar, "dl-normalized")
    raw_fn = ClassFunction(eng.G, raw, "z-formula")
    extra = {
        "sign": sign,
        "scalar": [scalar.real, scalar.imag],
        "scalar_abs": abs(scalar),
        "anchor": T.group.ops.encode(T.elems[best]),
        "raw_norm": inner_product(raw_fn, raw_fn).real,
    }
    return InducedCharacter(theta, tw, fn, "dl-normalized", extra)


def vreg_values(chi: InducedCharacter, ctx: GroupContext) -> list[dict]:
    """Character values against the Weyl sums at every very regular torus element."""
    tw = chi.twist
    T = sigma_torus(ctx, tw)
    G = chi.fn.domain
    ws = weyl_sum(chi.theta, tw)
    out = []
    for t in np.flatnonzero(vreg_torus_elements(T)):
        v = chi.values[int(G.find(T.elems[t]))]
        out.append(
            {
                "g": T.group.ops.encode(T.elems[t]),
                "value": [v.real, v.imag],
                "weyl_sum": [ws[t].real, ws[t].imag],
                "deviation": abs(v - ws[t]),
            }
        )
    return out


def nonvanishing_check(theta: TorusChar, tw: FrobTwist, ctx: GroupContext) -> float:
    """Worst deviation of sum_{t+} W(g t+) conj(theta(g t+)) from |T_{0+}| (over vreg g).

    W is the Weyl sum. Dividing by theta(g) makes the identity independent of g's phase.
    """
    from .genericity import level_mask

    T = sigma_torus(ctx, tw)
    ws = weyl_sum(theta, tw)
    sub = np.flatnonzero(level_mask(T, 1))
    worst = 0.0
    for g in np.flatnonzero(vreg_torus_elements(T)):
        moved = T.group.find(T.group.ops.matmul(T.elems[g], T.elems[sub]))
        total = np.sum(ws[moved] * np.conj(theta.values[moved]))
        worst = max(worst, abs(total - len(sub)))
    return worst


# -- Mackey ----------------------------------------------------------------------------------


@dataclass
class MackeyReport:
    parabolic: list
    parabolic_prime: list
    double_cosets: int
    weyl_cosets: int
    weyl_double_cosets: int
    contributions: list
    max_off_weyl: float
    weyl_sum_deviation: float
    generic: bool
    passed: bool

    def to_json(self) -> dict:
        return self.__dict__.copy()


def weyl_double_coset_reps(P: Parabolic, Pp: Parabolic) -> list[WeylElem]:
    """Minimal-length representatives of W_{L'} \\ W / W_L."""
    WL, WLp = P.weyl_subgroup(), Pp.weyl_subgroup()
    seen, reps = set(), []
    for w in sorted(weyl_group(P.n), key=lambda x: (x.length(), x.one_line())):
        if tuple(w.perm) in seen:
            continue
        reps.append(w)
        for a in WLp:
            for b in WL:
                seen.add(tuple((a * w * b).perm))
    return reps


def verify_mackey(
    theta: TorusChar,
    ctx: GroupContext,
    P: Parabolic,
    Pp: Parabolic | None = None,
    tol: float = 1e-6,
) -> MackeyReport:
    """Split P'_r \\ G_r / P_r into double cosets and measure each one's share of pRes_{L'} Ind_P theta."""
    Pp = Pp or P
    ind = split_inducer(ctx, P)
    G = ind.G
    ops = G.ops
    check_factors_through_levi(theta, P)
    Ppmask = membership(G.elems, "P", ops, Pp)
    Psub = G.subgroup(membership(G.elems, "P", ops, P), "P")
    Ppsub = G.subgroup(Ppmask, "P'")
    dlabels = G.double_coset_labels(Ppsub, Psub)
    coset_dc = dlabels[ind.coset_reps]
    dcs = np.unique(dlabels)
    # Weyl double cosets: those containing a permutation lift
    lift_dc = {}
    for w in weyl_group(ctx.n):
        idx = int(G.find(ops.from_ints(w.lift(ctx.kind))))
        lift_dc.setdefault(int(dlabels[idx]), w)
    # harmonic restriction to L': average over U'
    L_idx = np.flatnonzero(membership(G.elems, "L", ops, Pp))
    Up_idx = np.flatnonzero(membership(G.elems, "U_P", ops, Pp))
    Lgroup = G.subgroup(membership(G.elems, "L", ops, Pp), "L'")
    lu = G.find(ops.matmul(G.elems[L_idx][:, None], G.elems[Up_idx][None, :]))  # (|L'|, |U'|)
    contributions = []
    surviving = np.zeros(len(L_idx), dtype=np.complex128)
    max_off = 0.0
    for dc in dcs:
        sel = coset_dc == dc
        vals = ind.piecewise(theta, sel, lu.ravel()).reshape(lu.shape).mean(axis=1)
        weyl = lift_dc.get(int(dc))
        size = float(np.max(np.abs(vals), initial=0.0))
        contributions.append(
            {
                "representative": ops.encode(G.elems[dc]),
                "weyl": weyl.one_line() if weyl is not None else None,
                "cosets": int(sel.sum()),
                "max_abs": size,
            }
        )
        if weyl is None:
            max_off = max(max_off, size)
        else:
            surviving += vals
    expected = np.zeros(len(L_idx), dtype=np.complex128)
    for w in weyl_double_coset_reps(P, Pp):
        expected += _weyl_mackey_term(theta, P, Pp, w, G, Lgroup, L_idx)
    dev = float(np.max(np.abs(surviving - expected), initial=0.0))
    generic = _levi_generic(theta, P, ctx)
    passed = (max_off < tol and dev < tol) if generic else True
    return MackeyReport(
        [list(b) for b in P.blocks],
        [list(b) for b in Pp.blocks],
        len(dcs),
        len(lift_dc),
        len(weyl_double_coset_reps(P, Pp)),
        contributions,
        max_off,
        dev,
        generic,
        passed,
    )


def _weyl_mackey_term(theta, P, Pp, w: WeylElem, G: MatGroup, L: MatGroup, L_idx) -> np.ndarray:
    """Ind_{L' cap wPw^{-1}}^{L'} of theta~(w^{-1} . w), evaluated on L'."""
    ops = G.ops
    lift = ops.from_ints(w.lift(G.ctx.kind))
    liftinv = ops.inv(lift)
    conj_into_P = ops.matmul(ops.matmul(liftinv, L.elems), lift)
    in_Q = membership(conj_into_P, "P", ops, P)
    Q_idx = np.flatnonzero(in_Q)
    tilde = np.zeros(len(L), dtype=np.complex128)
    tilde[Q_idx] = levi_character_values(theta, P, conj_into_P[Q_idx], ops)
    total = np.zeros(len(L), dtype=np.complex128)
    for x in L.elems:
        total += tilde[L.conj_index(x)]
    return total / len(Q_idx)


def _levi_generic(theta: TorusChar, P: Parabolic, ctx: GroupContext) -> bool:
    """(L,G)-genericity of a Levi character given through block determinants."""
    from .genericity import GenericElement, depth, extract_generic_element, is_generic

    T = sigma_torus(ctx, FrobTwist.split(ctx.n, ctx.kind))
    if depth(theta, T) != ctx.r or ctx.r < 1:
        return False
    X = extract_generic_element(theta, T)
    rep = is_generic(GenericElement(X.coords, X.m, P.blocks), P.blocks, ctx.kind, ctx.field)
    return bool(rep["ge1"] and rep["ge2"])


# -- scalar Frobenius --------------------------------------------------------------------


@dataclass
class FrobScalarReport:
    theta: list
    scalars: list
    residuals: list
    passed: bool

    def to_json(self) -> dict:
        return self.__dict__.copy()


def frobenius_scalar_check(
    theta: TorusChar, tw: FrobTwist, ctx: GroupContext, m_max: int = 2, tol: float = 1e-6
) -> FrobScalarReport:
    """Value vectors of the sigma^{n m} fixed-point formula are proportional to m = 1."""
    v1 = z_engine(ctx, tw, 1).values(theta)
    scalars, residuals = [], []
    for m in range(1, m_max + 1):
        vm = z_engine(ctx, tw, m).values(theta)
        c = np.vdot(v1, vm) / np.vdot(v1, v1)
        res = float(np.linalg.norm(vm - c * v1) / max(np.linalg.norm(vm), 1e-300))
        scalars.append([c.real, c.imag])
        residuals.append(res)
    return FrobScalarReport(list(theta.exps), scalars, residuals, all(r < tol for r in residuals))
