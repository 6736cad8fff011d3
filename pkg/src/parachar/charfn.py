"""Characters of finite abelian groups T^sigma, class functions, inner products.

Character values are exact integer phases modulo the group exponent L;
complex values exp(2 pi i k / L) are produced only at the end.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParacharError
from .frobenius import FixedGroup, FrobTwist
from .matgroup import MatGroup, WeylElem, weyl_group
from .ring import FieldCtx, prime_factors

SUM_TOL = 1e-8
INT_TOL = 1e-6


class NotAbelian(ParacharError):
    pass


class TwistIncompatible(ParacharError):
    pass


class DomainMismatch(ParacharError):
    pass


def psi0(x, F: FieldCtx) -> np.ndarray:
    """Additive character exp(2 pi i Tr_{F/F_p}(x) / p) on field codes."""
    tr = F.trace_to_prime(x)
    return np.exp(2j * np.pi * tr / F.p)


@dataclass
class AbelianStructure:
    """Independent generators with prime-power orders and all discrete logs."""

    group: MatGroup
    gen_index: list[int]
    orders: list[int]
    logs: np.ndarray  # (|T|, s) exponent vectors

    @property
    def exponent(self) -> int:
        return int(np.lcm.reduce(self.orders)) if self.orders else 1

    @property
    def size(self) -> int:
        return len(self.group)

    def generators(self) -> np.ndarray:
        return self.group.elems[self.gen_index]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.generators()).tobytes())
        h.update(json.dumps(self.orders).encode())
        return h.hexdigest()[:16]

    def index_of_log(self, vec) -> int:
        key = tuple(int(v) % o for v, o in zip(vec, self.orders))
        return self._log_lookup[key]

    @cached_property
    def _log_lookup(self) -> dict:
        return {tuple(int(x) for x in row): i for i, row in enumerate(self.logs)}


def _power_index(G: MatGroup, idx: np.ndarray, e: int) -> np.ndarray:
    """Indices of g^e for each index."""
    ops = G.ops
    base = G.elems[idx]
    result = np.broadcast_to(ops.identity(), base.shape).copy()
    while e:
        if e & 1:
            result = ops.matmul(result, base)
        base = ops.matmul(base, base)
        e >>= 1
    return G.find(result)


def abelian_structure(T: FixedGroup | MatGroup) -> AbelianStructure:
    """Decompose an abelian group into cyclic factors of prime-power order."""
    G = T.group if isinstance(T, FixedGroup) else T
    if not G.is_abelian():
        raise NotAbelian("group is not abelian")
    size = len(G)
    if size == 1:
        return AbelianStructure(G, [], [], np.zeros((1, 0), dtype=np.int64))
    orders = G.element_orders
    ident = G.identity_index
    gens: list[int] = []
    gen_orders: list[int] = []
    for ell in prime_factors(size):
        sylow = np.flatnonzero(_is_power_of(orders, ell))
        # span: element index -> exponent vector over this prime's generators
        span = {ident: ()}
        local_gens: list[int] = []
        local_orders: list[int] = []
        while len(span) < len(sylow):
            best, best_e, best_z = None, -1, None
            for y in sylow:
                y = int(y)
                if y in span:
                    continue
                e, cur = 0, y
                while cur not in span:
                    cur = int(_power_index(G, np.array([cur]), ell)[0])
                    e += 1
                if e > best_e:
                    best, best_e, best_z = y, e, cur
            pe = ell**best_e
            c = span[best_z]
            # adjust y so that y^(ell^e) = 1 exactly
            adj = best
            for gi, (g, ci) in enumerate(zip(local_gens, c)):
                if ci % pe:
                    raise AssertionError("greedy basis extraction failed")
                k = (-(ci // pe)) % local_orders[gi]
                if k:
                    gk = _power_index(G, np.array([g]), k)[0]
                    adj = int(G.product_index(np.array([adj]), np.array([gk]))[0])
            new_span = dict(span)
            powers = [ident]
            for a in range(1, pe):
                powers.append(int(G.product_index(np.array([powers[-1]]), np.array([adj]))[0]))
            items = list(span.items())
            base_idx = np.array([i for i, _ in items])
            for a in range(1, pe):
                prod = G.product_index(base_idx, np.full(len(base_idx), powers[a]))
                for (i, vec), j in zip(items, prod):
                    new_span[int(j)] = vec + (a,)
            for i, vec in items:
                new_span[i] = vec + (0,)
            span = new_span
            local_gens.append(adj)
            local_orders.append(pe)
        gens.extend(local_gens)
        gen_orders.extend(local_orders)
    logs = _all_logs(G, gens, gen_orders)
    return AbelianStructure(G, gens, gen_orders, logs)


def _is_power_of(values: np.ndarray, ell: int) -> np.ndarray:
    v = values.copy()
    while True:
        div = (v % ell == 0) & (v > 1)
        if not div.any():
            break
        v[div] //= ell
    return v == 1


def _all_logs(G: MatGroup, gens: list[int], orders: list[int]) -> np.ndarray:
    size = len(G)
    logs = np.full((size, len(gens)), -1, dtype=np.int64)
    cur_idx = np.array([G.identity_index])
    cur_vec = np.zeros((1, len(gens)), dtype=np.int64)
    for k, (g, o) in enumerate(zip(gens, orders)):
        blocks_i, blocks_v = [cur_idx], [cur_vec]
        step = cur_idx
        for a in range(1, o):
            step = G.product_index(step, np.full(len(step), g))
            vec = cur_vec.copy()
            vec[:, k] = a
            blocks_i.append(step)
            blocks_v.append(vec)
        cur_idx = np.concatenate(blocks_i)
        cur_vec = np.concatenate(blocks_v)
    if len(np.unique(cur_idx)) != size or len(cur_idx) != size:
        raise AssertionError("generators are not independent")
    logs[cur_idx] = cur_vec
    return logs


@dataclass(frozen=True)
class TorusChar:
    """theta(prod g_i^{e_i}) = exp(2 pi i sum k_i e_i / o_i)."""

    structure: AbelianStructure = field(compare=False, repr=False)
    exps: tuple[int, ...]

    @cached_property
    def phases(self) -> np.ndarray:
        """Integer phases modulo the exponent L, aligned with the group elements."""
        L = self.structure.exponent
        w = np.array([k * (L // o) for k, o in zip(self.exps, self.structure.orders)], dtype=np.int64)
        if len(w) == 0:
            return np.zeros(self.structure.size, dtype=np.int64)
        return (self.structure.logs @ w) % L

    @property
    def values(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.phases / self.structure.exponent)

    def __call__(self, idx) -> np.ndarray:
        return self.values[idx]

    @property
    def is_trivial(self) -> bool:
        return all(k == 0 for k in self.exps)

    def __mul__(self, other: "TorusChar") -> "TorusChar":
        s = self.structure
        return TorusChar(s, tuple((a + b) % o for a, b, o in zip(self.exps, other.exps, s.orders)))

    def inverse(self) -> "TorusChar":
        s = self.structure
        return TorusChar(s, tuple((-a) % o for a, o in zip(self.exps, s.orders)))

    def to_json(self) -> dict:
        return {"exps": list(self.exps), "orders": list(self.structure.orders), "fingerprint": self.structure.fingerprint()}


def character_from_phases(structure: AbelianStructure, phases: np.ndarray) -> TorusChar:
    """Recover exponents of a homomorphism given its phases mod L on all elements."""
    L = structure.exponent
    exps = []
    for g, o in zip(structure.gen_index, structure.orders):
        ph = int(phases[g])
        if (ph * o) % L:
            raise ValueError("phase table is not a character")
        exps.append((ph * o // L) % o)
    chi = TorusChar(structure, tuple(exps))
    if not np.array_equal(chi.phases, np.asarray(phases) % L):
        raise ValueError("phase table is not a homomorphism")
    return chi


def characters(structure: AbelianStructure) -> list[TorusChar]:
    """All characters, in lexicographic order of exponent vectors."""
    import itertools

    return [TorusChar(structure, tuple(e)) for e in itertools.product(*[range(o) for o in structure.orders])]


def weyl_normalizes(tw: FrobTwist, w: WeylElem) -> bool:
    """Whether w commutes with the twist (so its lift normalizes T^sigma)."""
    return w * tw.w == tw.w * w


def weyl_sigma_group(tw: FrobTwist) -> list[WeylElem]:
    """W^sigma: Weyl elements commuting with the twist."""
    return [w for w in weyl_group(tw.rank) if weyl_normalizes(tw, w)]


def weyl_conjugate(theta: TorusChar, w: WeylElem, kind: str = "GL") -> TorusChar:
    """theta^w(t) = theta(lift^{-1} t lift)."""
    G = theta.structure.group
    ops = G.ops
    lift = ops.from_ints(w.lift(kind))
    liftinv = ops.inv(lift)
    conj = ops.matmul(ops.matmul(liftinv, G.elems), lift)
    idx = G.find(conj, strict=False)
    if np.any(idx < 0):
        raise TwistIncompatible(f"lift of {w.one_line()} does not normalize the torus")
    return character_from_phases(theta.structure, theta.phases[idx])


def sigma_fixed_weyl_action(structure: AbelianStructure, w: WeylElem, kind: str = "GL") -> np.ndarray:
    """Index permutation t -> lift t lift^{-1} on the torus."""
    G = structure.group
    ops = G.ops
    lift = ops.from_ints(w.lift(kind))
    return G.find(ops.matmul(ops.matmul(lift, G.elems), ops.inv(lift)))


# -- class functions -----------------------------------------------------------------


@dataclass
class ClassFunction:
    """Complex values on the elements of a finite group (aligned with its order)."""

    domain: MatGroup
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (len(self.domain),):
            raise DomainMismatch("value table does not match the domain size")

    def degree(self) -> complex:
        return complex(self.values[self.domain.identity_index])

    def is_class_function(self, tol: float = SUM_TOL) -> bool:
        labels = self.domain.class_labels
        ref = self.values[labels]
        return bool(np.max(np.abs(self.values - ref), initial=0.0) < tol * max(1.0, np.max(np.abs(self.values), initial=1.0)))

    def __add__(self, other: "ClassFunction") -> "ClassFunction":
        _check_domain(self, other)
        return ClassFunction(self.domain, self.values + other.values)

    def __sub__(self, other: "ClassFunction") -> "ClassFunction":
        _check_domain(self, other)
        return ClassFunction(self.domain, self.values - other.values)

    def scale(self, c: complex) -> "ClassFunction":
        return ClassFunction(self.domain, self.values * c, self.label)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["element", "re", "im"])
        ops = self.domain.ops
        for a, v in zip(self.domain.elems, self.values):
            writer.writerow([json.dumps(ops.encode(a), separators=(",", ":")), f"{v.real:.12g}", f"{v.imag:.12g}"])
        return buf.getvalue()

    def summary(self) -> dict:
        norm = inner_product(self, self).real
        return {
            "label": self.label,
            "group_order": len(self.domain),
            "degree": _round_complex(self.degree()),
            "norm": round(norm, 9),
        }


def _round_complex(z: complex, digits: int = 9) -> list[float]:
    return [round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0]


def _check_domain(f: ClassFunction, g: ClassFunction) -> None:
    if f.domain is g.domain:
        return
    if len(f.domain) != len(g.domain) or not np.array_equal(f.domain.keys, g.domain.keys):
        raise DomainMismatch("class functions live on different groups")


def inner_product(f: ClassFunction, g: ClassFunction) -> complex:
    """|G|^{-1} sum_x f(x) conj(g(x))."""
    _check_domain(f, g)
    return complex(np.vdot(g.values, f.values) / len(f.domain))


def nearest_integer_gap(z: complex) -> float:
    return abs(z - round(z.real))


def regular_character(G: MatGroup) -> ClassFunction:
    vals = np.zeros(len(G), dtype=np.complex128)
    vals[G.identity_index] = len(G)
    return ClassFunction(G, vals, "regular")


def trivial_character(G: MatGroup) -> ClassFunction:
    return ClassFunction(G, np.ones(len(G), dtype=np.complex128), "trivial")


def torus_class_function(theta: TorusChar) -> ClassFunction:
    return ClassFunction(theta.structure.group, theta.values, f"theta{list(theta.exps)}")
