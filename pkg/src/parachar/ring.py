"""Finite fields F_{p^d} and truncated rings F_{p^d}[t]/t^{r+1}.

Field elements are integer codes ``sum(c_i * p**i)`` over the polynomial
basis of a fixed modulus. Multiplication goes through exp/log tables, so the
modulus is always primitive. Moduli are chosen Conway-style: the modulus of
degree d is the first primitive polynomial (in code order) whose root x_d
satisfies C_e(x_d^((p^d-1)/(p^e-1))) = 0 for every proper divisor e of d.
That makes the embeddings F_{p^e} -> F_{p^d} coherent and turns them into a
shift of discrete logs.

Ring elements are numpy arrays whose last axis holds the r+1 coefficients of
t^0..t^r.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParacharError

MAX_FIELD_SIZE = 1 << 20


class NotAUnit(ParacharError):
    pass


class IncompatibleTower(ParacharError):
    pass


class FieldTooLarge(ParacharError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def split_prime_power(q: int) -> tuple[int, int]:
    """Return (p, f) with q = p**f, or raise ValueError."""
    for p in range(2, q + 1):
        if q % p == 0:
            f, rest = 0, q
            while rest % p == 0:
                rest //= p
                f += 1
            if rest != 1:
                raise ValueError(f"{q} is not a prime power")
            return p, f
    raise ValueError(f"{q} is not a prime power")


# -- polynomials over F_p, coefficient lists low degree first ---------------


def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod(a: list[int], b: list[int], mod: list[int], p: int) -> list[int]:
    d = len(mod) - 1
    prod = [0] * (len(a) + len(b))
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    # mod is monic
    for k in range(len(prod) - 1, d - 1, -1):
        c = prod[k]
        if c:
            for j in range(d + 1):
                prod[k - d + j] = (prod[k - d + j] - c * mod[j]) % p
    return _trim(prod[:d])


def _poly_powmod(a: list[int], e: int, mod: list[int], p: int) -> list[int]:
    result = [1]
    base = list(a)
    while e:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _poly_eval_mod(poly: list[int], y: list[int], mod: list[int], p: int) -> list[int]:
    acc: list[int] = []
    for c in reversed(poly):
        acc = _poly_mulmod(acc, y, mod, p) if acc else []
        if c:
            acc = acc + [0] * max(0, 1 - len(acc))
            acc[0] = (acc[0] + c) % p
            acc = _trim(acc)
    return acc


def _is_primitive(mod: list[int], p: int) -> bool:
    d = len(mod) - 1
    order = p**d - 1
    x = [0, 1] if d > 1 else [(-mod[0]) % p]
    if _poly_powmod(x, order, mod, p) != [1]:
        return False
    return all(_poly_powmod(x, order // ell, mod, p) != [1] for ell in prime_factors(order))


@lru_cache(maxsize=None)
def conway_like_modulus(p: int, d: int) -> tuple[int, ...]:
    """Primitive monic modulus of degree d over F_p, compatible with all divisors."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if d == 1:
        for g in range(1, p):
            cand = [(-g) % p, 1]
            if p == 2 or _is_primitive(cand, p):
                return tuple(cand)
        raise AssertionError("no primitive root")  # pragma: no cover
    divisors = [e for e in range(1, d) if d % e == 0]
    subs = {e: list(conway_like_modulus(p, e)) for e in divisors}
    for low in range(1, p**d):
        cand = [(low // p**i) % p for i in range(d)] + [1]
        if cand[0] == 0 or not _is_primitive(cand, p):
            continue
        ok = True
        for e, sub in subs.items():
            y = _poly_powmod([0, 1], (p**d - 1) // (p**e - 1), cand, p)
            if _poly_eval_mod(sub, y, cand, p):
                ok = False
                break
        if ok:
            return tuple(cand)
    raise AssertionError("no compatible primitive modulus")  # pragma: no cover


class _Tables:
    """exp/log/trace tables of F_{p^d} for one modulus."""

    def __init__(self, p: int, d: int):
        size = p**d
        if size > MAX_FIELD_SIZE:
            raise FieldTooLarge(f"field of size {size} exceeds {MAX_FIELD_SIZE}")
        self.p, self.d, self.size = p, d, size
        self.modulus = conway_like_modulus(p, d)
        self.pows = np.array([p**i for i in range(d)], dtype=np.int64)
        exp = np.zeros(size - 1, dtype=np.int64)
        if d == 1:
            g = (-self.modulus[0]) % p
            v = 1
            for i in range(size - 1):
                exp[i] = v
                v = v * g % p
        elif p == 2:
            mask = sum(c << j for j, c in enumerate(self.modulus))
            v = 1
            for i in range(size - 1):
                exp[i] = v
                v <<= 1
                if v >> d:
                    v ^= mask
        else:
            digits = [1] + [0] * (d - 1)
            mod = self.modulus
            for i in range(size - 1):
                exp[i] = sum(c * p**j for j, c in enumerate(digits))
                top = digits[-1]
                digits = [0] + digits[:-1]
                if top:
                    digits = [(digits[j] - top * mod[j]) % p for j in range(d)]
        log = np.full(size, -1, dtype=np.int64)
        log[exp] = np.arange(size - 1)
        if np.any(log[1:] < 0):
            raise AssertionError("modulus is not primitive")  # pragma: no cover
        self.exp, self.log = exp, log
        codes = np.arange(size, dtype=np.int64)
        self.neg = self._from_digits((-self._digits(codes)) % p)
        # absolute trace to F_p: sum of the p-power conjugates
        acc = np.zeros(size, dtype=np.int64)
        cur = codes
        for _ in range(d):
            acc = self._add(acc, cur)
            cur = self._pow_p(cur, 1)
        self.trace = acc  # codes below p
        # flat lookup tables for small fields; one gather per operation
        self.small = size <= 256
        if self.small:
            a, b = np.divmod(np.arange(size * size, dtype=np.int64), size)
            s = (log[a] + log[b]) % (size - 1)
            self.mul_table = np.where((a == 0) | (b == 0), 0, exp[s])
            self.add_table = self._add(a, b)

    def _digits(self, a: np.ndarray) -> np.ndarray:
        return (a[..., None] // self.pows) % self.p

    def _from_digits(self, dig: np.ndarray) -> np.ndarray:
        return (dig * self.pows).sum(axis=-1)

    def _add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if self.p == 2:
            return np.bitwise_xor(a, b)
        return self._from_digits((self._digits(a) + self._digits(b)) % self.p)

    def _pow_p(self, a: np.ndarray, k: int) -> np.ndarray:
        e = pow(self.p, k, self.size - 1)
        lg = self.log[a]
        return np.where(a == 0, 0, self.exp[(lg * e) % (self.size - 1)])


@lru_cache(maxsize=None)
def _tables(p: int, d: int) -> _Tables:
    return _Tables(p, d)


@dataclass(frozen=True)
class FieldElem:
    """Polynomial-basis coordinates of a field element (length f*m)."""

    coeffs: tuple[int, ...]


@dataclass(frozen=True)
class TruncRingElem:
    """Element of F[t]/t^{r+1}; coeffs[i] is the coefficient of t^i."""

    coeffs: tuple[FieldElem, ...]

    @property
    def level(self) -> int:
        return len(self.coeffs) - 1


@dataclass(frozen=True)
class FieldCtx:
    """The field F_{q^m}, q = p^f, with vectorized arithmetic on codes."""

    p: int
    f: int = 1
    m: int = 1

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.f < 1 or self.m < 1:
            raise ValueError("f and m must be positive")

    @property
    def q(self) -> int:
        return self.p**self.f

    @property
    def degree(self) -> int:
        return self.f * self.m

    @property
    def size(self) -> int:
        return self.p**self.degree

    @property
    def modulus(self) -> tuple[int, ...]:
        return conway_like_modulus(self.p, self.degree)

    @property
    def tables(self) -> _Tables:
        return _tables(self.p, self.degree)

    def with_m(self, m: int) -> "FieldCtx":
        return FieldCtx(self.p, self.f, m)

    # -- vectorized code arithmetic --------------------------------------

    def add(self, a, b):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if t.p == 2:
            return np.bitwise_xor(a, b)
        if t.small:
            return t.add_table[a * t.size + b]
        return t._add(a, b)

    def neg(self, a):
        return self.tables.neg[np.asarray(a, dtype=np.int64)]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if t.small:
            return t.mul_table[a * t.size + b]
        s = (t.log[a] + t.log[b]) % (t.size - 1)
        return np.where((a == 0) | (b == 0), 0, t.exp[s])

    def inv(self, a):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero field element")
        return t.exp[(-t.log[a]) % (t.size - 1)]

    def power(self, a, e: int):
        t = self.tables
        a = np.asarray(a, dtype=np.int64)
        lg = t.log[a]
        res = t.exp[(lg * (e % (t.size - 1))) % (t.size - 1)]
        if e == 0:
            return np.ones_like(a)
        return np.where(a == 0, 0, res)

    def frob(self, a, k: int = 1):
        """a -> a^(q^k)."""
        return self.tables._pow_p(np.asarray(a, dtype=np.int64), self.f * k)

    def trace_to_prime(self, a):
        """Absolute trace Tr_{F_{q^m}/F_p}, as an integer in [0, p)."""
        return self.tables.trace[np.asarray(a, dtype=np.int64)]

    def digits(self, a):
        return self.tables._digits(np.asarray(a, dtype=np.int64))

    def from_digits(self, dig):
        return self.tables._from_digits(np.asarray(dig, dtype=np.int64) % self.p)

    def from_int(self, c: int) -> int:
        """Image of the integer c in the prime field."""
        return c % self.p

    def subfield_codes(self, e: int) -> np.ndarray:
        """Sorted codes of the subfield of degree e over F_p."""
        if self.degree % e:
            raise IncompatibleTower(f"degree {e} does not divide {self.degree}")
        codes = np.arange(self.size, dtype=np.int64)
        fixed = self.tables._pow_p(codes, e) == codes
        return codes[fixed]

    def base_codes(self) -> np.ndarray:
        """Codes of F_q inside this field."""
        return self.subfield_codes(self.f)

    def embed_codes(self, a, dst: "FieldCtx"):
        """Coherent embedding of this field into dst (same p, f)."""
        if dst.p != self.p or dst.degree % self.degree:
            raise IncompatibleTower(f"F_{self.size} does not embed in F_{dst.size}")
        a = np.asarray(a, dtype=np.int64)
        k = (dst.size - 1) // (self.size - 1)
        lg = self.tables.log[a]
        return np.where(a == 0, 0, dst.tables.exp[(lg * k) % (dst.size - 1)])

    def restrict_codes(self, a, dst: "FieldCtx"):
        """Inverse of dst.embed_codes on the image; raises if outside."""
        if self.p != dst.p or self.degree % dst.degree:
            raise IncompatibleTower(f"F_{dst.size} is not a subfield of F_{self.size}")
        a = np.asarray(a, dtype=np.int64)
        k = (self.size - 1) // (dst.size - 1)
        lg = self.tables.log[a]
        if np.any((a != 0) & (lg % k != 0)):
            raise IncompatibleTower("element lies outside the subfield")
        return np.where(a == 0, 0, dst.tables.exp[(lg // k) % max(dst.size - 1, 1)])

    # -- value-type conversions -------------------------------------------

    def elem(self, code: int) -> FieldElem:
        return FieldElem(tuple(int(c) for c in self.digits(code)))

    def code(self, x: FieldElem) -> int:
        if len(x.coeffs) != self.degree or any(not 0 <= c < self.p for c in x.coeffs):
            raise ValueError(f"non-canonical field element {x.coeffs}")
        return int(self.from_digits(np.array(x.coeffs)))


def field_mul(a: FieldElem, b: FieldElem, ctx: FieldCtx) -> FieldElem:
    return ctx.elem(int(ctx.mul(ctx.code(a), ctx.code(b))))


def field_inv(a: FieldElem, ctx: FieldCtx) -> FieldElem:
    return ctx.elem(int(ctx.inv(ctx.code(a))))


def frobenius_pow(a: FieldElem, k: int, ctx: FieldCtx) -> FieldElem:
    """a^(q^k) with q = p^f."""
    return ctx.elem(int(ctx.frob(ctx.code(a), k)))


def embed(a: FieldElem, src_m: int, dst_m: int, ctx: FieldCtx) -> FieldElem:
    """Embed a from F_{q^src_m} into F_{q^dst_m}; ctx supplies p and f."""
    if src_m <= 0 or dst_m % src_m:
        raise IncompatibleTower(f"{src_m} does not divide {dst_m}")
    src, dst = ctx.with_m(src_m), ctx.with_m(dst_m)
    return dst.elem(int(src.embed_codes(src.code(a), dst)))


# -- truncated rings ----------------------------------------------------------


@dataclass(frozen=True)
class TruncRing:
    """F_{q^m}[t]/t^{r+1}; arrays carry coefficients on the last axis."""

    field: FieldCtx
    r: int

    @property
    def width(self) -> int:
        return self.r + 1

    def zero(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.width,), dtype=np.int64)

    def one(self, shape=()) -> np.ndarray:
        z = self.zero(shape)
        z[..., 0] = 1
        return z

    def const(self, c, shape=()) -> np.ndarray:
        z = self.zero(shape)
        z[..., 0] = c
        return z

    def add(self, a, b):
        return self.field.add(a, b)

    def sub(self, a, b):
        return self.field.sub(a, b)

    def neg(self, a):
        return self.field.neg(a)

    def mul(self, a, b):
        F = self.field
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        shape = np.broadcast_shapes(a.shape, b.shape)
        out = np.zeros(shape, dtype=np.int64)
        for i in range(self.width):
            for j in range(self.width - i):
                out[..., i + j] = F.add(out[..., i + j], F.mul(a[..., i], b[..., j]))
        return out

    def is_unit(self, a):
        return np.asarray(a)[..., 0] != 0

    def inv(self, a):
        F = self.field
        a = np.asarray(a, dtype=np.int64)
        if np.any(a[..., 0] == 0):
            raise NotAUnit("constant term is zero")
        out = np.zeros_like(a)
        a0inv = F.inv(a[..., 0])
        out[..., 0] = a0inv
        for k in range(1, self.width):
            acc = np.zeros(a.shape[:-1], dtype=np.int64)
            for i in range(1, k + 1):
                acc = F.add(acc, F.mul(a[..., i], out[..., k - i]))
            out[..., k] = F.neg(F.mul(a0inv, acc))
        return out

    def frob(self, a, k: int = 1):
        return self.field.frob(a, k)

    def truncate(self, a, level: int):
        """Reduction to F[t]/t^{level+1}."""
        return np.asarray(a)[..., : level + 1]

    def elem(self, a) -> TruncRingElem:
        return TruncRingElem(tuple(self.field.elem(int(c)) for c in np.asarray(a)))

    def array(self, x: TruncRingElem) -> np.ndarray:
        if x.level != self.r:
            raise ValueError(f"level {x.level} != {self.r}")
        return np.array([self.field.code(c) for c in x.coeffs], dtype=np.int64)


def trunc_inv(x: TruncRingElem, ctx: FieldCtx) -> TruncRingElem:
    ring = TruncRing(ctx, x.level)
    return ring.elem(ring.inv(ring.array(x)))


def encode_field(x: FieldElem) -> list[int]:
    return list(x.coeffs)


def decode_field(data, ctx: FieldCtx) -> FieldElem:
    x = FieldElem(tuple(int(c) for c in data))
    ctx.code(x)  # validates
    return x


def encode_ring(x: TruncRingElem) -> list[list[int]]:
    return [encode_field(c) for c in x.coeffs]


def decode_ring(data, ctx: FieldCtx) -> TruncRingElem:
    return TruncRingElem(tuple(decode_field(c, ctx) for c in data))
