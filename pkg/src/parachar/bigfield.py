"""Linear algebra over F_p and large extensions F_{p^D} modelled as F_p-vectors.

The Lang solver needs fields far beyond the exp/log tables of ``ring``
(degrees of 50-200 over F_p). Here an element is a length-D coefficient
vector over any irreducible modulus; products go through convolution plus a
reduction matrix, and the p-power Frobenius is a D x D matrix.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .ring import FieldCtx, IncompatibleTower


def rref(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod p; returns (nonzero rows, pivot columns)."""
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        inv = pow(int(a[r, c]), -1, p)
        if inv != 1:
            a[r] = (a[r] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit] = (a[hit] - np.outer(col[hit], a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def nullspace(a: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of {x : a @ x = 0 mod p}."""
    cols = a.shape[1]
    red, pivots = rref(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = (-red[i, fc]) % p
    return basis


class LinearSolver:
    """Reusable factorization of a fixed matrix mod p for repeated solves."""

    def __init__(self, a: np.ndarray, p: int):
        self.p = p
        self.rows, self.cols = a.shape
        aug = np.concatenate([np.array(a, dtype=np.int64) % p, np.eye(self.rows, dtype=np.int64)], axis=1)
        red, pivots = rref(aug, p)
        self.pivots = [c for c in pivots if c < self.cols]
        k = len(self.pivots)
        self.reduced = red[:k, : self.cols]
        self.transform = red[:, self.cols :]  # row ops applied to the rhs
        self.rank = k
        self._kernel = None

    def solve(self, b: np.ndarray) -> np.ndarray | None:
        """A particular solution of a @ x = b, or None when inconsistent."""
        tb = (self.transform @ (np.asarray(b, dtype=np.int64) % self.p)) % self.p
        if np.any(tb[self.rank :]):
            return None
        x = np.zeros(self.cols, dtype=np.int64)
        x[self.pivots] = tb[: self.rank]
        return x

    def kernel(self) -> np.ndarray:
        if self._kernel is None:
            free = sorted(set(range(self.cols)) - set(self.pivots))
            basis = np.zeros((len(free), self.cols), dtype=np.int64)
            for k, fc in enumerate(free):
                basis[k, fc] = 1
                for i, pc in enumerate(self.pivots):
                    basis[k, pc] = (-self.reduced[i, fc]) % self.p
            self._kernel = basis
        return self._kernel


# -- polynomial helpers ---------------------------------------------------


def _poly_gcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = list(a), list(b)
    while b and any(b):
        while b and b[-1] == 0:
            b.pop()
        inv = pow(b[-1], -1, p)
        while len(a) >= len(b):
            c = a[-1] * inv % p
            s = len(a) - len(b)
            for i, bi in enumerate(b):
                a[s + i] = (a[s + i] - c * bi) % p
            a.pop()
            while a and a[-1] == 0:
                a.pop()
        a, b = b, a
    return a


def _frobenius_columns(mod: list[int], p: int) -> np.ndarray:
    """Matrix of a -> a^p on F_p[x]/mod (columns are images of x^i)."""
    d = len(mod) - 1
    cols = np.zeros((d, d), dtype=np.int64)
    cur = [1] + [0] * (d - 1)
    for i in range(d):
        cols[:, i] = cur
        for _ in range(p):  # multiply by x p times
            top = cur[-1]
            cur = [0] + cur[:-1]
            if top:
                cur = [(cur[j] - top * mod[j]) % p for j in range(d)]
    return cols


def is_irreducible(mod: list[int], p: int) -> bool:
    """Berlekamp criterion: squarefree and a one-dimensional fixed algebra."""
    d = len(mod) - 1
    if d == 1:
        return True
    deriv = [(i * c) % p for i, c in enumerate(mod)][1:]
    g = _poly_gcd(mod, deriv, p) if any(deriv) else mod
    if len(g) != 1:
        return False
    q = _frobenius_columns(mod, p)
    red, _ = rref((q - np.eye(d, dtype=np.int64)) % p, p)
    return d - red.shape[0] == 1


@lru_cache(maxsize=None)
def first_irreducible(p: int, d: int) -> tuple[int, ...]:
    """The first monic irreducible of degree d in code order of the tail."""
    for low in range(1, p**d):
        cand = [(low // p**i) % p for i in range(d)] + [1]
        if cand[0] and is_irreducible(cand, p):
            return tuple(cand)
    raise AssertionError("no irreducible found")  # pragma: no cover


class BigField:
    """F_{p^D} with elements as (..., D) coefficient arrays."""

    def __init__(self, p: int, degree: int):
        self.p, self.D = p, degree
        self.modulus = first_irreducible(p, degree)
        d = degree
        # reduction of x^(d+k), k < d-1, into the basis
        red = np.zeros((max(d - 1, 1), d), dtype=np.int64)
        cur = [(-c) % p for c in self.modulus[:d]]  # x^d
        for k in range(d - 1):
            red[k] = cur
            top = cur[-1]
            cur = [0] + cur[:-1]
            if top:
                cur = [(cur[j] - top * self.modulus[j]) % p for j in range(d)]
        self._red = red
        self._red_f = red.astype(np.float64)
        self.frob_matrix = _frobenius_columns(list(self.modulus), p)  # a^p = F @ a
        self._frob_pows: dict[int, np.ndarray] = {0: np.eye(d, dtype=np.int64)}

    def zero(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.D,), dtype=np.int64)

    def one(self, shape=()) -> np.ndarray:
        z = self.zero(shape)
        z[..., 0] = 1
        return z

    def scalar(self, c: int, shape=()) -> np.ndarray:
        z = self.zero(shape)
        z[..., 0] = c % self.p
        return z

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def mul(self, a, b):
        """Product via a floating-point FFT convolution; exact since D (p-1)^2 << 2^52."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        d = self.D
        if d == 1:
            return (a * b) % self.p
        size = 2 * d
        full = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)[..., : 2 * d - 1]
        full = np.rint(full) % self.p
        low = full[..., :d] + full[..., d:] @ self._red_f
        return np.rint(low).astype(np.int64) % self.p

    def frob_power_matrix(self, e: int) -> np.ndarray:
        """Matrix of a -> a^(p^e)."""
        e %= self.D
        if e not in self._frob_pows:
            m = np.eye(self.D, dtype=np.int64)
            base = self.frob_matrix
            k = e
            while k:
                if k & 1:
                    m = (base @ m) % self.p
                base = (base @ base) % self.p
                k >>= 1
            self._frob_pows[e] = m
        return self._frob_pows[e]

    def frob(self, a, e: int):
        """a -> a^(p^e), applied on the last axis."""
        return (np.asarray(a) @ self.frob_power_matrix(e).T) % self.p

    def mul_matrix(self, c: np.ndarray) -> np.ndarray:
        """D x D matrix of x -> c*x."""
        basis = np.eye(self.D, dtype=np.int64)
        return self.mul(basis, c).T % self.p

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        flat = a.reshape(-1, self.D)
        out = np.zeros_like(flat)
        one = self.one()
        for k, row in enumerate(flat):
            sol = LinearSolver(self.mul_matrix(row), self.p).solve(one)
            if sol is None:
                raise ZeroDivisionError("inverse of zero")
            out[k] = sol
        return out.reshape(a.shape)

    def is_zero(self, a):
        return ~np.any(np.asarray(a) != 0, axis=-1)

    def subfield_basis(self, e: int) -> np.ndarray:
        """F_p-basis (rows) of F_{p^e} inside this field."""
        if self.D % e:
            raise IncompatibleTower(f"{e} does not divide {self.D}")
        m = (self.frob_power_matrix(e) - np.eye(self.D, dtype=np.int64)) % self.p
        return nullspace(m, self.p)


class Embedding:
    """Field embedding of a tabled FieldCtx into a BigField, code <-> vector."""

    def __init__(self, src: FieldCtx, big: BigField):
        if src.p != big.p or big.D % src.degree:
            raise IncompatibleTower(f"F_{src.size} does not embed in F_{big.p}^{big.D}")
        self.src, self.big = src, big
        e = src.degree
        basis = big.subfield_basis(e)
        coeffs = np.array(
            [[(k // big.p**i) % big.p for i in range(e)] for k in range(big.p**e)], dtype=np.int64
        )
        elems = (coeffs @ basis) % big.p
        mod = src.modulus
        val = big.scalar(mod[-1], (len(elems),))
        for c in reversed(mod[:-1]):
            val = (big.mul(val, elems) + big.scalar(c, (len(elems),))) % big.p
        roots = np.flatnonzero(big.is_zero(val))
        beta = elems[int(roots[0])]
        pw = [big.one()]
        for _ in range(1, e):
            pw.append(big.mul(pw[-1], beta))
        self.power_basis = np.array(pw)  # (e, D)
        codes = np.arange(src.size, dtype=np.int64)
        self.table = (src.digits(codes) @ self.power_basis) % big.p  # (size, D)
        self._lookup = {row.tobytes(): k for k, row in enumerate(self.table)}

    def to_big(self, codes) -> np.ndarray:
        return self.table[np.asarray(codes, dtype=np.int64)]

    def from_big(self, vecs) -> np.ndarray:
        vecs = np.ascontiguousarray(np.asarray(vecs, dtype=np.int64) % self.big.p)
        flat = vecs.reshape(-1, self.big.D)
        out = np.empty(len(flat), dtype=np.int64)
        for k, row in enumerate(flat):
            code = self._lookup.get(row.tobytes())
            if code is None:
                raise IncompatibleTower("vector lies outside the embedded subfield")
            out[k] = code
        return out.reshape(vecs.shape[:-1])
