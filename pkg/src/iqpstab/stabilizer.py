"""Exact evaluation of the IQP stabilizer tableau and of the correlation
function <Z_s> at theta = pi/8.

The magnitude comes from the Gram rank of H_s; the sign from a Gauss sum
over the dual code ker(H_s^T), written as a Z4 quadratic form and reduced by
variable elimination.  Everything here is exact integer arithmetic.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .codes import DualClass, InvalidParameter, NoSecret, classify_self_dual_intersection, weight_mod4
from .f2linalg import BitMatrix, BitVector, gram, kernel_vectors, rank, solve, transpose


@dataclass(frozen=True)
class StabTableau:
    x_part: BitMatrix
    z_part: BitMatrix
    phases: BitVector


@dataclass(frozen=True)
class Correlation:
    """<Z_s> stored as (sign, g): value = sign * 2^(-g/2), sign 0 means zero."""

    sign: int
    g: int

    @property
    def zero(self) -> bool:
        return self.sign == 0

    @property
    def value(self) -> float:
        return 0.0 if self.sign == 0 else self.sign * 2.0 ** (-self.g / 2)

    def __str__(self) -> str:
        if self.zero:
            return "0"
        s = "+" if self.sign > 0 else "-"
        return f"{s}2^(-{self.g}/2)"


@dataclass
class QuadFormZ4:
    """Q(x) = const + sum_i w_i x_i + 2 sum_{i<j} b_ij x_i x_j  (mod 4)."""

    t: int
    linear: np.ndarray
    coupling: np.ndarray
    const: int = 0

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=np.int64).reshape(self.t) % 4
        c = np.asarray(self.coupling, dtype=np.uint8).reshape(self.t, self.t) & 1
        c = c | c.T
        np.fill_diagonal(c, 0)
        self.coupling = c
        self.const %= 4

    def evaluate(self, x) -> int:
        x = np.asarray(x, dtype=np.int64)
        quad = int(x @ np.triu(self.coupling, 1).astype(np.int64) @ x)
        return (self.const + int(self.linear @ x) + 2 * quad) % 4


@dataclass(frozen=True)
class GaussSum:
    """2^(k/2) * exp(i pi octant / 4), or exactly zero."""

    zero: bool
    k: int = 0
    octant: int = 0

    @property
    def value(self) -> complex:
        if self.zero:
            return 0j
        return 2.0 ** (self.k / 2) * cmath.exp(1j * math.pi * self.octant / 4)


def gauss_sum(form: QuadFormZ4) -> GaussSum:
    """sum over x in F2^t of i^Q(x), by eliminating one variable at a time."""
    w = form.linear.copy()
    b = form.coupling.copy()
    const = form.const
    k = 0
    octant = 0
    while w.size:
        w0 = int(w[0])
        ell = b[0, 1:].astype(np.int64)
        w, b = w[1:], b[1:, 1:]
        if w0 & 1:
            # 1 + i^w0 (-1)^l(x) = sqrt2 * omega^(+-1) * i^(-+l(x))
            k += 1
            sigma = -1 if w0 == 1 else 1
            octant += 1 if w0 == 1 else -1
            w = (w + sigma * ell) % 4
            b = b ^ np.outer(ell, ell).astype(np.uint8)
            np.fill_diagonal(b, 0)
            continue
        # w0 even: summing x0 gives 2 * [l(x) == w0/2]
        target = w0 >> 1
        k += 2
        if not ell.any():
            if target:
                return GaussSum(zero=True)
            continue
        j = int(np.flatnonzero(ell)[0])
        s = ell.copy()
        s[j] = 0
        wj = int(w[j])
        u = b[j].astype(np.int64)
        u[j] = 0
        keep = np.ones(w.size, dtype=bool)
        keep[j] = False
        # substitute x_j = target + sum_{i in s} x_i (mod 2)
        w = w + 2 * target * u + 2 * (u & s) + (wj + 2 * wj * target) * s
        const += wj * target
        b = b ^ np.outer(u, s).astype(np.uint8) ^ np.outer(s, u).astype(np.uint8)
        if wj & 1:
            b ^= np.outer(s, s).astype(np.uint8)
        np.fill_diagonal(b, 0)
        w = w[keep] % 4
        b = b[np.ix_(keep, keep)]
    return GaussSum(zero=False, k=k, octant=(octant + 2 * const) % 8)


def gauss_sum_bruteforce(form: QuadFormZ4) -> complex:
    """Exhaustive evaluation; for tests only."""
    if form.t > 20:
        raise ValueError("brute force limited to t <= 20")
    counts = [0, 0, 0, 0]
    for bits in range(1 << form.t):
        x = [(bits >> i) & 1 for i in range(form.t)]
        counts[form.evaluate(x)] += 1
    return complex(counts[0] - counts[2], counts[1] - counts[3])


def dual_form(h_s: BitMatrix) -> QuadFormZ4:
    """Weight-mod-4 form of a = K x over a kernel basis K of h_s^T."""
    basis = kernel_vectors(transpose(h_s)) if h_s.rows else []
    t = len(basis)
    w = np.array([weight_mod4(v) for v in basis], dtype=np.int64)
    b = np.zeros((t, t), dtype=np.uint8)
    for i in range(t):
        for j in range(i + 1, t):
            b[i, j] = b[j, i] = basis[i].dot(basis[j])
    return QuadFormZ4(t, w, b)


def correlation_from_dual(h_s: BitMatrix) -> Correlation:
    """<Z_s> = 2^(-m1/2) sum_{a in ker(h_s^T)} i^|a|."""
    if solve(h_s, BitVector.ones(h_s.rows)) is None:
        raise NoSecret("all-ones vector is not in the column space")
    gs = gauss_sum(dual_form(h_s))
    if gs.zero:
        return Correlation(0, rank(gram(h_s)))
    if gs.octant % 4:
        raise AssertionError(f"non-real Gauss sum, octant {gs.octant}")
    g = h_s.rows - gs.k
    return Correlation(1 if gs.octant == 0 else -1, g)


def iqp_tableau(h: BitMatrix) -> StabTableau:
    phases = [1 if weight_mod4(c) >= 2 else 0 for c in h.columns()]
    return StabTableau(gram(h), BitMatrix.identity(h.cols), BitVector.from_bits(phases))


def secret_rows(h: BitMatrix, s: BitVector) -> np.ndarray:
    """Boolean mask of rows p with p . s = 1."""
    return (h @ s).to_array().astype(bool)


def correlation(h: BitMatrix, s: BitVector) -> Correlation:
    if s.len != h.cols:
        raise ValueError(f"secret length {s.len} does not match {h.cols} columns")
    if not s.any():
        raise InvalidParameter("s must be nonzero")
    h_s = h.select_rows(secret_rows(h, s))
    if h_s.rows == 0:
        return Correlation(1, 0)
    profile = classify_self_dual_intersection(h_s)
    if profile.dual_class is DualClass.UNBIASED_EVEN:
        return Correlation(0, profile.gram_rank)
    signed = correlation_from_dual(h_s)
    if signed.zero or signed.g != profile.gram_rank:
        raise AssertionError("Gauss sum disagrees with the code classification")
    return signed


def min_generator_distance(h_s: BitMatrix) -> int:
    return rank(gram(h_s))
