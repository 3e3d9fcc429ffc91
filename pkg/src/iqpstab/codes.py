"""Binary-code predicates and the randomized samplers behind the stabilizer
construction: doubly-even generators D, companion columns F, and the
quadratic-residue code generator.

The samplers run once per instance, so they work on Python ints used as
bitsets (bit i = coordinate i) instead of packed arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .f2linalg import BitMatrix, BitVector, gram, kernel_vectors, mul, rank, rref, solve, transpose

RETRY_BUDGET = 64


class InvalidParameter(ValueError):
    pass


class NoSecret(ValueError):
    """The all-ones vector is not in the column space."""


class DualClass(enum.Enum):
    DOUBLY_EVEN = "DoublyEven"
    UNBIASED_EVEN = "UnbiasedEven"


@dataclass(frozen=True)
class CodeProfile:
    dim_c: int
    dim_d: int
    gram_rank: int
    dual_class: DualClass


# ---------------------------------------------------------------------------
# int bitset helpers
# ---------------------------------------------------------------------------


def vec_to_int(v: BitVector) -> int:
    return int.from_bytes(v.data.astype("<u8").tobytes(), "little")


def int_to_vec(x: int, length: int) -> BitVector:
    nbytes = ((length + 63) // 64) * 8
    data = np.frombuffer(x.to_bytes(nbytes, "little"), dtype="<u8").astype(np.uint64)
    return BitVector(length, data.copy())


def columns_as_ints(m: BitMatrix) -> list[int]:
    return [vec_to_int(c) for c in m.columns()]


def rows_as_ints(m: BitMatrix) -> list[int]:
    return [int.from_bytes(r.astype("<u8").tobytes(), "little") for r in m.data]


def ints_as_rows(vectors: Sequence[int], length: int) -> BitMatrix:
    return BitMatrix.from_row_vectors([int_to_vec(v, length) for v in vectors], length)


def ints_as_columns(vectors: Sequence[int], length: int) -> BitMatrix:
    return BitMatrix.from_columns([int_to_vec(v, length) for v in vectors], length)


def _dot(a: int, b: int) -> int:
    return (a & b).bit_count() & 1


class _Echelon:
    """Incremental span membership keyed on the lowest set bit."""

    def __init__(self, vectors: Sequence[int] = ()):
        self.rows: dict[int, int] = {}
        for v in vectors:
            self.add(v)

    def reduce(self, v: int) -> int:
        while v:
            low = v & -v
            row = self.rows.get(low)
            if row is None:
                return v
            v ^= row
        return 0

    def add(self, v: int) -> bool:
        r = self.reduce(v)
        if r:
            self.rows[r & -r] = r
            return True
        return False

    def __len__(self) -> int:
        return len(self.rows)


def _orthogonal_complement(vectors: Sequence[int], length: int) -> list[int]:
    """Basis of {v : v . u = 0 for all u in vectors}."""
    if not vectors:
        return [1 << i for i in range(length)]
    rows = BitMatrix.from_row_vectors([int_to_vec(u, length) for u in vectors], length)
    return [vec_to_int(k) for k in kernel_vectors(rows)]


def _restrict(basis: Sequence[int], constraints: Sequence[int]) -> list[int]:
    """Basis of the subspace of span(basis) orthogonal to every constraint."""
    basis = list(basis)
    if not constraints or not basis:
        return basis
    m = np.array([[_dot(b, u) for b in basis] for u in constraints], dtype=np.uint8)
    coeffs = kernel_vectors(BitMatrix.from_dense(m))
    out = []
    for c in coeffs:
        acc = 0
        for i in c.support():
            acc ^= basis[i]
        out.append(acc)
    return out


def _random_combination(basis: Sequence[int], rng: np.random.Generator, nonzero: bool = False) -> int:
    k = len(basis)
    if k == 0:
        return 0
    while True:
        coeffs = rng.integers(0, 2, size=k)
        if not nonzero or coeffs.any():
            break
    acc = 0
    for b, c in zip(basis, coeffs):
        if c:
            acc ^= b
    return acc


def _sample_outside(ambient: Sequence[int], excluded: Sequence[int], rng: np.random.Generator) -> Optional[int]:
    """Uniform over span(ambient) minus span(excluded); excluded must lie in the ambient span."""
    ech = _Echelon()
    kept = [e for e in excluded if ech.add(e)]
    ext = [a for a in ambient if ech.add(a)]
    if not ext:
        return None
    return _random_combination(ext, rng, nonzero=True) ^ _random_combination(kept, rng)


def _sample_weight0mod4(
    ambient: Sequence[int], excluded: Sequence[int], length: int, rng: np.random.Generator
) -> Optional[int]:
    """Vector of weight 0 mod 4 from span(ambient) outside span(excluded).

    Two-stage draw: an even vector a1; if its weight is 2 mod 4, an even a2
    orthogonal to a1 and outside span(excluded, a1), then a2 or a1 + a2.
    ``excluded`` must be doubly even and orthogonal to the ambient span.
    """
    ones = (1 << length) - 1
    even = _restrict(ambient, [ones])
    a1 = _sample_outside(even, excluded, rng)
    if a1 is None:
        return None
    if a1.bit_count() % 4 == 0:
        return a1
    pool = _restrict(even, [a1])
    a2 = _sample_outside(pool, list(excluded) + [a1], rng)
    if a2 is None:
        return None
    if a2.bit_count() % 4 == 0:
        return a2
    return a1 ^ a2


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def weight_mod4(v: BitVector) -> int:
    return v.weight() & 3


def _is_prime(q: int) -> bool:
    if q < 2:
        return False
    f = 2
    while f * f <= q:
        if q % f == 0:
            return False
        f += 1
    return True


def quadratic_residues(q: int) -> set[int]:
    return {(j * j) % q for j in range(1, q)}


def qrc_generator(q: int) -> BitMatrix:
    """The q x (q+3)/2 generator: all-ones column, then (q+1)/2 cyclic shifts
    of the quadratic-residue indicator (1-indexed positions)."""
    if not _is_prime(q) or (q + 1) % 8:
        raise InvalidParameter(f"q={q} must be a prime with q + 1 divisible by 8")
    qr = quadratic_residues(q)
    out = np.zeros((q, (q + 3) // 2), dtype=np.uint8)
    out[:, 0] = 1
    for k in range((q + 1) // 2):
        for i in range(q):
            if (i + 1 - k) % q in qr:
                out[i, k + 1] = 1
    return BitMatrix.from_dense(out)


def row_basis(m: BitMatrix) -> BitMatrix:
    """Rows of the RREF of m with the zero rows dropped."""
    red, piv = rref(m)
    return red.select_rows(np.arange(piv.size))


def dual_intersection_basis(h_s: BitMatrix) -> BitMatrix:
    """Basis (as rows) of C ∩ C^perp where C is the column space of h_s."""
    kern = kernel_vectors(gram(h_s))
    if not kern:
        return BitMatrix(0, h_s.rows)
    span = mul(h_s, BitMatrix.from_columns(kern, h_s.cols))
    return row_basis(transpose(span))


def classify_self_dual_intersection(h_s: BitMatrix) -> CodeProfile:
    if solve(h_s, BitVector.ones(h_s.rows)) is None:
        raise NoSecret("all-ones vector is not in the column space")
    r = rank(h_s)
    g = rank(gram(h_s))
    basis = dual_intersection_basis(h_s)
    if basis.rows != r - g:
        raise AssertionError(f"radical dimension {basis.rows} != rank {r} - gram rank {g}")
    doubly = all(weight_mod4(basis.row(i)) == 0 for i in range(basis.rows))
    cls = DualClass.DOUBLY_EVEN if doubly else DualClass.UNBIASED_EVEN
    return CodeProfile(dim_c=r, dim_d=basis.rows, gram_rank=g, dual_class=cls)


def sample_doubly_even(
    m1: int, d: int, rng: np.random.Generator, *, start_with_ones: bool = False
) -> BitMatrix:
    """m1 x d' matrix of independent, pairwise orthogonal, weight-0-mod-4 columns.

    d' is d, or d - 1 when the last step of an extremal case (d = m1/2 or
    (m1-1)/2) finds no admissible column.  If all-ones lies in the span it is
    moved to the first column.  ``start_with_ones`` forces the first column
    to be all-ones (needs 4 | m1); used for g = 0 instances.
    """
    if m1 < 4 or d < 1 or d > m1 // 2:
        raise InvalidParameter(f"need m1 >= 4 and 1 <= d <= m1/2, got m1={m1}, d={d}")
    ones = (1 << m1) - 1
    if start_with_ones:
        if m1 % 4:
            raise InvalidParameter("all-ones is doubly even only when 4 divides m1")
        cols = [ones]
    else:
        first = _sample_weight0mod4([1 << i for i in range(m1)], [], m1, rng)
        assert first is not None
        cols = [first]
    while len(cols) < d:
        ambient = _orthogonal_complement(cols, m1)
        c = _sample_weight0mod4(ambient, cols, m1, rng)
        if c is None:
            break
        cols.append(c)
    cols = _move_ones_first(cols, m1)
    return ints_as_columns(cols, m1)


def _move_ones_first(cols: list[int], m1: int) -> list[int]:
    ones = (1 << m1) - 1
    mat = ints_as_columns(cols, m1)
    x = solve(mat, BitVector.ones(m1))
    if x is None:
        return cols
    i = int(x.support()[0])
    rest = cols[:i] + cols[i + 1 :]
    return [ones] + rest


def sample_F(m1: int, g: int, D: BitMatrix, rng: np.random.Generator) -> BitMatrix:
    """m1 x g matrix F with D^T F = 0 and F^T F in block standard form."""
    d = D.cols
    if g < 0 or g > m1 - 2 * d:
        raise InvalidParameter(f"need 0 <= g <= m1 - 2d, got g={g}, m1={m1}, d={d}")
    if (g - m1) % 2:
        raise InvalidParameter(f"need g = m1 mod 2, got g={g}, m1={m1}")
    ones = (1 << m1) - 1
    dcols = columns_as_ints(D)
    ones_in_d = _Echelon(dcols).reduce(ones) == 0
    if g == 0:
        if not ones_in_d:
            raise InvalidParameter("g = 0 needs all-ones in the span of D")
        return BitMatrix(m1, 0)
    perp_d = _orthogonal_complement(dcols, m1)
    if m1 % 2:
        F = [ones]
    elif not ones_in_d:
        # odd vectors of D^perp exist exactly because all-ones is outside D
        c2 = _sample_paired(perp_d, ones, rng)
        F = [ones ^ c2, c2]
    else:
        if g < 2:
            raise InvalidParameter("all-ones in span(D) with even m1 needs g >= 2")
        c1 = _sample_outside(perp_d, dcols, rng)
        c2 = _sample_paired(perp_d, c1, rng)
        F = [c1, c2]
    while len(F) < g:
        c_perp = _orthogonal_complement(dcols + F, m1)
        a = _sample_outside(c_perp, dcols, rng)
        if a is None:
            raise InvalidParameter("ran out of room for further F columns")
        F += [a, _sample_paired(c_perp, a, rng)]
    if len(F) != g:
        raise InvalidParameter(f"g={g} incompatible with the parity of m1={m1}")
    return ints_as_columns(F, m1)


def _sample_paired(pool: Sequence[int], a: int, rng: np.random.Generator) -> int:
    """Uniform b in span(pool) with a . b = 1."""
    hit = next((v for v in pool if _dot(v, a)), None)
    if hit is None:
        raise InvalidParameter("no pool vector pairs with the given column")
    b = _random_combination(pool, rng)
    if not _dot(b, a):
        b ^= hit
    return b


def sample_affine(particular: BitVector, kernel: BitMatrix, rng: np.random.Generator) -> BitVector:
    """Uniform point of particular + column span of kernel."""
    out = particular.copy()
    if kernel.cols == 0:
        return out
    coeffs = rng.integers(0, 2, size=kernel.cols, dtype=np.uint8)
    if coeffs.any():
        out = out ^ (kernel @ BitVector.from_bits(coeffs))
    return out


def sample_subspace_with_constraints(
    ambient: BitMatrix,
    excluded: BitMatrix,
    rng: np.random.Generator,
    *,
    orthogonal_to: Sequence[BitVector] = (),
    even: bool = False,
    weight0mod4: bool = False,
) -> Optional[BitVector]:
    """Uniform vector of span(ambient columns) outside span(excluded columns),
    orthogonal to the given vectors (and even if requested).

    ``weight0mod4`` switches to the two-stage doubly-even draw.  Returns None
    when the constrained set is empty.
    """
    length = ambient.rows
    amb = columns_as_ints(ambient)
    exc = columns_as_ints(excluded)
    cons = [vec_to_int(u) for u in orthogonal_to]
    if even:
        cons.append((1 << length) - 1)
    pool = _restrict(amb, cons)
    if weight0mod4:
        out = _sample_weight0mod4(pool, exc, length, rng)
    else:
        out = _sample_outside(pool, exc, rng)
    return None if out is None else int_to_vec(out, length)
