"""Dense linear algebra over GF(2) on bit-packed rows.

Bit order is LSB-first: column ``j`` of a row lives in bit ``j % 64`` of word
``j // 64``.  Bits beyond the last column are always zero.  Elimination picks
the lowest-index row and column as pivot, so kernels and particular solutions
are deterministic for a fixed input.
"""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from . import _kernels

WORD = 64


def nwords(n: int) -> int:
    return (n + WORD - 1) // WORD


def _pack(bits: np.ndarray, ncols: int) -> np.ndarray:
    """Pack a 2-D 0/1 array into uint64 words, LSB-first."""
    bits = np.asarray(bits, dtype=np.uint8) & 1
    nw = nwords(ncols)
    if nw == 0:
        return np.zeros((bits.shape[0], 0), dtype=np.uint64)
    padded = np.zeros((bits.shape[0], nw * WORD), dtype=np.uint8)
    padded[:, :ncols] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(bits.shape[0], nw)


def _unpack(data: np.ndarray, ncols: int) -> np.ndarray:
    rows = data.shape[0]
    if ncols == 0 or rows == 0:
        return np.zeros((rows, ncols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(data.astype("<u8")).view(np.uint8).reshape(rows, -1)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :ncols]


class BitVector:
    """A GF(2) vector of length ``len`` stored in packed words."""

    __slots__ = ("len", "data")

    def __init__(self, length: int, data: Optional[np.ndarray] = None):
        self.len = int(length)
        if data is None:
            data = np.zeros(nwords(self.len), dtype=np.uint64)
        self.data = np.ascontiguousarray(data, dtype=np.uint64)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8)
        return cls(arr.size, _pack(arr.reshape(1, -1), arr.size)[0])

    @classmethod
    def from_str(cls, text: str) -> "BitVector":
        if any(ch not in "01" for ch in text):
            raise ValueError(f"not a bit string: {text!r}")
        return cls.from_bits([int(ch) for ch in text])

    @classmethod
    def ones(cls, length: int) -> "BitVector":
        return cls.from_bits(np.ones(length, dtype=np.uint8))

    @classmethod
    def unit(cls, length: int, j: int) -> "BitVector":
        v = cls(length)
        v[j] = 1
        return v

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> "BitVector":
        return cls.from_bits(rng.integers(0, 2, size=length, dtype=np.uint8))

    def to_array(self) -> np.ndarray:
        return _unpack(self.data.reshape(1, -1), self.len)[0]

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.to_array())

    def __repr__(self) -> str:
        return f"BitVector({str(self)!r})"

    def __len__(self) -> int:
        return self.len

    def __getitem__(self, j: int) -> int:
        if not 0 <= j < self.len:
            raise IndexError(j)
        return int((self.data[j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def __setitem__(self, j: int, value: int) -> None:
        if not 0 <= j < self.len:
            raise IndexError(j)
        bit = np.uint64(1) << np.uint64(j & 63)
        if value & 1:
            self.data[j >> 6] |= bit
        else:
            self.data[j >> 6] &= ~bit

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.len == other.len and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.len, self.data.tobytes()))

    def __xor__(self, other: "BitVector") -> "BitVector":
        _same_len(self, other)
        return BitVector(self.len, self.data ^ other.data)

    __add__ = __xor__

    def __and__(self, other: "BitVector") -> "BitVector":
        _same_len(self, other)
        return BitVector(self.len, self.data & other.data)

    def copy(self) -> "BitVector":
        return BitVector(self.len, self.data.copy())

    def weight(self) -> int:
        return int(np.bitwise_count(self.data).sum())

    def dot(self, other: "BitVector") -> int:
        _same_len(self, other)
        return int(np.bitwise_count(self.data & other.data).sum()) & 1

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.to_array())

    def any(self) -> bool:
        return bool(self.data.any())

    def concat(self, other: "BitVector") -> "BitVector":
        return BitVector.from_bits(np.concatenate([self.to_array(), other.to_array()]))


def _same_len(a: BitVector, b: BitVector) -> None:
    if a.len != b.len:
        raise ValueError(f"length mismatch: {a.len} vs {b.len}")


class BitMatrix:
    """A dense ``rows x cols`` GF(2) matrix with bit-packed rows."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows: int, cols: int, data: Optional[np.ndarray] = None):
        self.rows = int(rows)
        self.cols = int(cols)
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimension")
        if data is None:
            data = np.zeros((self.rows, nwords(self.cols)), dtype=np.uint64)
        data = np.ascontiguousarray(data, dtype=np.uint64)
        if data.shape != (self.rows, nwords(self.cols)):
            raise ValueError(f"data shape {data.shape} does not fit {rows}x{cols}")
        self.data = data

    # construction -----------------------------------------------------------

    @classmethod
    def from_dense(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim != 2:
            raise ValueError("expected a 2-D array")
        r, c = arr.shape
        if r == 0:
            return cls(0, c)
        return cls(r, c, _pack(arr, c))

    @classmethod
    def from_rows(cls, rows: Iterable[str]) -> "BitMatrix":
        rows = list(rows)
        return cls.from_dense([[int(ch) for ch in row] for row in rows])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator) -> "BitMatrix":
        return cls.from_dense(rng.integers(0, 2, size=(rows, cols), dtype=np.uint8))

    @classmethod
    def from_columns(cls, vectors: list[BitVector], length: int) -> "BitMatrix":
        if not vectors:
            return cls(length, 0)
        return cls.from_dense(np.stack([v.to_array() for v in vectors], axis=1))

    @classmethod
    def from_row_vectors(cls, vectors: list[BitVector], length: int) -> "BitMatrix":
        if not vectors:
            return cls(0, length)
        return cls(len(vectors), length, np.stack([v.data for v in vectors]))

    # views ------------------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        return _unpack(self.data, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.data.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> "BitMatrix":
        return transpose(self)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        return int((self.data[i, j >> 6] >> np.uint64(j & 63)) & np.uint64(1))

    def __setitem__(self, ij: tuple[int, int], value: int) -> None:
        i, j = ij
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(ij)
        bit = np.uint64(1) << np.uint64(j & 63)
        if value & 1:
            self.data[i, j >> 6] |= bit
        else:
            self.data[i, j >> 6] &= ~bit

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.data[i].copy())

    def column(self, j: int) -> BitVector:
        bits = (self.data[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)
        return BitVector.from_bits(bits.astype(np.uint8))

    def columns(self) -> list[BitVector]:
        dense = self.to_dense()
        return [BitVector.from_bits(dense[:, j]) for j in range(self.cols)]

    def select_rows(self, idx) -> "BitMatrix":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return BitMatrix(idx.size, self.cols, self.data[idx])

    def select_cols(self, idx) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense()[:, np.asarray(idx, dtype=np.int64)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        body = "\n".join("".join(map(str, r)) for r in self.to_dense())
        return f"BitMatrix({self.rows}x{self.cols})\n{body}"

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return BitMatrix(self.rows, self.cols, self.data ^ other.data)

    def __matmul__(self, other):
        if isinstance(other, BitVector):
            return mul_vec(self, other)
        return mul(self, other)

    def is_zero(self) -> bool:
        return not self.data.any()


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def transpose(m: BitMatrix) -> BitMatrix:
    return BitMatrix.from_dense(m.to_dense().T) if m.rows and m.cols else BitMatrix(m.cols, m.rows)


def hstack(*mats: BitMatrix) -> BitMatrix:
    rows = {m.rows for m in mats}
    if len(rows) != 1:
        raise ValueError("row counts differ")
    (r,) = rows
    dense = np.concatenate([m.to_dense() for m in mats], axis=1)
    return BitMatrix.from_dense(dense) if r else BitMatrix(0, dense.shape[1])


def vstack(*mats: BitMatrix) -> BitMatrix:
    cols = {m.cols for m in mats}
    if len(cols) != 1:
        raise ValueError("column counts differ")
    (c,) = cols
    return BitMatrix(sum(m.rows for m in mats), c, np.concatenate([m.data for m in mats], axis=0))


def block_diag(*mats: BitMatrix) -> BitMatrix:
    r = sum(m.rows for m in mats)
    c = sum(m.cols for m in mats)
    out = np.zeros((r, c), dtype=np.uint8)
    i = j = 0
    for m in mats:
        out[i : i + m.rows, j : j + m.cols] = m.to_dense()
        i += m.rows
        j += m.cols
    return BitMatrix.from_dense(out) if r else BitMatrix(0, c)


def rref(m: BitMatrix) -> tuple[BitMatrix, np.ndarray]:
    """Reduced row echelon form and pivot columns (input untouched)."""
    work = m.data.copy()
    pivots = _kernels.active.rref(work, m.cols)
    return BitMatrix(m.rows, m.cols, work), pivots


def rank(m: BitMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return int(rref(m)[1].size)


def kernel_basis(m: BitMatrix) -> BitMatrix:
    """Basis of {v : Mv = 0} as the columns of a ``cols x k`` matrix."""
    if m.rows == 0:
        return BitMatrix.identity(m.cols)
    red, piv = rref(m)
    rows = _kernels.active.kernel_rows(red.data, piv, m.cols, nwords(m.cols))
    return transpose(BitMatrix(rows.shape[0], m.cols, rows))


def kernel_vectors(m: BitMatrix) -> list[BitVector]:
    """Kernel basis as a list of vectors."""
    if m.rows == 0:
        return [BitVector.unit(m.cols, j) for j in range(m.cols)]
    red, piv = rref(m)
    rows = _kernels.active.kernel_rows(red.data, piv, m.cols, nwords(m.cols))
    return [BitVector(m.cols, r) for r in rows]


def solve(m: BitMatrix, b: BitVector) -> Optional[BitVector]:
    """A particular solution of Mv = b (free variables zero), or None."""
    if b.len != m.rows:
        raise ValueError(f"right-hand side has length {b.len}, expected {m.rows}")
    if m.rows == 0:
        return BitVector(m.cols)
    aug = hstack(m, BitMatrix.from_dense(b.to_array().reshape(-1, 1)))
    red, piv = rref(aug)
    if piv.size and piv[-1] == m.cols:
        return None
    dense = red.to_dense()
    x = np.zeros(m.cols, dtype=np.uint8)
    for i, c in enumerate(piv):
        x[c] = dense[i, m.cols]
    return BitVector.from_bits(x)


def mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ValueError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if a.rows == 0 or b.cols == 0:
        return BitMatrix(a.rows, b.cols)
    return BitMatrix(a.rows, b.cols, _kernels.active.matmul(a.data, a.cols, b.data))


def mul_vec(a: BitMatrix, v: BitVector) -> BitVector:
    if a.cols != v.len:
        raise ValueError(f"vector length {v.len} does not match {a.cols} columns")
    bits = _kernels.active.matvec(a.data, v.data)
    return BitVector.from_bits(bits)


def gram(m: BitMatrix) -> BitMatrix:
    """M^T M over GF(2)."""
    sel = np.ones(m.rows, dtype=np.uint8)
    return BitMatrix(m.cols, m.cols, _kernels.active.gram_selected(m.data, sel, m.cols))


def inverse(m: BitMatrix) -> BitMatrix:
    n = m.rows
    if m.cols != n:
        raise ValueError("square matrix required")
    red, piv = rref(hstack(m, BitMatrix.identity(n)))
    if piv.size < n or piv[n - 1] != n - 1:
        raise ValueError("matrix is singular")
    return red.select_cols(range(n, 2 * n))


def in_row_space(m: BitMatrix, v: BitVector) -> bool:
    return rank(vstack(m, BitMatrix.from_row_vectors([v], m.cols))) == rank(m)


def random_invertible(n: int, rng: np.random.Generator) -> BitMatrix:
    """Random invertible n x n matrix.

    Rejection sampling up to n = 64; above that a product P L U of a random
    permutation and random unit triangular factors, which reaches every
    invertible matrix.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 64:
        while True:
            cand = BitMatrix.random(n, n, rng)
            if rank(cand) == n:
                return cand
    lower = np.tril(rng.integers(0, 2, size=(n, n), dtype=np.uint8), -1) | np.eye(n, dtype=np.uint8)
    upper = np.triu(rng.integers(0, 2, size=(n, n), dtype=np.uint8), 1) | np.eye(n, dtype=np.uint8)
    perm = np.eye(n, dtype=np.uint8)[rng.permutation(n)]
    return mul(mul(BitMatrix.from_dense(perm), BitMatrix.from_dense(lower)), BitMatrix.from_dense(upper))
