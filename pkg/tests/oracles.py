"""Brute-force reference implementations used only by the tests.

Everything here works on plain numpy 0/1 arrays or Python ints and shares
no code with the package, so agreement is meaningful.
"""

import itertools

import numpy as np


def span(rows):
    """Set of all GF(2) combinations of the given rows, as tuples."""
    rows = [np.asarray(r, dtype=np.uint8) & 1 for r in rows]
    if not rows:
        return set()
    out = set()
    for coeffs in itertools.product((0, 1), repeat=len(rows)):
        acc = np.zeros_like(rows[0])
        for c, r in zip(coeffs, rows):
            if c:
                acc ^= r
        out.add(tuple(int(b) for b in acc))
    return out


def rank(dense):
    dense = np.asarray(dense, dtype=np.uint8)
    if dense.size == 0:
        return 0
    size = len(span(list(dense)))
    return size.bit_length() - 1


def kernel(dense):
    """All x with dense @ x = 0 (mod 2), as tuples."""
    dense = np.asarray(dense, dtype=np.int64)
    n = dense.shape[1]
    out = []
    for bits in itertools.product((0, 1), repeat=n):
        x = np.array(bits, dtype=np.int64)
        if not ((dense @ x) & 1).any():
            out.append(bits)
    return out


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
EYE = np.eye(2, dtype=complex)


def x_string(p):
    """Dense matrix of X^p on len(p) qubits (qubit 0 is the least significant bit)."""
    out = np.eye(1, dtype=complex)
    for bit in reversed(list(p)):
        out = np.kron(out, PAULI_X if bit else EYE)
    return out


def iqp_state(dense, theta=np.pi / 8):
    """prod_p exp(i theta X_p) |0>, built from explicit Kronecker products."""
    dense = np.asarray(dense, dtype=np.uint8)
    n = dense.shape[1]
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1
    for p in dense:
        xp = x_string(p)
        psi = np.cos(theta) * psi + 1j * np.sin(theta) * (xp @ psi)
    return psi


def z_expectation(psi, s):
    n = len(s)
    total = 0.0
    for x in range(1 << n):
        par = sum(((x >> j) & 1) * int(s[j]) for j in range(n)) & 1
        total += abs(psi[x]) ** 2 * (-1) ** par
    return total


def gauss_sum(t, linear, coupling, const=0):
    """sum_x i^Q(x) with Q = const + sum w_i x_i + 2 sum_{i<j} b_ij x_i x_j (mod 4),
    returned as the Gaussian integer (re, im)."""
    counts = [0, 0, 0, 0]
    for bits in itertools.product((0, 1), repeat=t):
        q = const
        for i in range(t):
            if bits[i]:
                q += int(linear[i])
                for j in range(i + 1, t):
                    if bits[j] and coupling[i][j]:
                        q += 2
        counts[q % 4] += 1
    return counts[0] - counts[2], counts[1] - counts[3]


def weight_classes(code):
    """Histogram of codeword weights mod 4."""
    hist = [0, 0, 0, 0]
    for c in code:
        hist[sum(c) % 4] += 1
    return hist


def column_code(dense):
    """All codewords spanned by the columns of dense."""
    return span(list(np.asarray(dense, dtype=np.uint8).T))


# The 7x5 quadratic-residue generator with the all-ones column first.
QRC7 = np.array(
    [
        [1, 1, 0, 0, 0],
        [1, 1, 1, 0, 0],
        [1, 0, 1, 1, 0],
        [1, 1, 0, 1, 1],
        [1, 0, 1, 0, 1],
        [1, 0, 0, 1, 0],
        [1, 0, 0, 0, 1],
    ],
    dtype=np.uint8,
)


def gauss_sum_fast(t, linear, coupling, const=0):
    """Same as gauss_sum, enumerating all 2^t inputs at once with integer arrays."""
    x = (np.arange(1 << t, dtype=np.int64)[:, None] >> np.arange(t)) & 1
    upper = np.triu(np.asarray(coupling, dtype=np.int64) & 1, 1)
    q = const + x @ np.asarray(linear, dtype=np.int64) + 2 * ((x @ upper) * x).sum(axis=1)
    counts = np.bincount(q % 4, minlength=4)
    return int(counts[0] - counts[2]), int(counts[1] - counts[3])
