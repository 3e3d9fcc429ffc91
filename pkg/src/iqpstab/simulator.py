"""Brute-force statevector simulation of X-program circuits, and their
compilation into CNOT layers interleaved with rounds of exp(i theta X) gates.

Basis index convention: bit j of the amplitude index is qubit j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .codes import InvalidParameter, _Echelon, rows_as_ints
from .f2linalg import BitMatrix, BitVector, inverse, mul, rank, transpose
from .samples import SampleBatch

THETA = math.pi / 8
QUBIT_CAP = 20


class ResourceError(RuntimeError):
    pass


@dataclass
class State:
    n: int
    amplitudes: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _row_masks(h: BitMatrix) -> np.ndarray:
    if h.cols == 0:
        return np.zeros(h.rows, dtype=np.int64)
    return h.data[:, 0].astype(np.int64)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise ResourceError(f"{n} qubits exceeds the simulator cap of {cap}")


def statevector(h: BitMatrix, theta: float = THETA, *, cap: int = QUBIT_CAP) -> State:
    _check_cap(h.cols, cap)
    amps = np.zeros(1 << h.cols, dtype=np.complex128)
    amps[0] = 1.0
    _kernels.active.apply_x_rotations(amps, _row_masks(h), math.cos(theta), math.sin(theta))
    return State(h.cols, amps)


def _parity_signs(n: int, s: BitVector) -> np.ndarray:
    mask = int(s.data[0]) if n else 0
    idx = np.arange(1 << n, dtype=np.uint64)
    return 1 - 2 * (np.bitwise_count(idx & np.uint64(mask)) & 1).astype(np.int64)


def exact_correlation(h: BitMatrix, s: BitVector, theta: float = THETA, *, cap: int = QUBIT_CAP) -> float:
    if s.len != h.cols:
        raise ValueError("secret length does not match")
    probs = statevector(h, theta, cap=cap).probabilities()
    return float(probs @ _parity_signs(h.cols, s))


def sample_outcomes(
    h: BitMatrix, theta: float, T: int, rng: np.random.Generator, *, cap: int = QUBIT_CAP
) -> SampleBatch:
    probs = statevector(h, theta, cap=cap).probabilities()
    probs = probs / probs.sum()
    idx = rng.choice(probs.size, size=T, p=probs)
    return SampleBatch.from_indices(idx, h.cols, prover="honest-sim")


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------


@dataclass
class CnotLayer:
    gates: list[tuple[int, int]]


@dataclass
class RotLayer:
    qubits: list[int]
    theta: float


Layer = Union[CnotLayer, RotLayer]


@dataclass
class CompiledCircuit:
    n: int
    layers: list[Layer] = field(default_factory=list)
    rounds: int = 0
    postprocess: BitMatrix | None = None

    def dump(self) -> str:
        out = []
        for layer in self.layers:
            if isinstance(layer, CnotLayer):
                out.append("CNOT " + " ".join(f"{c}>{t}" for c, t in layer.gates))
            else:
                out.append(f"ROT {layer.theta!r} " + " ".join(map(str, layer.qubits)))
        return "\n".join(out) + "\n"

    def cnot_count(self) -> int:
        return sum(len(l.gates) for l in self.layers if isinstance(l, CnotLayer))


def synthesize_linear(a: BitMatrix) -> list[tuple[int, int]]:
    """CNOT list (control, target), in circuit order, realising |x> -> |A x>."""
    m = a.to_dense().copy()
    n = m.shape[0]
    ops: list[tuple[int, int]] = []
    for c in range(n):
        if not m[c, c]:
            r = c + 1 + int(np.flatnonzero(m[c + 1 :, c])[0])
            m[c] ^= m[r]
            ops.append((r, c))
        for r in np.flatnonzero(m[:, c]):
            if r != c:
                m[r] ^= m[c]
                ops.append((c, int(r)))
    # E_k ... E_1 A = I, so A = E_1 ... E_k: apply E_k first
    return ops[::-1]


def _completion(rows: list[int], n: int) -> BitMatrix:
    """Invertible M whose first columns are the given vectors."""
    ech = _Echelon(rows)
    cols = list(rows)
    for j in reversed(range(n)):
        if len(cols) == n:
            break
        if ech.add(1 << j):
            cols.append(1 << j)
    cols = cols[: len(rows)] + sorted(cols[len(rows) :])
    dense = np.array([[(v >> i) & 1 for v in cols] for i in range(n)], dtype=np.uint8)
    return BitMatrix.from_dense(dense)


def compile_circuit(h: BitMatrix, theta: float = THETA) -> CompiledCircuit:
    """Compile U_{H,theta} into CNOT layers and single-qubit X-rotation rounds.

    Picks n independent rows B (first-fit), so H Q = (I; Hbar) with Q = B^-1,
    splits Hbar greedily into independent row sets, and conjugates one round
    of rotations per set by a CNOT basis change.  A final CNOT layer applies
    the relabelling x -> Q^{-T} x so the circuit reproduces U_{H,theta}|0>.
    """
    n = h.cols
    if rank(h) != n:
        raise InvalidParameter("compilation needs rank(H) = n")
    rows = rows_as_ints(h)
    ech = _Echelon()
    basis_idx = []
    for i, r in enumerate(rows):
        if len(basis_idx) < n and ech.add(r):
            basis_idx.append(i)
    b = h.select_rows(basis_idx)
    q = inverse(b)
    rest = [i for i in range(h.rows) if i not in set(basis_idx)]
    hbar = mul(h.select_rows(rest), q) if rest else BitMatrix(0, n)

    rounds: list[list[int]] = []
    echs: list[_Echelon] = []
    for r in rows_as_ints(hbar):
        if r == 0:
            continue  # exp(i theta X_0) is a global phase
        for grp, e in zip(rounds, echs):
            if e.add(r):
                grp.append(r)
                break
        else:
            rounds.append([r])
            echs.append(_Echelon([r]))

    circ = CompiledCircuit(n=n, rounds=len(rounds))
    circ.layers.append(RotLayer(list(range(n)), theta))
    prev = BitMatrix.identity(n)
    for grp in rounds:
        m = _completion(grp, n)
        step = mul(inverse(m), prev)
        gates = synthesize_linear(step)
        if gates:
            circ.layers.append(CnotLayer(gates))
        circ.layers.append(RotLayer(list(range(len(grp))), theta))
        prev = m
    post = transpose(inverse(q))
    circ.postprocess = post
    gates = synthesize_linear(mul(post, prev))
    if gates:
        circ.layers.append(CnotLayer(gates))
    return circ


def simulate_compiled(circ: CompiledCircuit, *, cap: int = QUBIT_CAP) -> State:
    _check_cap(circ.n, cap)
    dim = 1 << circ.n
    amps = np.zeros(dim, dtype=np.complex128)
    amps[0] = 1.0
    idx = np.arange(dim, dtype=np.int64)
    for layer in circ.layers:
        if isinstance(layer, CnotLayer):
            for c, t in layer.gates:
                amps = amps[idx ^ (((idx >> c) & 1) << t)]
        else:
            masks = np.array([1 << q for q in layer.qubits], dtype=np.int64)
            _kernels.active.apply_x_rotations(amps, masks, math.cos(layer.theta), math.sin(layer.theta))
    return State(circ.n, amps)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < tol:
        return bool(np.allclose(a, b, atol=tol))
    phase = a[k] / b[k]
    if abs(abs(phase) - 1) > tol:
        return False
    return bool(np.max(np.abs(a - phase * b)) <= tol)
