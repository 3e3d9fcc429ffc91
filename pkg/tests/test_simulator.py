import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from iqpstab.codes import InvalidParameter
from iqpstab.f2linalg import BitMatrix, BitVector, rank
from iqpstab.protocol import estimate_correlation
from iqpstab.scheme import qrc_construct
from iqpstab.simulator import (
    THETA,
    CnotLayer,
    ResourceError,
    RotLayer,
    compile_circuit,
    equal_up_to_phase,
    exact_correlation,
    sample_outcomes,
    simulate_compiled,
    statevector,
    synthesize_linear,
)
from iqpstab.stabilizer import correlation

import oracles

seeds = st.integers(0, 2**32 - 1)


def full_rank(n, m, rng):
    while True:
        h = BitMatrix.random(m, n, rng)
        if rank(h) == n:
            return h


def test_single_gate_amplitudes():
    amps = statevector(BitMatrix.from_dense([[1]])).amplitudes
    assert np.allclose(amps, [math.cos(math.pi / 8), 1j * math.sin(math.pi / 8)])


def test_two_gates_compose():
    amps = statevector(BitMatrix.from_dense([[1], [1]])).amplitudes
    assert np.allclose(amps, [math.cos(math.pi / 4), 1j * math.sin(math.pi / 4)])


@given(st.integers(0, 15), st.integers(1, 6), seeds)
def test_statevector_matches_kron_oracle(rows, cols, seed):
    d = np.random.default_rng(seed).integers(0, 2, size=(rows, cols), dtype=np.uint8)
    h = BitMatrix.from_dense(d) if rows else BitMatrix(0, cols)
    got = statevector(h).amplitudes
    assert np.allclose(got, oracles.iqp_state(d.reshape(rows, cols)), atol=1e-12)
    assert math.isclose(np.linalg.norm(got), 1, abs_tol=1e-12)


@given(st.integers(1, 20), st.integers(1, 8), seeds)
def test_row_order_does_not_matter(rows, cols, seed):
    r = np.random.default_rng(seed)
    h = BitMatrix.random(rows, cols, r)
    a = statevector(h).amplitudes
    b = statevector(h.select_rows(r.permutation(rows))).amplitudes
    assert np.max(np.abs(a - b)) < 1e-12


def test_exact_correlation_qrc7(rng):
    inst = qrc_construct(7, 5, 14, 0, rng)
    assert math.isclose(exact_correlation(inst.H, inst.s), 2 ** -0.5, abs_tol=1e-12)


def test_exact_correlation_orthogonal_secret():
    h = BitMatrix.from_dense([[0, 1, 1], [0, 1, 0]])
    assert math.isclose(exact_correlation(h, BitVector.from_str("100")), 1.0)


def test_wrong_secret_gives_zero_on_qrc(rng):
    # a random s' with a different row split has zero correlation
    inst = qrc_construct(7, 5, 14, 0, rng)
    hits = 0
    for _ in range(40):
        sp = BitVector.random(5, rng)
        if not sp.any() or inst.H @ sp == inst.H @ inst.s:
            continue
        c = correlation(inst.H, sp)
        assert math.isclose(exact_correlation(inst.H, sp), c.value, abs_tol=1e-9)
        hits += c.zero
    assert hits > 0


def test_cap_is_enforced():
    h = BitMatrix.identity(21)
    with pytest.raises(ResourceError):
        statevector(h)
    with pytest.raises(ResourceError):
        statevector(BitMatrix.identity(6), cap=5)


def test_zero_matrix_samples_are_zero(rng):
    batch = sample_outcomes(BitMatrix.zeros(4, 3), THETA, 50, rng)
    assert batch.samples.is_zero() and batch.T == 50


def test_qrc7_sample_estimate(rng):
    inst = qrc_construct(7, 5, 14, 0, np.random.default_rng(7))
    batch = sample_outcomes(inst.H, THETA, 4000, np.random.default_rng(8))
    assert abs(estimate_correlation(batch, inst.s) - 2 ** -0.5) <= 3 / math.sqrt(4000)


def test_empirical_distribution_matches(rng):
    h = full_rank(4, 7, rng)
    probs = statevector(h).probabilities()
    batch = sample_outcomes(h, THETA, 100_000, rng)
    idx = batch.samples.to_dense().astype(int) @ (1 << np.arange(4))
    emp = np.bincount(idx, minlength=16) / batch.T
    assert 0.5 * np.abs(emp - probs).sum() < 0.05


# ---- compilation -----------------------------------------------------------


def test_compile_identity_has_no_cnots():
    circ = compile_circuit(BitMatrix.identity(5))
    assert circ.cnot_count() == 0
    assert len(circ.layers) == 1 and isinstance(circ.layers[0], RotLayer)
    assert circ.layers[0].qubits == list(range(5))


def test_compile_three_rows_on_two_qubits():
    h = BitMatrix.from_dense([[1, 0], [0, 1], [1, 1]])
    circ = compile_circuit(h)
    assert circ.rounds == 1 and circ.cnot_count() >= 1
    assert equal_up_to_phase(simulate_compiled(circ).amplitudes, oracles.iqp_state(h.to_dense()))


def test_compile_rejects_rank_deficient():
    with pytest.raises(InvalidParameter):
        compile_circuit(BitMatrix.from_dense([[1, 1], [1, 1]]))


@given(st.integers(1, 8), seeds)
def test_synthesize_linear_realises_matrix(n, seed):
    a = full_rank(n, n, np.random.default_rng(seed))
    m = np.eye(n, dtype=np.uint8)
    # apply gates in circuit order to the basis images: column j is A e_j
    for c, t in synthesize_linear(a):
        m[t] ^= m[c]
    assert m.tolist() == a.to_dense().tolist()


@given(st.integers(1, 8), st.data())
def test_compiled_matches_direct(n, data):
    rng = np.random.default_rng(data.draw(seeds))
    m = data.draw(st.integers(n, 2 * n + 4))
    h = full_rank(n, m, rng)
    circ = compile_circuit(h)
    assert equal_up_to_phase(simulate_compiled(circ).amplitudes, statevector(h).amplitudes)
    assert sum(1 for l in circ.layers if isinstance(l, RotLayer)) == circ.rounds + 1


def test_round_count_is_small_for_short_matrices(rng):
    worst = max(compile_circuit(full_rank(10, int(rng.integers(10, 20)), rng)).rounds for _ in range(30))
    assert worst <= 4


def test_dump_format(rng):
    circ = compile_circuit(BitMatrix.from_dense([[1, 0], [0, 1], [1, 1]]))
    lines = circ.dump().splitlines()
    assert lines[0].startswith("ROT ")
    assert any(l.startswith("CNOT ") for l in lines)
    assert all(isinstance(l, (CnotLayer, RotLayer)) for l in circ.layers)


def test_equal_up_to_phase_rejects_different_states():
    a = np.array([1, 0], dtype=complex)
    assert equal_up_to_phase(1j * a, a)
    assert not equal_up_to_phase(np.array([0, 1], dtype=complex), a)
