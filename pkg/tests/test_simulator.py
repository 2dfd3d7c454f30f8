import numpy as np
import pytest

from nmrqsim import SpinSystem, StateVector, apply_circuit, build_fid_circuit, build_terms, exact_evolve, realize_dense
from nmrqsim.circuit import CircuitIR, Gate, gate_matrix, kron_le
from nmrqsim.errors import ParameterError, ValidationError
from nmrqsim.simulator import (
    circuit_unitary,
    expectation_mx,
    expectation_my,
    expectation_mz,
    magnetization_values,
    point_rng,
    sample_mx,
)

from conftest import random_system

SQ = 1 / np.sqrt(2)


def embed(mat, qubits, n):
    """Reference embedding of a 1- or 2-qubit matrix by explicit index arithmetic."""
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    others = [k for k in range(n) if k not in qubits]
    for i in range(dim):
        for j in range(dim):
            if any(((i >> k) & 1) != ((j >> k) & 1) for k in others):
                continue
            r = sum(((i >> q) & 1) << p for p, q in enumerate(qubits))
            c = sum(((j >> q) & 1) << p for p, q in enumerate(qubits))
            out[i, j] = mat[r, c]
    return out


def random_state(rng, n, batch=None):
    shape = (2**n,) if batch is None else (batch, 2**n)
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return StateVector(n, a / np.linalg.norm(a, axis=-1, keepdims=True))


def test_empty_circuit_is_identity():
    psi = random_state(np.random.default_rng(0), 3)
    out = apply_circuit(CircuitIR(3, []), psi)
    np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)
    assert out.amplitudes is not psi.amplitudes


def test_pi_half_pulse():
    out = apply_circuit(CircuitIR(1, [Gate("RY", (0,), np.pi / 2)]))
    np.testing.assert_allclose(out.amplitudes, [SQ, SQ], atol=1e-15)


def test_measurement_is_ignored():
    c = CircuitIR(2, [Gate("H", (0,)), Gate("MEASURE", (0,)), Gate("MEASURE", (1,))])
    np.testing.assert_allclose(apply_circuit(c).amplitudes, [SQ, SQ, 0, 0], atol=1e-15)


@pytest.mark.parametrize("kind", ["RX", "RY", "RZ", "H", "SX"])
@pytest.mark.parametrize("q", [0, 1, 3])
def test_one_qubit_gates_match_embedding(kind, q):
    angle = 0.37 if kind.startswith("R") else None
    u = circuit_unitary(CircuitIR(4, [Gate(kind, (q,), angle)]))
    np.testing.assert_allclose(u, embed(gate_matrix(kind, angle), (q,), 4), atol=1e-14)


@pytest.mark.parametrize("kind", ["RXX", "RYY", "RZZ", "CX", "ECR", "SWAP"])
@pytest.mark.parametrize("qubits", [(0, 1), (1, 0), (0, 3), (3, 1), (2, 0)])
def test_two_qubit_gates_match_embedding(kind, qubits):
    angle = -1.21 if kind.startswith("R") else None
    u = circuit_unitary(CircuitIR(4, [Gate(kind, qubits, angle)]))
    np.testing.assert_allclose(u, embed(gate_matrix(kind, angle), qubits, 4), atol=1e-14)


def test_batched_angles_match_individual_runs():
    rng = np.random.default_rng(3)
    angles = rng.uniform(-3, 3, 5)
    kinds = [("RX", (1,)), ("RY", (0,)), ("RZ", (2,)), ("RXX", (0, 2)), ("RYY", (2, 1)), ("RZZ", (1, 0))]
    psi = random_state(rng, 3)
    batched = CircuitIR(3, [Gate(k, q, angles * (i + 1)) for i, (k, q) in enumerate(kinds)])
    out = apply_circuit(batched, psi).amplitudes
    assert out.shape == (5, 8)
    for b, a in enumerate(angles):
        single = CircuitIR(3, [Gate(k, q, a * (i + 1)) for i, (k, q) in enumerate(kinds)])
        np.testing.assert_allclose(out[b], apply_circuit(single, psi).amplitudes, atol=1e-14)


def test_batched_state_with_scalar_gates():
    rng = np.random.default_rng(4)
    psi = random_state(rng, 3, batch=4)
    c = CircuitIR(3, [Gate("H", (0,)), Gate("CX", (0, 2)), Gate("RZ", (1,), 0.3)])
    out = apply_circuit(c, psi).amplitudes
    u = circuit_unitary(c)
    np.testing.assert_allclose(out, psi.amplitudes @ u.T, atol=1e-14)


def test_batch_mismatch_rejected():
    c = CircuitIR(1, [Gate("RZ", (0,), np.zeros(3))])
    with pytest.raises(ValidationError):
        apply_circuit(c, StateVector.zero(1, batch=4))
    with pytest.raises(ValidationError):
        apply_circuit(CircuitIR(1, [Gate("RZ", (0,), np.zeros(3)), Gate("RX", (0,), np.zeros(2))]))


def test_qubit_count_mismatch_rejected():
    with pytest.raises(ValidationError):
        apply_circuit(CircuitIR(2, []), StateVector.zero(3))
    with pytest.raises(ValidationError):
        StateVector(2, np.ones(3))


@pytest.mark.parametrize("seed", range(3))
def test_norm_preserved(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, 5)
    c = build_fid_circuit(sys, np.linspace(0, 0.3, 9), repetitions=3)
    out = apply_circuit(c, StateVector.zero(5, batch=9))
    np.testing.assert_allclose(out.norm(), 1.0, atol=1e-10)


def test_expectations_of_basis_states():
    assert expectation_mx(StateVector.zero(4)) == 0.0
    assert expectation_mz(StateVector.zero(4)) == pytest.approx(2.0)
    plus = StateVector(3, np.full(8, 8**-0.5))
    assert expectation_mx(plus) == pytest.approx(1.5)
    assert expectation_my(plus) == pytest.approx(0.0, abs=1e-15)
    # (|0> + i|1>)/sqrt2 points along +Y
    assert expectation_my(StateVector(1, [SQ, 1j * SQ])) == pytest.approx(0.5)


def test_expectation_against_dense_operator():
    rng = np.random.default_rng(9)
    psi = random_state(rng, 3)
    x = np.array([[0, 1], [1, 0]]) / 2
    y = np.array([[0, -1j], [1j, 0]]) / 2
    for op, fn in ((x, expectation_mx), (y, expectation_my)):
        m = sum(kron_le(*[op if i == k else np.eye(2) for i in range(3)]) for k in range(3))
        assert fn(psi) == pytest.approx(np.real(psi.amplitudes.conj() @ m @ psi.amplitudes), abs=1e-14)


def test_single_spin_precession():
    sys = SpinSystem.from_offsets_hz([250.0], [[0.0]])
    t = np.linspace(0, 0.02, 41)
    psi = apply_circuit(build_fid_circuit(sys, t, measure=False), StateVector.zero(1, batch=t.size))
    np.testing.assert_allclose(expectation_mx(psi), 0.5 * np.cos(2 * np.pi * 250 * t), atol=1e-13)


@pytest.mark.parametrize("seed", range(3))
def test_trotter_state_matches_exact_for_weak_coupling(seed):
    """reps=64 circuit state vs exact propagation, 3 spins, first 1024 dwell times."""
    rng = np.random.default_rng(seed)
    sys = random_system(rng, 3, spread_hz=1.0, jmax=0.2)
    t = np.arange(0, 1024, 16) / 8000.0
    psi = apply_circuit(build_fid_circuit(sys, t, repetitions=64, measure=False), StateVector.zero(3, batch=t.size))
    ref = exact_evolve(realize_dense(build_terms(sys)), np.full(8, 8**-0.5), t)
    assert np.max(np.abs(psi.amplitudes - ref)) <= 1e-3


def test_magnetization_values():
    np.testing.assert_array_equal(magnetization_values(2), [1.0, 0.0, 0.0, -1.0])


def test_deterministic_state_sampling():
    # RY(pi/2) then RY(-pi/2): every qubit reads 0, so Mx = N/2 exactly
    n = 3
    gates = [Gate("RY", (q,), np.pi / 2) for q in range(n)]
    gates += [Gate("RY", (q,), -np.pi / 2) for q in range(n)]
    gates += [Gate("MEASURE", (q,)) for q in range(n)]
    for shots in (1, 17, 4000):
        res = sample_mx(CircuitIR(n, gates), shots=shots, seed=5)
        assert res.mx == 1.5
        assert res.counts.sum() == shots
        assert res.bitstring_counts() == {"000": shots}


def test_sampling_reproducible_and_keyed():
    sys = SpinSystem.from_offsets_hz([100.0, 130.0], [[0, 5.0], [5.0, 0]])
    c = build_fid_circuit(sys, 0.003)
    a = sample_mx(c, shots=1000, seed=1, time_index=2)
    b = sample_mx(c, shots=1000, seed=1, time_index=2)
    d = sample_mx(c, shots=1000, seed=1, time_index=3)
    np.testing.assert_array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, d.counts)


def test_point_rng_distinct_streams():
    draws = {tuple(point_rng(0, t, r).integers(0, 2**62, 3)) for t in range(4) for r in range(3)}
    assert len(draws) == 12


def test_sampling_errors():
    sys = SpinSystem.from_offsets_hz([100.0], [[0.0]])
    with pytest.raises(ParameterError):
        sample_mx(build_fid_circuit(sys, 0.01), shots=0)
    with pytest.raises(ValidationError):
        sample_mx(build_fid_circuit(sys, 0.01, measure=False), shots=10)
