import numpy as np
import pytest

from nmrqsim import SpinSystem, build_terms, exact_evolve, realize_dense, total_z_commutator_norm
from nmrqsim.errors import ResourceError, ValidationError
from nmrqsim.hamiltonian import DenseOperator, PauliHamiltonian, PauliTerm
from nmrqsim.simulator import StateVector, expectation_mx

from conftest import random_system

TWO_PI = 2 * np.pi

# <Mx>(t) for offsets (120, 250, 410) Hz, J01 = 7, J12 = -4.5, J02 = 1.5 Hz,
# starting from the uniform superposition.  Computed once with
# scipy.linalg.expm on a Hamiltonian assembled from explicit Kronecker
# products of sigma/2, independently of this package.
ORACLE_3SPIN = {
    0.0: 1.4999999999999998,
    1e-3: -0.0576811127460419,
    3.7e-3: -0.5225362594841395,
    0.05: -0.32163532781417425,
    0.2: -0.22377089531757216,
}


def three_spin():
    jm = np.zeros((3, 3))
    for (k, l), j in {(0, 1): 7.0, (1, 2): -4.5, (0, 2): 1.5}.items():
        jm[k, l] = jm[l, k] = j
    return SpinSystem.from_offsets_hz([120.0, 250.0, 410.0], jm)


def uniform(n):
    return np.full(2**n, 2 ** (-n / 2), dtype=complex)


def test_single_spin_terms():
    sys = SpinSystem.from_offsets_hz([100.0], [[0.0]])
    h = build_terms(sys)
    assert len(h.terms) == 1
    assert h.terms[0].label == "Z"
    assert h.terms[0].coefficient == pytest.approx(TWO_PI * 100)


def test_two_spin_terms(two_spin):
    h = build_terms(two_spin)
    assert [t.label for t in h.terms] == ["Z", "Z", "XX", "YY", "ZZ"]
    for t in h.terms[2:]:
        assert t.coefficient == pytest.approx(TWO_PI * 10.0)
        assert t.qubits == (0, 1)


@pytest.mark.parametrize("seed", range(4))
def test_term_count(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng, 6, density=0.5)
    assert len(build_terms(sys).terms) == 6 + 3 * len(sys.couplings())


def test_zero_offset_spin_has_no_z_term():
    sys = SpinSystem.from_offsets_hz([0.0, 50.0], [[0, 3.0], [3.0, 0]])
    assert [t.label for t in build_terms(sys).terms] == ["Z", "XX", "YY", "ZZ"]


def test_dense_single_z():
    w = 3.0
    m = realize_dense(PauliHamiltonian(1, (PauliTerm(w, ((0, "Z"),)),))).matrix
    np.testing.assert_allclose(m, np.diag([w / 2, -w / 2]))


def test_dense_empty():
    assert not np.any(realize_dense(PauliHamiltonian(3, ())).matrix)


def test_dense_zz():
    c = TWO_PI * 7
    m = realize_dense(PauliHamiltonian(2, (PauliTerm(c, ((0, "Z"), (1, "Z"))),))).matrix
    np.testing.assert_allclose(m, np.diag([c / 4, -c / 4, -c / 4, c / 4]))


def test_dense_little_endian_and_y():
    # Y on qubit 1 of two: |00> -> i|10>, i.e. index 0 -> index 2
    m = realize_dense(PauliHamiltonian(2, (PauliTerm(2.0, ((1, "Y"),)),))).matrix
    assert m[2, 0] == pytest.approx(1j)
    assert m[0, 2] == pytest.approx(-1j)


def test_dense_limit():
    with pytest.raises(ResourceError):
        realize_dense(PauliHamiltonian(15, ()))
    realize_dense(PauliHamiltonian(3, ()), dense_limit=3)
    with pytest.raises(ResourceError):
        realize_dense(PauliHamiltonian(4, ()), dense_limit=3)


def test_dense_is_hermitian(atp):
    op = realize_dense(build_terms(atp))
    assert op.hermiticity_error() == 0.0


def test_exact_evolve_identity_at_zero(two_spin):
    op = realize_dense(build_terms(two_spin))
    psi0 = uniform(2)
    np.testing.assert_allclose(exact_evolve(op, psi0, 0.0), psi0, atol=1e-14)


def test_exact_evolve_single_spin_precession():
    sys = SpinSystem.from_offsets_hz([100.0], [[0.0]])
    op = realize_dense(build_terms(sys))
    t = np.linspace(0, 0.05, 301)
    psi = exact_evolve(op, StateVector(1, uniform(1)), t)
    np.testing.assert_allclose(expectation_mx(psi), 0.5 * np.cos(TWO_PI * 100 * t), atol=1e-12)


@pytest.mark.parametrize("t", sorted(ORACLE_3SPIN))
def test_exact_evolve_against_frozen_oracle(t):
    op = realize_dense(build_terms(three_spin()))
    psi = exact_evolve(op, StateVector(3, uniform(3)), t)
    assert expectation_mx(psi) == pytest.approx(ORACLE_3SPIN[t], abs=1e-12)


def test_exact_evolve_batch_matches_scalar(two_spin):
    op = realize_dense(build_terms(two_spin))
    ts = np.array([0.0, 0.01, 0.123])
    batch = exact_evolve(op, uniform(2), ts)
    for i, t in enumerate(ts):
        np.testing.assert_allclose(batch[i], exact_evolve(op, uniform(2), t), atol=1e-13)


def test_propagator_is_unitary(atp):
    u = realize_dense(build_terms(atp)).propagator(0.0123)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(256), atol=1e-11)


def test_non_hermitian_rejected():
    op = DenseOperator(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValidationError):
        exact_evolve(op, uniform(1), 1.0)


def test_dimension_mismatch_rejected(two_spin):
    op = realize_dense(build_terms(two_spin))
    with pytest.raises(ValidationError):
        exact_evolve(op, uniform(3), 1.0)


@pytest.mark.parametrize("seed", range(6))
def test_total_z_conserved(seed):
    rng = np.random.default_rng(100 + seed)
    sys = random_system(rng, 2 + seed % 5)
    assert total_z_commutator_norm(build_terms(sys)) <= 1e-12


def test_lone_xx_breaks_total_z():
    h = PauliHamiltonian(2, (PauliTerm(1.0, ((0, "X"), (1, "X"))),))
    assert total_z_commutator_norm(h) > 0.1


def test_empty_hamiltonian_commutes():
    assert total_z_commutator_norm(PauliHamiltonian(3, ())) == 0.0


def test_pauli_term_validation():
    with pytest.raises(ValidationError):
        PauliTerm(1.0, ((0, "X"), (0, "Y")))
    with pytest.raises(ValidationError):
        PauliTerm(1.0, ((0, "Q"),))
    with pytest.raises(ValidationError):
        PauliHamiltonian(1, (PauliTerm(1.0, ((1, "Z"),)),))
