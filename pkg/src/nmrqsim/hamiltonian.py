"""Rotating-frame Heisenberg Hamiltonian and the exact propagation oracle.

Conventions (used throughout the package):

* hbar = 1; every coefficient is an angular frequency in rad/s.
* Spin operators are half Paulis, ``I^a = sigma^a / 2``.  A :class:`PauliTerm`
  stores the physical coefficient only; the factors of 1/2 are applied when
  the term is realized as a matrix.
* Basis states are little-endian: qubit/spin ``k`` is bit ``k`` of the index,
  and bit value 0 is spin-up (``I^Z = +1/2``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ResourceError, ValidationError
from .spin_model import SpinSystem

DENSE_LIMIT = 14
HERMITIAN_TOL = 1e-12

AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliTerm:
    """``coefficient * prod(I^axis_k)`` over at most two distinct spins."""

    coefficient: float
    factors: tuple[tuple[int, str], ...]

    def __post_init__(self) -> None:
        if len(self.factors) > 2:
            raise ValidationError("terms are at most 2-local")
        idx = [k for k, _ in self.factors]
        if len(set(idx)) != len(idx):
            raise ValidationError(f"repeated spin index in {self.factors}")
        for k, a in self.factors:
            if a not in AXES or k < 0:
                raise ValidationError(f"bad factor ({k}, {a!r})")

    @property
    def label(self) -> str:
        """Compact axis label such as ``"Z"`` or ``"XX"``."""
        return "".join(a for _, a in self.factors)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.factors)


@dataclass(frozen=True)
class PauliHamiltonian:
    n_spins: int
    terms: tuple[PauliTerm, ...]

    def __post_init__(self) -> None:
        for t in self.terms:
            if any(k >= self.n_spins for k in t.qubits):
                raise ValidationError(f"term {t} acts outside {self.n_spins} spins")

    def group(self, label: str) -> tuple[PauliTerm, ...]:
        """All terms with the given axis label, in stored (lexicographic) order."""
        return tuple(t for t in self.terms if t.label == label)


def build_terms(sys: SpinSystem) -> PauliHamiltonian:
    """Pauli-term form of the rotating-frame Hamiltonian.

    One ``Z`` term per spin with a nonzero offset, then ``XX``, ``YY``, ``ZZ``
    terms with coefficient ``2*pi*J_kl`` for every nonzero coupling.
    """
    terms: list[PauliTerm] = []
    for k, w in enumerate(sys.offsets_rad_s):
        if w != 0.0:
            terms.append(PauliTerm(float(w), ((k, "Z"),)))
    pairs = sys.couplings()
    for axis in AXES:
        for k, l, j in pairs:
            terms.append(PauliTerm(2.0 * np.pi * j, ((k, axis), (l, axis))))
    return PauliHamiltonian(sys.n_spins, tuple(terms))


def _term_action(term: PauliTerm, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Column action of the Pauli string: ``P|i> = phase[i] |i ^ mask>``."""
    idx = np.arange(2**n)
    phase = np.ones(2**n, dtype=complex)
    mask = 0
    for k, a in term.factors:
        bit = (idx >> k) & 1
        sign = 1 - 2 * bit
        if a == "X":
            mask |= 1 << k
        elif a == "Y":
            mask |= 1 << k
            phase = phase * (1j * sign)
        else:
            phase = phase * sign
    return phase, idx ^ mask


def _check_dense(n: int, dense_limit: int) -> None:
    if n > dense_limit:
        raise ResourceError(f"{n} spins exceeds the dense limit of {dense_limit}")


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """Dense ``2^N x 2^N`` matrix with a lazily cached Hermitian eigendecomposition."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        scale = max(1.0, float(np.max(np.abs(self.matrix), initial=0.0)))
        if self.hermiticity_error() > HERMITIAN_TOL * scale:
            raise ValidationError("operator is not Hermitian")
        return np.linalg.eigh(self.matrix)

    def propagator(self, t: float) -> np.ndarray:
        """Dense ``exp(-i H t)``."""
        w, v = self.eigh
        return (v * np.exp(-1j * w * t)) @ v.conj().T


def realize_dense(h: PauliHamiltonian, dense_limit: int = DENSE_LIMIT) -> DenseOperator:
    n = h.n_spins
    _check_dense(n, dense_limit)
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for term in h.terms:
        phase, rows = _term_action(term, n)
        mat[rows, cols] += term.coefficient * 0.5 ** len(term.factors) * phase
    return DenseOperator(mat)


def exact_evolve(h: DenseOperator, psi0, t):
    """``exp(-i H t) psi0`` via the cached eigendecomposition.

    ``t`` may be a scalar or a 1-D array of times; in the latter case the
    result carries a leading time axis.  ``psi0`` may be a raw amplitude
    vector or a :class:`~nmrqsim.simulator.StateVector`; the return type
    follows the input.
    """
    from .simulator import StateVector

    amps = psi0.amplitudes if isinstance(psi0, StateVector) else np.asarray(psi0, dtype=complex)
    if amps.shape[-1] != h.dim:
        raise ValidationError(f"state dimension {amps.shape[-1]} does not match operator {h.dim}")
    w, v = h.eigh
    coeff = amps @ v.conj()
    ts = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(ts, w))
    out = (phases * coeff) @ v.T
    if isinstance(psi0, StateVector):
        return StateVector(psi0.n_qubits, out)
    return out


def total_z(n: int) -> PauliHamiltonian:
    return PauliHamiltonian(n, tuple(PauliTerm(1.0, ((k, "Z"),)) for k in range(n)))


def total_z_commutator_norm(h: PauliHamiltonian, dense_limit: int = DENSE_LIMIT) -> float:
    """Max-abs entry of ``[sum_k I^Z_k, H]``."""
    _check_dense(h.n_spins, dense_limit)
    hz = realize_dense(total_z(h.n_spins), dense_limit).matrix
    hm = realize_dense(h, dense_limit).matrix
    return float(np.max(np.abs(hz @ hm - hm @ hz), initial=0.0))
