"""State-vector engine: gate application, exact expectations, shot sampling.

Amplitudes are stored little-endian (qubit ``k`` is bit ``k`` of the basis
index).  A state may carry a leading batch axis, ``(B, 2**n)``; rotation
angles given as length-``B`` arrays are then applied row by row, so one pass
over a circuit evolves every time point of an FID at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import CircuitIR, Gate, gate_matrix
from .errors import ParameterError, ValidationError

NORM_TOL = 1e-10


@dataclass(eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape[-1] != 2**self.n_qubits:
            raise ValidationError(
                f"{self.amplitudes.shape[-1]} amplitudes do not match {self.n_qubits} qubits"
            )

    @classmethod
    def zero(cls, n_qubits: int, batch: int | None = None) -> StateVector:
        shape = (2**n_qubits,) if batch is None else (batch, 2**n_qubits)
        amps = np.zeros(shape, dtype=complex)
        amps[..., 0] = 1.0
        return cls(n_qubits, amps)

    @property
    def batched(self) -> bool:
        return self.amplitudes.ndim == 2

    def norm(self) -> np.ndarray | float:
        return np.linalg.norm(self.amplitudes, axis=-1)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())


def _rows(angle, batch: int) -> np.ndarray:
    """Angle as a float array broadcastable over the trailing batch axis."""
    a = np.asarray(angle, dtype=float)
    if a.ndim and a.shape != (batch,):
        raise ValidationError(f"angle array of shape {a.shape} does not match batch {batch}")
    return a


# Kernels below work on the batch-minor layout ``(2**n, B)``: every basis
# amplitude is a contiguous row over the batch, so per-batch angles broadcast
# along the fast axis.


def _qubit_view(amps: np.ndarray, n: int, k: int) -> np.ndarray:
    return amps.reshape(2 ** (n - 1 - k), 2, 2**k, amps.shape[-1])


def _apply_1q(amps: np.ndarray, n: int, k: int, mat: np.ndarray) -> None:
    """2x2 update on every amplitude pair separated by stride ``2**k``.

    ``mat`` is ``(2, 2)`` or per-batch ``(2, 2, B)``.
    """
    v = _qubit_view(amps, n, k)
    a0 = v[:, 0].copy()
    a1 = v[:, 1]
    m = mat if mat.ndim == 2 else mat[:, :, None, None, :]
    v[:, 0] = m[0, 0] * a0 + m[0, 1] * a1
    v[:, 1] = m[1, 0] * a0 + m[1, 1] * a1


def _pair_blocks(amps: np.ndarray, n: int, a: int, b: int):
    """Accessor for the four strided sub-blocks with fixed bits ``(b_a, b_b)``."""
    hi, lo = max(a, b), min(a, b)
    v = amps.reshape(2 ** (n - 1 - hi), 2, 2 ** (hi - lo - 1), 2, 2**lo, amps.shape[-1])

    def blk(ba: int, bb: int) -> np.ndarray:
        bh, bl = (ba, bb) if a == hi else (bb, ba)
        return v[:, bh, :, bl]

    return blk


def _apply_2q(amps: np.ndarray, n: int, q0: int, q1: int, mat: np.ndarray) -> None:
    """4x4 block update; ``mat`` index is ``b(q0) + 2 b(q1)``."""
    blk = _pair_blocks(amps, n, q0, q1)
    keys = [(0, 0), (1, 0), (0, 1), (1, 1)]
    old = [blk(*key).copy() for key in keys]
    for r, key in enumerate(keys):
        out = blk(*key)
        out[...] = 0
        for c in range(4):
            if mat[r, c] != 0:
                out += mat[r, c] * old[c]


def _rotation_2q_pauli(amps: np.ndarray, n: int, g: Gate, theta: np.ndarray) -> None:
    """RXX / RYY / RZZ as 4-amplitude block updates."""
    blk = _pair_blocks(amps, n, *g.qubits)
    if g.kind == "RZZ":
        e = np.exp(-0.5j * theta)
        blk(0, 0)[...] *= e
        blk(1, 1)[...] *= e
        e = np.conj(e)
        blk(0, 1)[...] *= e
        blk(1, 0)[...] *= e
        return
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    # XX swaps |00> <-> |11> and |01> <-> |10> with sign +1;
    # YY does the same with sign -1 on the 00/11 pair
    for x, y in (((0, 0), (1, 1)), ((0, 1), (1, 0))):
        sign = -1.0 if (g.kind == "RYY" and x == (0, 0)) else 1.0
        m = -1j * s * sign
        bx, by = blk(*x), blk(*y)
        old = bx.copy()
        bx *= c
        bx += m * by
        by *= c
        by += m * old


def _apply_rz(amps: np.ndarray, n: int, k: int, theta: np.ndarray) -> None:
    v = _qubit_view(amps, n, k)
    half = np.exp(-0.5j * theta)
    v[:, 0] *= half
    v[:, 1] *= np.conj(half)


def _apply_gate(amps: np.ndarray, n: int, g: Gate) -> None:
    batch = amps.shape[-1]
    k = g.kind
    if k == "MEASURE":
        return
    if k == "RZ":
        _apply_rz(amps, n, g.qubits[0], _rows(g.angle, batch))
        return
    if k in ("RXX", "RYY", "RZZ"):
        _rotation_2q_pauli(amps, n, g, _rows(g.angle, batch))
        return
    if k in ("RX", "RY"):
        a = _rows(g.angle, batch)
        if a.ndim:
            c, s = np.cos(a / 2), np.sin(a / 2)
            if k == "RX":
                mat = np.array([[c, -1j * s], [-1j * s, c]])
            else:
                mat = np.array([[c, -s], [s, c]], dtype=complex)
        else:
            mat = gate_matrix(k, float(a))
        _apply_1q(amps, n, g.qubits[0], mat)
        return
    mat = gate_matrix(k)
    if g.is_two_qubit:
        _apply_2q(amps, n, g.qubits[0], g.qubits[1], mat)
    else:
        _apply_1q(amps, n, g.qubits[0], mat)


def apply_circuit(c: CircuitIR, psi: StateVector | None = None) -> StateVector:
    """Apply ``c`` to a copy of ``psi`` (default ``|0...0>``); MEASURE is skipped.

    Gates with array-valued angles need a batched state whose batch size
    matches; an unbatched ``psi`` is broadcast to that size automatically.
    """
    n = c.n_qubits
    if psi is None:
        psi = StateVector.zero(n)
    if psi.n_qubits != n:
        raise ValidationError(f"circuit has {n} qubits but state has {psi.n_qubits}")
    batch = _circuit_batch(c)
    amps = psi.amplitudes
    squeeze = amps.ndim == 1 and batch is None
    if amps.ndim == 1:
        amps = np.broadcast_to(amps, (batch or 1, amps.size))
    elif batch is not None and amps.shape[0] != batch:
        raise ValidationError(f"state batch {amps.shape[0]} does not match angle batch {batch}")
    work = np.array(amps.T, dtype=complex, order="C")
    for g in c.gates:
        _apply_gate(work, n, g)
    out = work.T
    return StateVector(n, out[0].copy() if squeeze else np.ascontiguousarray(out))


def _circuit_batch(c: CircuitIR) -> int | None:
    sizes = {np.size(g.angle) for g in c.gates if g.angle is not None and np.ndim(g.angle)}
    if len(sizes) > 1:
        raise ValidationError(f"inconsistent angle batch sizes {sorted(sizes)}")
    return sizes.pop() if sizes else None


def circuit_unitary(c: CircuitIR) -> np.ndarray:
    """Dense unitary of a measurement-free, scalar-angle circuit."""
    dim = 2**c.n_qubits
    basis = StateVector(c.n_qubits, np.eye(dim, dtype=complex))
    # row i of the output is U e_i, i.e. column i of U
    return apply_circuit(c.without_measurements(), basis).amplitudes.T


def _bit_signs(n: int, k: int) -> np.ndarray:
    """``+1`` where bit ``k`` of the index is 0, ``-1`` where it is 1."""
    return 1.0 - 2.0 * ((np.arange(2**n) >> k) & 1)


def _pauli_expectation(amps: np.ndarray, n: int, axis: str) -> np.ndarray:
    idx = np.arange(2**n)
    total = np.zeros(amps.shape[:-1])
    for k in range(n):
        if axis == "Z":
            total += np.sum(np.abs(amps) ** 2 * _bit_signs(n, k), axis=-1)
            continue
        partner = amps[..., idx ^ (1 << k)]
        if axis == "X":
            total += np.real(np.sum(amps.conj() * partner, axis=-1))
        else:
            # (Y psi)[i] = i (-1)^(b_k(i)+1) psi[i ^ 2^k]
            total += np.real(np.sum(amps.conj() * (-1j) * _bit_signs(n, k) * partner, axis=-1))
    return 0.5 * total


def expectation_mx(psi: StateVector):
    """``<psi| sum_k I^X_k |psi>``; an array for batched states."""
    out = _pauli_expectation(psi.amplitudes, psi.n_qubits, "X")
    return float(out) if out.ndim == 0 else out


def expectation_my(psi: StateVector):
    out = _pauli_expectation(psi.amplitudes, psi.n_qubits, "Y")
    return float(out) if out.ndim == 0 else out


def expectation_mz(psi: StateVector):
    out = _pauli_expectation(psi.amplitudes, psi.n_qubits, "Z")
    return float(out) if out.ndim == 0 else out


def magnetization_values(n: int) -> np.ndarray:
    """Measured value ``sum_k (1 - 2 b_k) / 2`` for every bitstring index."""
    idx = np.arange(2**n)
    pop = np.zeros(2**n)
    for k in range(n):
        pop += (idx >> k) & 1
    return n / 2.0 - pop


def point_rng(seed: int, time_index: int = 0, run_index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed on ``(seed, time_index, run_index)``."""
    ss = np.random.SeedSequence([int(seed), int(time_index), int(run_index)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class ShotResult:
    shots: int
    counts: np.ndarray
    mx: float

    def bitstring_counts(self) -> dict[str, int]:
        """Nonzero counts keyed by bitstring, qubit 0 rightmost."""
        n = int(self.counts.size).bit_length() - 1
        return {format(i, f"0{n}b"): int(c) for i, c in enumerate(self.counts) if c}


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def sample_mx(
    c: CircuitIR,
    psi0: StateVector | None = None,
    shots: int = 4000,
    seed: int = 0,
    time_index: int = 0,
    run_index: int = 0,
) -> ShotResult:
    """Run ``c`` (which must end in a full measurement layer) and sample ``shots``.

    The circuit is expected to contain the X-basis change already, so each
    bit reads ``b_k = 0`` for spin +1/2 along X.
    """
    if shots <= 0:
        raise ParameterError("shots must be positive")
    measured = {g.qubits[0] for g in c.gates if g.kind == "MEASURE"}
    if measured != set(range(c.n_qubits)):
        raise ValidationError("circuit must end with MEASURE on every qubit")
    if _circuit_batch(c) is not None:
        raise ValidationError("sample_mx takes a single circuit; use acquisition for batches")
    psi = apply_circuit(c, psi0)
    counts = sample_counts(psi.probabilities(), shots, point_rng(seed, time_index, run_index))
    mx = float(counts @ magnetization_values(c.n_qubits)) / shots
    return ShotResult(shots, counts, mx)
