"""FID circuit construction, product formulas and native-gate decomposition.

Angle conventions (one table, used by builder, decomposer and simulator)::

    RZ(θ)  = exp(-i θ/2 Z)          exp(-i ω τ I^Z)          = RZ(ω τ)
    RX(θ), RY(θ) likewise
    Raa(θ) = exp(-i θ/2 σa⊗σa)      exp(-i 2πJ τ I^a I^a)    = Raa(π J τ)

Rotation angles may be scalars or 1-D arrays.  An array angle describes the
same gate sequence evaluated at many evolution times at once, which is how
FID acquisition builds all time points in a single pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

import numpy as np

from .errors import DecompositionError, ParameterError, ValidationError
from .hamiltonian import PauliHamiltonian, build_terms
from .spin_model import SpinSystem

ROTATIONS_1Q = {"RX", "RY", "RZ"}
ROTATIONS_2Q = {"RXX", "RYY", "RZZ"}
FIXED_1Q = {"H", "SX"}
FIXED_2Q = {"CX", "ECR", "SWAP"}
GATE_KINDS = ROTATIONS_1Q | ROTATIONS_2Q | FIXED_1Q | FIXED_2Q | {"MEASURE"}
TWO_QUBIT = ROTATIONS_2Q | FIXED_2Q

# group application order within one Lie-Trotter step: XX first, ZZ last
GROUP_ORDER = ("XX", "YY", "Z", "ZZ")
_GROUP_GATE = {"XX": "RXX", "YY": "RYY", "ZZ": "RZZ", "Z": "RZ"}

FORMULAS = {"lie": 1, "suzuki2": 2, "suzuki4": 4, "suzuki6": 6}


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    angle: Any = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in TWO_QUBIT else 1
        if len(self.qubits) != arity:
            raise ValidationError(f"{self.kind} takes {arity} operand(s), got {self.qubits}")
        if len(set(self.qubits)) != arity:
            raise ValidationError(f"{self.kind} operands must be distinct: {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ValidationError(f"negative operand in {self.qubits}")
        needs_angle = self.kind in ROTATIONS_1Q | ROTATIONS_2Q
        if needs_angle and self.angle is None:
            raise ValidationError(f"{self.kind} needs an angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT

    def same_as(self, other: Gate, atol: float = 0.0) -> bool:
        if self.kind != other.kind or self.qubits != other.qubits:
            return False
        if self.angle is None or other.angle is None:
            return self.angle is None and other.angle is None
        return bool(np.allclose(self.angle, other.angle, rtol=0.0, atol=atol))

    def __repr__(self) -> str:
        ang = "" if self.angle is None else f", {np.round(self.angle, 6)}"
        return f"Gate({self.kind}, {self.qubits}{ang})"


@dataclass(frozen=True, eq=False)
class CircuitIR:
    n_qubits: int
    gates: tuple[Gate, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q >= self.n_qubits for q in g.qubits):
                raise ValidationError(f"{g} acts outside {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def count(self, *kinds: str) -> int:
        return sum(g.kind in kinds for g in self.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    @property
    def two_qubit_depth(self) -> int:
        return two_qubit_depth(self.gates, self.n_qubits)

    def without_measurements(self) -> CircuitIR:
        return CircuitIR(self.n_qubits, [g for g in self.gates if g.kind != "MEASURE"], dict(self.metadata))

    def dumps(self) -> str:
        """One gate per line: ``KIND q0[,q1][,angle_rad]``."""
        lines = []
        for g in self.gates:
            fields = [str(q) for q in g.qubits]
            if g.angle is not None:
                if np.ndim(g.angle):
                    raise ValidationError("cannot dump a circuit with array-valued angles")
                fields.append(repr(float(g.angle)))
            lines.append(f"{g.kind} {','.join(fields)}")
        return "\n".join(lines) + "\n"


def loads_circuit(text: str, n_qubits: int | None = None) -> CircuitIR:
    gates = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, _, rest = line.partition(" ")
        fields = rest.split(",")
        arity = 2 if kind in TWO_QUBIT else 1
        qubits = tuple(int(f) for f in fields[:arity])
        angle = float(fields[arity]) if len(fields) > arity else None
        gates.append(Gate(kind, qubits, angle))
    if n_qubits is None:
        n_qubits = 1 + max((q for g in gates for q in g.qubits), default=-1)
    return CircuitIR(n_qubits, gates)


def two_qubit_depth(gates: Iterable[Gate], n_qubits: int) -> int:
    """Longest chain of two-qubit gates linked through shared qubits."""
    level = [0] * n_qubits
    for g in gates:
        if g.is_two_qubit:
            a, b = g.qubits
            lvl = max(level[a], level[b]) + 1
            level[a] = level[b] = lvl
    return max(level, default=0)


# ---------------------------------------------------------------- matrices

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def kron_le(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product with ``ops[0]`` on qubit 0 (least significant bit)."""
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(op, out)
    return out


def gate_matrix(kind: str, angle: float | None = None) -> np.ndarray:
    """Unitary of a gate in operand order (operand 0 is the low bit)."""
    if kind in ROTATIONS_1Q:
        p = PAULI[kind[1]]
        return np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * p
    if kind in ROTATIONS_2Q:
        p = PAULI[kind[1]]
        return np.cos(angle / 2) * np.eye(4) - 1j * np.sin(angle / 2) * np.kron(p, p)
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if kind == "SX":
        return 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
    if kind == "CX":
        # operand 0 controls operand 1
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        return kron_le(p0, _I2) + kron_le(p1, _X)
    if kind == "ECR":
        # echoed cross-resonance RZX(π/4) X_c RZX(-π/4); operand 0 is the control
        return (kron_le(_X, _I2) - kron_le(_Y, _X)) / np.sqrt(2)
    if kind == "SWAP":
        return np.eye(4, dtype=complex)[[0, 2, 1, 3]]
    raise ValidationError(f"no matrix for {kind}")


# -------------------------------------------------------- product formulas


def _check_order(order: int) -> None:
    if order < 2 or order % 2:
        raise ParameterError(f"Suzuki order must be an even number >= 2, got {order}")


def suzuki_schedule(order: int) -> list[tuple[str, float]]:
    """Sequence of ``(group, fraction of dt)`` layers for the given order.

    Order 1 is the plain Lie-Trotter step.  Order 2 is the symmetric half-step
    sandwich; higher orders use the Suzuki recursion
    ``S_2k(dt) = S_2k-2(u dt)^2 S_2k-2((1-4u) dt) S_2k-2(u dt)^2``.
    """
    if order == 1:
        return [(g, 1.0) for g in GROUP_ORDER]
    _check_order(order)
    if order == 2:
        *outer, mid = GROUP_ORDER
        half = [(g, 0.5) for g in outer]
        return half + [(mid, 1.0)] + half[::-1]
    k = order // 2
    u = 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))
    inner = suzuki_schedule(order - 2)
    scaled = lambda f: [(g, x * f) for g, x in inner]  # noqa: E731
    return scaled(u) * 2 + scaled(1 - 4 * u) + scaled(u) * 2


def _group_gates(h: PauliHamiltonian, group: str, tau) -> list[Gate]:
    kind = _GROUP_GATE[group]
    gates = []
    for term in h.group(group):
        # one-local: θ = c τ ; two-local: θ = c τ / 2 (I = σ/2 on both factors)
        scale = 1.0 if len(term.factors) == 1 else 0.5
        gates.append(Gate(kind, term.qubits, term.coefficient * scale * tau))
    return gates


def schedule_gates(h: PauliHamiltonian, dt, schedule: list[tuple[str, float]]) -> list[Gate]:
    dt = np.asarray(dt, dtype=float) if np.ndim(dt) else float(dt)
    gates: list[Gate] = []
    for group, frac in schedule:
        gates.extend(_group_gates(h, group, dt * frac))
    return gates


def lie_trotter_layers(h: PauliHamiltonian, dt) -> list[Gate]:
    return schedule_gates(h, dt, suzuki_schedule(1))


def suzuki_layers(h: PauliHamiltonian, dt, order: int = 2) -> list[Gate]:
    _check_order(order)
    return schedule_gates(h, dt, suzuki_schedule(order))


def formula_order(formula: str | int) -> int:
    if isinstance(formula, (int, np.integer)):
        order = int(formula)
        if order != 1:
            _check_order(order)
        return order
    key = str(formula).lower().replace("-", "").replace("_", "")
    aliases = {"lietrotter": "lie", "trotter": "lie", "suzuki": "suzuki2"}
    key = aliases.get(key, key)
    if key in FORMULAS:
        return FORMULAS[key]
    if key.startswith("suzuki") and key[6:].isdigit():
        order = int(key[6:])
        _check_order(order)
        return order
    raise ParameterError(f"unknown product formula {formula!r}")


def build_fid_circuit(
    sys: SpinSystem,
    t,
    repetitions: int = 1,
    formula: str | int = "lie",
    measure: bool = True,
) -> CircuitIR:
    """FID circuit: pi/2 pulse, ``repetitions`` product-formula steps, X readout.

    ``t`` may be an array of times, in which case all rotation angles are
    arrays over that time axis.  With ``measure=False`` the readout layer
    (``RY(-pi/2)`` + ``MEASURE`` on every qubit) is omitted and the circuit
    ends with the evolved state.
    """
    if int(repetitions) != repetitions or repetitions < 1:
        raise ParameterError(f"repetitions must be a positive integer, got {repetitions}")
    order = formula_order(formula)
    n = sys.n_spins
    h = build_terms(sys)
    t_arr = np.asarray(t, dtype=float)
    dt = t_arr / repetitions if t_arr.ndim else float(t) / repetitions
    step = schedule_gates(h, dt, suzuki_schedule(order))

    gates = [Gate("RY", (q,), np.pi / 2) for q in range(n)]
    for _ in range(int(repetitions)):
        gates.extend(step)
    if measure:
        gates.extend(Gate("RY", (q,), -np.pi / 2) for q in range(n))
        gates.extend(Gate("MEASURE", (q,)) for q in range(n))
    meta = {"repetitions": int(repetitions), "time": t, "order": order, "system": sys.name}
    return CircuitIR(n, gates, meta)


# ------------------------------------------------------------ decomposition

# CX(c, t) = [RX(pi) on c, SX on t] -> ECR(c, t) -> RZ(pi/2) on c, up to global phase
def _cx_to_ecr(c: int, t: int) -> list[Gate]:
    return [
        Gate("RX", (c,), np.pi),
        Gate("SX", (t,)),
        Gate("ECR", (c, t)),
        Gate("RZ", (c,), np.pi / 2),
    ]


def _rzz(a: int, b: int, theta) -> list[Gate]:
    return [Gate("CX", (a, b)), Gate("RZ", (b,), theta), Gate("CX", (a, b))]


def _conjugated(a: int, b: int, theta, pre: list[Gate], post: list[Gate]) -> list[Gate]:
    return pre + _rzz(a, b, theta) + post


def decompose_gate(g: Gate, basis: str = "cx") -> list[Gate]:
    """Rewrite one gate into ``{RX, RY, RZ, H, SX, MEASURE}`` plus CX or ECR."""
    if basis not in ("cx", "ecr"):
        raise ParameterError(f"unknown native basis {basis!r}")
    k = g.kind
    if k in ROTATIONS_1Q or k in FIXED_1Q or k == "MEASURE":
        out = [g]
    elif k == "RZZ":
        out = _rzz(*g.qubits, g.angle)
    elif k == "RXX":
        a, b = g.qubits
        hh = [Gate("H", (a,)), Gate("H", (b,))]
        out = _conjugated(a, b, g.angle, hh, list(hh))
    elif k == "RYY":
        a, b = g.qubits
        pre = [Gate("RX", (a,), np.pi / 2), Gate("RX", (b,), np.pi / 2)]
        post = [Gate("RX", (a,), -np.pi / 2), Gate("RX", (b,), -np.pi / 2)]
        out = _conjugated(a, b, g.angle, pre, post)
    elif k == "CX":
        out = [g]
    elif k == "SWAP":
        a, b = g.qubits
        out = [Gate("CX", (a, b)), Gate("CX", (b, a)), Gate("CX", (a, b))]
    elif k == "ECR":
        if basis != "ecr":
            raise DecompositionError("ECR cannot be rewritten into the cx basis")
        return [g]
    else:
        raise DecompositionError(f"cannot decompose {k}")
    if basis == "ecr":
        out = [x for y in out for x in (_cx_to_ecr(*y.qubits) if y.kind == "CX" else [y])]
    return out


def decompose_to_native(c: CircuitIR, basis: str = "cx") -> CircuitIR:
    """Every two-qubit Pauli rotation becomes exactly two native two-qubit gates."""
    gates = [x for g in c.gates for x in decompose_gate(g, basis)]
    meta = dict(c.metadata, basis=basis)
    return CircuitIR(c.n_qubits, gates, meta)
