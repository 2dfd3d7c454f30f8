"""Spin systems, the JSON input schema, and coupling-graph clustering.

A :class:`SpinSystem` holds everything needed to build the rotating-frame
Hamiltonian: chemical shifts in ppm, the spectrometer proton frequency, the
carrier and a symmetric J-coupling matrix in Hz.  Offsets are converted to
angular frequency (rad/s) here and nowhere else.

Input documents look like::

    {
      "name": "ethanol-fragment",
      "spectrometer_mhz": 400,
      "carrier_ppm": 0.0,
      "spins": [{"label": "H1", "shift_ppm": 1.2}, {"label": "H2", "shift_ppm": 3.6}],
      "j_couplings": [{"i": 0, "j": 1, "hz": 7.0}]
    }

Couplings are a sparse list.  Giving only one of ``(i, j)`` / ``(j, i)`` fills
the symmetric partner; giving both requires them to agree within 1e-9 Hz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import SchemaError, ValidationError

SYMMETRY_TOL_HZ = 1e-9

SPIN_SYSTEM_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["spectrometer_mhz", "spins", "j_couplings"],
    "properties": {
        "name": {"type": "string"},
        "spectrometer_mhz": {"type": "number", "exclusiveMinimum": 0},
        "carrier_ppm": {"type": "number"},
        "spins": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["label", "shift_ppm"],
                "properties": {
                    "label": {"type": "string"},
                    "shift_ppm": {"type": "number"},
                },
            },
        },
        "j_couplings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["i", "j", "hz"],
                "properties": {
                    "i": {"type": "integer", "minimum": 0},
                    "j": {"type": "integer", "minimum": 0},
                    "hz": {"type": "number"},
                },
            },
        },
    },
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Isotropic spin-1/2 system in the rotating frame.

    Args:
        labels: One identifier per spin.
        spectrometer_mhz: Proton Larmor frequency of the instrument in MHz.
        shifts_ppm: Chemical shift of each spin in ppm.
        j_matrix: Symmetric N x N scalar couplings in Hz with zero diagonal.
        carrier_ppm: Shift of the rotating-frame reference.
        name: Free-form identifier carried into reports.
    """

    labels: tuple[str, ...]
    spectrometer_mhz: float
    shifts_ppm: np.ndarray
    j_matrix: np.ndarray
    carrier_ppm: float = 0.0
    name: str = "spin-system"

    def __post_init__(self) -> None:
        shifts = _frozen(self.shifts_ppm)
        jm = _frozen(self.j_matrix)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "shifts_ppm", shifts)
        object.__setattr__(self, "j_matrix", jm)
        n = len(self.labels)
        if shifts.shape != (n,):
            raise ValidationError(f"expected {n} shifts, got shape {shifts.shape}")
        if jm.shape != (n, n):
            raise ValidationError(f"j_matrix must be {n}x{n}, got {jm.shape}")
        if not np.isfinite(self.spectrometer_mhz) or self.spectrometer_mhz <= 0:
            raise ValidationError("spectrometer_mhz must be a positive finite number")
        if not np.isfinite(self.carrier_ppm):
            raise ValidationError("carrier_ppm must be finite")
        if not np.all(np.isfinite(shifts)):
            raise ValidationError("chemical shifts must be finite")
        if not np.all(np.isfinite(jm)):
            raise ValidationError("J couplings must be finite")
        if np.any(np.diag(jm) != 0.0):
            raise ValidationError("j_matrix diagonal must be zero")
        if not np.array_equal(jm, jm.T):
            raise ValidationError("j_matrix must be exactly symmetric")
        if not np.all(np.isfinite(self.offsets_rad_s)):
            raise ValidationError("rotating-frame offsets overflow")

    @property
    def n_spins(self) -> int:
        return len(self.labels)

    @property
    def offsets_hz(self) -> np.ndarray:
        # 1 ppm of a ν MHz instrument is ν Hz
        return (self.shifts_ppm - self.carrier_ppm) * self.spectrometer_mhz

    @property
    def offsets_rad_s(self) -> np.ndarray:
        return 2.0 * np.pi * self.offsets_hz

    def couplings(self, threshold_hz: float = 0.0) -> list[tuple[int, int, float]]:
        """Upper-triangle couplings ``(k, l, J_kl)`` with ``|J_kl| > threshold_hz``."""
        ks, ls = np.triu_indices(self.n_spins, k=1)
        vals = self.j_matrix[ks, ls]
        keep = np.abs(vals) > threshold_hz
        return [(int(k), int(l), float(v)) for k, l, v in zip(ks[keep], ls[keep], vals[keep])]

    def subsystem(self, members: list[int] | tuple[int, ...], name: str | None = None) -> SpinSystem:
        """Induced system on ``members`` (kept in the given order)."""
        idx = np.asarray(members, dtype=int)
        return SpinSystem(
            labels=tuple(self.labels[i] for i in idx),
            spectrometer_mhz=self.spectrometer_mhz,
            shifts_ppm=self.shifts_ppm[idx],
            j_matrix=self.j_matrix[np.ix_(idx, idx)],
            carrier_ppm=self.carrier_ppm,
            name=name or f"{self.name}[{','.join(map(str, idx))}]",
        )

    def to_document(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "spectrometer_mhz": self.spectrometer_mhz,
            "carrier_ppm": self.carrier_ppm,
            "spins": [
                {"label": lab, "shift_ppm": float(s)} for lab, s in zip(self.labels, self.shifts_ppm)
            ],
            "j_couplings": [{"i": k, "j": l, "hz": j} for k, l, j in self.couplings()],
        }

    @classmethod
    def from_offsets_hz(
        cls,
        offsets_hz,
        j_matrix,
        spectrometer_mhz: float = 400.0,
        labels=None,
        name: str = "spin-system",
    ) -> SpinSystem:
        """Convenience constructor taking rotating-frame offsets in Hz (carrier at 0 ppm)."""
        offsets = np.asarray(offsets_hz, dtype=float)
        jm = np.asarray(j_matrix, dtype=float)
        if labels is None:
            labels = [f"H{k + 1}" for k in range(offsets.size)]
        return cls(
            labels=tuple(labels),
            spectrometer_mhz=spectrometer_mhz,
            shifts_ppm=offsets / spectrometer_mhz,
            j_matrix=jm,
            name=name,
        )


def parse_spin_system(source: str | bytes | dict) -> SpinSystem:
    """Parse and validate a spin-system JSON document.

    Raises:
        SchemaError: malformed JSON, missing fields or wrong types.
        ValidationError: out-of-range indices, conflicting couplings, NaN/Inf.
    """
    if isinstance(source, dict):
        doc = source
    else:
        try:
            # NaN/Infinity literals are accepted here and rejected below with a clear message
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(doc, SPIN_SYSTEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"schema error at {where}: {exc.message}") from exc

    spins = doc["spins"]
    n = len(spins)
    shifts = np.array([s["shift_ppm"] for s in spins], dtype=float)
    if not np.all(np.isfinite(shifts)):
        raise ValidationError("chemical shifts must be finite")

    jm = np.zeros((n, n))
    given: dict[tuple[int, int], float] = {}
    for c in doc["j_couplings"]:
        i, j, hz = int(c["i"]), int(c["j"]), float(c["hz"])
        if i >= n or j >= n:
            raise ValidationError(f"coupling ({i},{j}) references a spin outside 0..{n - 1}")
        if i == j:
            raise ValidationError(f"self-coupling on spin {i}")
        if not np.isfinite(hz):
            raise ValidationError(f"coupling ({i},{j}) is not finite")
        if (i, j) in given:
            raise ValidationError(f"coupling ({i},{j}) given twice")
        given[(i, j)] = hz
    for (i, j), hz in given.items():
        partner = given.get((j, i))
        if partner is not None and abs(partner - hz) > SYMMETRY_TOL_HZ:
            raise ValidationError(f"asymmetric coupling: J[{i}][{j}]={hz} but J[{j}][{i}]={partner}")
        # symmetrize explicitly; with both halves present use the upper-triangle value
        k, l = min(i, j), max(i, j)
        if (k, l) in given:
            hz = given[(k, l)]
        jm[k, l] = jm[l, k] = hz

    return SpinSystem(
        labels=tuple(s["label"] for s in spins),
        spectrometer_mhz=float(doc["spectrometer_mhz"]),
        shifts_ppm=shifts,
        j_matrix=jm,
        carrier_ppm=float(doc.get("carrier_ppm", 0.0)),
        name=doc.get("name", "spin-system"),
    )


def load_spin_system(path: str | Path) -> SpinSystem:
    return parse_spin_system(Path(path).read_text())


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected graph with an edge wherever ``|J_kl|`` exceeds the threshold."""

    n_spins: int
    edges: frozenset[tuple[int, int]]
    threshold_hz: float = 0.0

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, k: int) -> list[int]:
        return sorted({b if a == k else a for a, b in self.edges if k in (a, b)})


def coupling_graph(sys: SpinSystem, coupling_threshold: float = 0.0) -> CouplingGraph:
    if coupling_threshold < 0:
        raise ValidationError("coupling_threshold must be >= 0")
    edges = frozenset((k, l) for k, l, _ in sys.couplings(coupling_threshold))
    return CouplingGraph(sys.n_spins, edges, coupling_threshold)


@dataclass(frozen=True)
class SpinCluster:
    members: tuple[int, ...]
    system: SpinSystem = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.members)


def decompose_clusters(sys: SpinSystem, coupling_threshold: float = 0.0) -> list[SpinCluster]:
    """Split ``sys`` into connected components of its coupling graph.

    Clusters are ordered by their smallest member index; each carries the
    induced subsystem, so couplings at or below the threshold that cross a
    cluster boundary are dropped.
    """
    graph = coupling_graph(sys, coupling_threshold)
    n = sys.n_spins
    rows = [k for k, _ in graph.edges]
    cols = [l for _, l in graph.edges]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    groups: dict[int, list[int]] = {}
    for k, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(k)
    ordered = sorted(groups.values(), key=lambda g: g[0])
    return [
        SpinCluster(tuple(g), sys.subsystem(g, name=f"{sys.name}#{i}"))
        for i, g in enumerate(ordered)
    ]
