"""Quantum-circuit simulation of liquid-state proton NMR free induction decays."""

from .circuit import CircuitIR, Gate, build_fid_circuit, decompose_to_native, suzuki_layers
from .errors import (
    DecompositionError,
    NmrQSimError,
    ParameterError,
    ResourceError,
    SchemaError,
    UndefinedMetricError,
    ValidationError,
)
from .hamiltonian import build_terms, exact_evolve, realize_dense, total_z_commutator_norm
from .simulator import StateVector, apply_circuit, expectation_mx, expectation_my, sample_mx
from .spectro import AcquisitionConfig, acquire_fid, cosine_distance, to_spectrum, trotter_error_sweep
from .spin_model import SpinSystem, coupling_graph, decompose_clusters, load_spin_system, parse_spin_system
from .transpiler import heavy_hex, route, scaling_study

__all__ = [
    "acquire_fid",
    "AcquisitionConfig",
    "apply_circuit",
    "build_fid_circuit",
    "build_terms",
    "CircuitIR",
    "cosine_distance",
    "coupling_graph",
    "decompose_clusters",
    "decompose_to_native",
    "DecompositionError",
    "exact_evolve",
    "expectation_mx",
    "expectation_my",
    "Gate",
    "heavy_hex",
    "load_spin_system",
    "NmrQSimError",
    "ParameterError",
    "parse_spin_system",
    "realize_dense",
    "ResourceError",
    "route",
    "sample_mx",
    "scaling_study",
    "SchemaError",
    "SpinSystem",
    "StateVector",
    "suzuki_layers",
    "to_spectrum",
    "total_z_commutator_norm",
    "trotter_error_sweep",
    "UndefinedMetricError",
    "ValidationError",
]

__version__ = "0.1.0"
