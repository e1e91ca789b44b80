"""Exact checks that a measurement on the last spin of a ZZ chain never reaches a distant block."""

from .errors import NoSignalError, ResourceError, StructureError, UsageError, ValidationError
from .pauli import (
    PauliString,
    PauliSum,
    bipartition,
    commutator,
    decompose_at_site,
    partial_trace_pauli,
    pauli_mul,
    to_dense,
)

__version__ = "0.1.0"

__all__ = [
    "NoSignalError",
    "ResourceError",
    "StructureError",
    "UsageError",
    "ValidationError",
    "PauliString",
    "PauliSum",
    "bipartition",
    "commutator",
    "decompose_at_site",
    "partial_trace_pauli",
    "pauli_mul",
    "to_dense",
]
