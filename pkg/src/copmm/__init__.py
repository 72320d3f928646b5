"""Coded secure and private matrix multiplication over prime fields.

Two code families (polynomial codes with configurable degree assignments, and
Lagrange codes over a bilinear tensor) cover three problems: secure (SMM),
private-secure (PSMM) and fully private (FPMM) distributed multiplication.
"""

__version__ = "0.1.0"

from .bilinear import BilinearTensor, builtin_tensor, kronecker_compose, naive_tensor, strassen_tensor, verify_tensor
from .errors import (
    BelowThresholdError,
    CopmmError,
    EnumerationTooLargeError,
    FieldMismatchError,
    InsufficientWorkersError,
    ValidationError,
)
from .field import DEFAULT_MODULUS, FieldConfig, FieldElement
from .matrix import Matrix, PartitionSpec, assemble, partition, read_fqmx, write_fqmx
from .poly import EvaluationPoints, MatrixPolynomial, evaluate, interpolate
from .private import LibraryA, LibraryB, StrategyConfig, fpmm_run, psmm_run, smm_run
from .sim import Job, WorkerProfile, simulate
from .smm import DegreeAssignment, preset_assignment, recovery_threshold, verify_c1, verify_c2

__all__ = [
    "BelowThresholdError", "BilinearTensor", "CopmmError", "DEFAULT_MODULUS", "DegreeAssignment",
    "EnumerationTooLargeError", "EvaluationPoints", "FieldConfig", "FieldElement", "FieldMismatchError",
    "InsufficientWorkersError", "Job", "LibraryA", "LibraryB", "Matrix", "MatrixPolynomial",
    "PartitionSpec", "StrategyConfig", "ValidationError", "WorkerProfile", "assemble", "builtin_tensor",
    "evaluate", "fpmm_run", "interpolate", "kronecker_compose", "naive_tensor", "partition",
    "preset_assignment", "psmm_run", "read_fqmx", "recovery_threshold", "simulate", "smm_run",
    "strassen_tensor", "verify_c1", "verify_c2", "verify_tensor", "write_fqmx",
]
