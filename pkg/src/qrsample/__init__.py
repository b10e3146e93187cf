"""Exact statevector simulation of quantum rejection sampling and its applications."""

from .errors import (
    InfeasibleError,
    NumericalError,
    ProbabilityRangeError,
    PromiseError,
    QRSError,
    ValidationError,
)
from .qrs import plan_exact, run_AQRS
from .sqrs import Schedule, run_ASQRS
from .statevector import QuantumState, QueryCounter, make_preparation_oracle
from .waterfill import compute_bounds, verify_duality, waterfill

__all__ = [
    "InfeasibleError",
    "NumericalError",
    "ProbabilityRangeError",
    "PromiseError",
    "QRSError",
    "QuantumState",
    "QueryCounter",
    "Schedule",
    "ValidationError",
    "compute_bounds",
    "make_preparation_oracle",
    "plan_exact",
    "run_AQRS",
    "run_ASQRS",
    "verify_duality",
    "waterfill",
]

__version__ = "0.1.0"
