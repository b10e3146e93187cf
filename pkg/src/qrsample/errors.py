"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class QRSError(Exception):
    """Base class for all package errors."""


class ValidationError(QRSError, ValueError):
    """Malformed input: wrong shapes, non-unit vectors, bad register layout."""


class NumericalError(QRSError, ArithmeticError):
    """A numerical invariant (norm, unitarity, convergence) was violated."""


class ProbabilityRangeError(QRSError, ValueError):
    """Requested success probability lies outside ``[p_min, p_max]``."""

    def __init__(self, p, p_min, p_max, message=None):
        self.p = p
        self.p_min = p_min
        self.p_max = p_max
        super().__init__(message or f"p={p!r} outside [p_min={p_min!r}, p_max={p_max!r}]")


class InfeasibleError(ProbabilityRangeError):
    """``p > p_max``: no algorithm reaches this success probability."""


class PromiseError(ValidationError):
    """Hidden shift instance violates the identifiability promise."""
