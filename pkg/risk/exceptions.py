"""
Error hierarchy for the risk toolkit.

Each class carries the CLI exit code it maps to.
"""
from typing import Any, Dict, List, Optional


class RiskError(Exception):
    """Base class for every error raised by the risk computations."""

    exit_code: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error': self.__class__.__name__,
            'message': str(self),
            'exit_code': self.exit_code,
        }


class DomainError(RiskError, ValueError):
    """Argument outside the domain of the operation."""


class GammaOverflowError(RiskError, OverflowError):
    """Incomplete gamma value beyond the representable range."""


class DivergenceError(RiskError):
    """The asymptotic risk integral is infinite."""

    exit_code = 2


class QuadratureError(RiskError):
    """Adaptive quadrature did not reach the requested tolerance."""

    exit_code = 2

    def __init__(self, message: str, abs_error: float = float('nan'), value: float = float('nan')):
        super().__init__(message)
        self.abs_error = abs_error
        self.value = value


class NoBracketError(RiskError):
    """The derivative of the asymptotic risk never changes sign."""

    exit_code = 3

    def __init__(self, message: str, explored: Optional[tuple] = None):
        super().__init__(message)
        self.explored = explored


class NonConvergenceError(RiskError):
    """No truncation certificate is available for the finite-p series."""

    exit_code = 2


class PreconditionError(RiskError):
    """A hypothesis of the requested check is not met."""


class LossFileError(RiskError):
    """A loss description was rejected."""

    def __init__(self, message: str, errors: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.errors = errors or {}

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        if self.errors:
            result['details'] = self.errors
        return result


class VerificationError(RiskError):
    """A verification report asserted and at least one row failed."""

    exit_code = 4

    def __init__(self, message: str, failures: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.failures = failures or []

    def to_dict(self) -> Dict[str, Any]:
        result = super().to_dict()
        result['failures'] = self.failures
        return result
