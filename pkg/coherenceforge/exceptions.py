"""
Custom exceptions for CoherenceForge
"""

from typing import List, Optional


class CoherenceForgeError(Exception):
    """Base exception for CoherenceForge"""
    pass


class LinalgError(CoherenceForgeError):
    """Raised when a matrix routine cannot produce a result"""
    pass


class NotHermitianError(LinalgError):
    """Raised when a matrix is not Hermitian within tolerance"""
    pass


class NotPSDError(LinalgError):
    """Raised when a matrix has an eigenvalue below the clipping tolerance"""
    pass


class NoConvergenceError(LinalgError):
    """Raised when an iterative routine exhausts its budget"""
    pass


class DimensionMismatchError(LinalgError):
    """Raised when operand dimensions are incompatible"""
    pass


class StateValidationError(CoherenceForgeError):
    """Raised when a state fails one or more of its invariants"""

    def __init__(self, failures: List[str]):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ChannelError(CoherenceForgeError):
    """Raised when a Kraus channel is malformed or cannot be built"""
    pass


class NotIncoherentError(ChannelError):
    """Raised when a Kraus operator can create coherence"""

    def __init__(self, message: str, operator: Optional[int] = None, column: Optional[int] = None):
        self.operator = operator
        self.column = column
        super().__init__(message)


class UnsupportedDimsError(CoherenceForgeError):
    """Raised when a check is only defined for other subsystem dimensions"""
    pass


class CertificationFailedError(CoherenceForgeError):
    """Raised when upper and lower bounds of a certified value disagree"""

    def __init__(self, message: str, gap: float):
        self.gap = gap
        super().__init__(message)


class ConfigurationError(CoherenceForgeError):
    """Raised when configuration is invalid"""
    pass
