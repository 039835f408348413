"""Exception hierarchy shared by every module."""


class NcpolyError(Exception):
    """Base class for all library errors."""


class DimensionError(NcpolyError, ValueError):
    """Operand shapes are incompatible."""


class DomainError(NcpolyError, ValueError):
    """An argument lies outside the domain of the operation."""


class AxiomViolation(DomainError):
    """A constructed object breaks a structural axiom (Hermitian, PSD, unit trace)."""


class NotPSDError(AxiomViolation):
    """A matrix expected to be positive semidefinite is not.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue of the Hermitized input.
    """

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class OrderingViolationError(DomainError):
    """``L <= K`` fails, so no Radon-Nikodym derivative exists."""

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class InternalConsistencyError(NcpolyError, RuntimeError):
    """Two independent routes to the same verdict disagree."""


class TheoremViolationError(NcpolyError, RuntimeError):
    """A constructive identity failed its residual check.

    Attributes
    ----------
    residuals : dict
        The residuals that were measured before giving up.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})
