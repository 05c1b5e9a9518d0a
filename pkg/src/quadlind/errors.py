"""Exception hierarchy.

Structural problems (bad shapes, malformed files) and numerical
problems (accuracy, instability, defective spectra) are kept apart so
the CLI can map them to different exit codes.
"""


class QuadLindError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(QuadLindError, ValueError):
    """Inputs have the wrong shape or are otherwise malformed."""


class ModelParseError(StructuralError):
    """A model file could not be parsed."""

    def __init__(self, message, field=None, line=None):
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.field = field
        self.line = line


class InvalidModelError(QuadLindError, ValueError):
    """A model violates a physical invariant (hermiticity, positivity)."""


class NumericalError(QuadLindError, ArithmeticError):
    """Base class for failures of a numerical routine."""


class DiagonalizationError(NumericalError):
    """The matrix is numerically defective; no reliable eigenbasis exists."""


class AccuracyError(NumericalError):
    """A computed result fails its residual check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InstabilityError(NumericalError):
    """A denominator lambda_m + conj(lambda_n) is too close to zero."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class DarkModeError(NumericalError):
    """The drift matrix has dark modes, so the steady state is not unique."""


class RegimeError(QuadLindError, ValueError):
    """Parameters lie outside the regime where a closed form applies."""


class TruncationError(NumericalError):
    """A truncated Fock space is too small for the requested state."""


class PhysicalityError(NumericalError):
    """A computed observable is unphysical (e.g. negative density)."""


class SingularMatrixError(NumericalError):
    """A matrix that must be invertible is (numerically) singular."""
