"""Exception types shared across the package."""

from __future__ import annotations


class MargexError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(MargexError):
    """Operands have incompatible shapes or factor dimensions."""


class NotHermitianError(MargexError):
    """Matrix fails the Hermiticity check."""


class NoConvergenceError(MargexError):
    """Iterative eigensolver did not reach its tolerance."""


class SingularMatrixError(MargexError):
    """Matrix function undefined on a (numerically) singular input."""


class InvalidStateError(MargexError):
    """Matrix is not an acceptable density matrix."""


class SpectraMismatchError(MargexError):
    """Two states do not share a common non-zero spectrum."""


class AncillaTooSmallError(MargexError):
    """Ancilla dimension below the rank of the state to purify."""


class IncompatibleMarginalsError(MargexError):
    """Overlap marginals disagree beyond tolerance.

    Attributes
    ----------
    distance : float
        Trace-norm distance between the two reductions.
    """

    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = float(distance)


class NotPositiveDefiniteError(MargexError):
    """Input must be strictly positive definite but is not."""


class NotPSDError(MargexError):
    """Constructed matrix left the positive semidefinite cone.

    Attributes
    ----------
    min_eig : float
        Most negative eigenvalue of the offending matrix.
    matrix : numpy.ndarray
        The offending matrix, kept so callers can inspect how far
        outside the cone the construction landed.
    """

    def __init__(self, message: str, min_eig: float, matrix):
        super().__init__(message)
        self.min_eig = float(min_eig)
        self.matrix = matrix


class NegativeSymbolError(MargexError):
    """A phase-space symbol is negative at a grid node.

    Attributes
    ----------
    node : int
        Flat index of the offending node.
    value : float
        Symbol value there.
    """

    def __init__(self, message: str, node: int, value: float):
        super().__init__(message)
        self.node = int(node)
        self.value = float(value)


class SmallDenominatorError(MargexError):
    """Middle-factor symbol dips below the safe division floor."""

    def __init__(self, message: str, node: int, value: float):
        super().__init__(message)
        self.node = int(node)
        self.value = float(value)


class DegenerateChoiceError(MargexError):
    """A construction input coincides with a forbidden direction."""


class CertificateDegenerateError(MargexError):
    """Nullspace certificate vectors fail to span the expected dimension."""
