"""Exceptions raised by the choquard library."""

from typing import Optional


class ChoquardError(Exception):
    """Base class for every error raised by the library."""


class UnsupportedDimensionError(ChoquardError, ValueError):
    """The space dimension is below 3."""


class InvalidGridError(ChoquardError, ValueError):
    """The grid has fewer than 2 points per axis or a non-positive box length."""


class InvalidExponentError(ChoquardError, ValueError):
    """alpha lies outside (0, N) or an exponent is not positive."""


class ShapeMismatchError(ChoquardError, ValueError):
    """Two objects were built on different grids."""


class OracleRefusedError(ChoquardError, ValueError):
    """The brute-force convolution was asked to run on a grid that is too large."""


class NonsmoothExponentError(ChoquardError, ValueError):
    """p or q is at most 1 and no regularization was requested."""


class DegenerateFieldError(ChoquardError, ValueError):
    """The field is identically zero or has a vanishing nonlocal interaction."""


class RefusedRegimeError(ChoquardError, ValueError):
    """The exponents lie outside the existence window."""

    def __init__(self, message: str, label: Optional[object] = None):
        super().__init__(message)
        self.label = label


class SolverStalledError(ChoquardError, RuntimeError):
    """Backtracking found no decreasing step."""


class NotOnManifoldError(ChoquardError, ValueError):
    """The field does not satisfy the constraint D(w) = 1."""


class ShiftOutOfRangeError(ChoquardError, ValueError):
    """A translation moves part of a field's support out of the box."""


class GridTooSmallError(ChoquardError, ValueError):
    """A scaled profile does not fit inside the box."""


class CorruptSnapshotError(ChoquardError, ValueError):
    """A field snapshot file is malformed."""
