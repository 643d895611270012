"""Exception types shared across the library."""


class CwmiError(Exception):
    """Base class for all library errors."""


class DimensionError(CwmiError, ValueError):
    """Image dimensions incompatible with the requested decomposition."""


class NonFiniteInputError(CwmiError, ValueError):
    """Input contains NaN or infinity."""


class ShapeMismatchError(CwmiError, ValueError):
    """Arrays that must share a shape do not."""


class DegenerateStatisticsError(CwmiError, ValueError):
    """Too few samples for a full-rank covariance estimate."""


class NotPositiveDefiniteError(CwmiError, ValueError):
    """Cholesky factorization failed even after regularization."""

    def __init__(self, minor: int, message: str | None = None):
        self.minor = minor
        super().__init__(
            message or f"matrix is not positive definite: leading minor {minor} failed"
        )


class EmptyForegroundError(CwmiError, ValueError):
    """A mask that must contain foreground pixels is empty."""


class FileFormatError(CwmiError, ValueError):
    """Malformed or unsupported file contents."""
