"""pygibbsuniq exceptions."""


class GibbsUniquenessException(Exception):
    """pygibbsuniq base exception class."""


class InvalidPotentialError(GibbsUniquenessException):
    """Pair potential is negative, undefined or contradicts its declared metadata."""


class QuadratureError(GibbsUniquenessException):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float = float('nan')) -> None:
        super().__init__(message)
        self.error_estimate = error_estimate


class IntegrabilityError(GibbsUniquenessException):
    """The Mayer function is not integrable (the tail diverges)."""


class UnsupportedError(GibbsUniquenessException):
    """The requested bound or computation does not apply to this potential."""


class ConfigurationError(GibbsUniquenessException):
    """Invalid run or computation configuration."""

    def __init__(self, message: str, field: str | None = None) -> None:
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class BisectionError(GibbsUniquenessException):
    """Root finding failed to bracket or converge."""


class ErgodicityError(GibbsUniquenessException):
    """Markov chain settings cannot leave the initial state."""


class TruncationError(GibbsUniquenessException):
    """Point-count truncation of an exact enumeration is not justified."""
