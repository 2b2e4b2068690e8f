"""Exception types raised across the package."""


class FKLError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(FKLError, ArithmeticError):
    """Cholesky failed at every jitter level."""


class DegenerateInputs(FKLError, ValueError):
    """Training inputs do not span a positive distance."""


class NonFiniteLatent(FKLError, ValueError):
    """A latent log-spectral sample contains NaN or inf."""


class NonTerminating(FKLError, RuntimeError):
    """Elliptical slice sampler bracket collapsed without acceptance."""


class NonFiniteGradient(FKLError, ArithmeticError):
    """A finite-difference probe of the loss was not finite."""


class ParseError(FKLError, ValueError):
    """Malformed data file. Carries the offending row and column."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NonFiniteEntry(ParseError):
    """A parsed numeric field is NaN or infinite."""


class EmptySplit(FKLError, ValueError):
    """A split scheme produced an empty train or test partition."""


class DegenerateVariance(FKLError, ValueError):
    """Test targets have zero variance so SMSE is undefined."""


class ConfigError(FKLError, ValueError):
    """Experiment configuration failed validation."""
