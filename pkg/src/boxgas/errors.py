"""Exception types shared across the package.

The CLI maps these onto exit codes: config problems exit 2, numeric or
regime problems exit 3, validation failures exit 4.
"""


class BoxgasError(Exception):
    """Base class for all package errors."""


class ArgumentError(BoxgasError, ValueError):
    """Bad argument (dimension mismatch, out-of-domain value, ...)."""


class CapacityError(BoxgasError):
    """Requested order exceeds what the enumeration/integration can do."""


class IntegrationError(BoxgasError):
    """Quadrature or Monte Carlo error estimate above tolerance."""


class RegimeError(BoxgasError):
    """Outside the convergence window (non-positive variance bracket, ...)."""


class ConvergenceError(RegimeError):
    """A coefficient series does not decay."""


class FitError(BoxgasError):
    """Ill-conditioned or insufficient-data fit."""


class InsufficientDataError(FitError):
    """Not enough nonzero entries to fit."""


class RangeError(BoxgasError):
    """Root bracketing failed inside the allowed search range."""


class ConfigError(BoxgasError):
    """Malformed run configuration."""
