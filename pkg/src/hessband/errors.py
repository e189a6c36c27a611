"""Exception types shared across the library.

Everything raised on purpose derives from HessbandError so callers can
catch library failures without masking programming errors.
"""


class HessbandError(Exception):
    """Base class for all library-raised errors."""


class DimensionError(HessbandError, ValueError):
    """Shapes of inputs do not line up."""


class DomainError(HessbandError, ValueError):
    """A scalar argument is outside its valid range."""


class EmptyInputError(HessbandError, ValueError):
    """An operation that needs at least one element got none."""


class DefinitenessError(HessbandError, ArithmeticError):
    """A matrix that must be symmetric positive definite is not."""


class NumericError(HessbandError, ArithmeticError):
    """A computed quantity violates a sign or finiteness constraint."""


class DivergenceError(HessbandError, ArithmeticError):
    """Training produced a non-finite loss or gradient.

    Carries the last finite iterate so callers can inspect how far the
    run got before blowing up.
    """

    def __init__(self, message, theta=None, epoch=None):
        super().__init__(message)
        self.theta = theta
        self.epoch = epoch


class StationarityError(HessbandError, ArithmeticError):
    """A fitted model is not close enough to a stationary point."""


class EnsembleError(HessbandError, RuntimeError):
    """Too few bootstrap replicates survived training."""


class GenerationError(HessbandError, RuntimeError):
    """Synthetic data generation could not reach its target counts."""


class ConfigError(HessbandError, ValueError):
    """An experiment config file is missing, malformed, or inconsistent."""
