"""Exception types raised across the library."""


class AdvkitError(Exception):
    """Base class for all library-specific errors."""


class InvalidRangeError(AdvkitError, ValueError):
    """A scalar range or interval argument is inconsistent (e.g. lo > hi)."""


class InvalidInputError(AdvkitError, ValueError):
    """An input tensor violates a precondition (empty, non-finite, bad shape)."""


class ShapeError(InvalidInputError):
    """Tensor dimensions do not match the expected shape."""


class EncodingError(InvalidInputError):
    """Labels are not in the required one-hot encoding."""


class InvalidLabelError(AdvkitError, ValueError):
    """A class label or layer index is out of range."""


class UnsupportedNormError(AdvkitError, ValueError):
    """The requested norm is not supported by this operation."""


class KlUndefinedError(AdvkitError, ValueError):
    """KL divergence is undefined: q has a zero where p is positive."""


class InvalidConfigError(AdvkitError, ValueError):
    """An attack/defence/experiment configuration value is invalid."""


class InvalidDataError(AdvkitError, ValueError):
    """A dataset violates a semantic requirement (e.g. single-class fit data)."""


class NotFittedError(AdvkitError, RuntimeError):
    """Operation requires a fitted component."""


class ModelFileError(AdvkitError, ValueError):
    """A model file could not be parsed or has an incompatible version."""


class FileFormatError(AdvkitError, ValueError):
    """A data file (IDX, CSV) is malformed."""


class AttackInitError(AdvkitError, RuntimeError):
    """A stochastic attack failed to find a valid starting point."""


class NoSuccessfulAttackError(AdvkitError, RuntimeError):
    """A metric over successful attacks received an empty success set."""


class SolverDivergenceError(AdvkitError, RuntimeError):
    """An iterative solver diverged (objective increased repeatedly)."""
