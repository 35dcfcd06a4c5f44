"""Exception types shared across the package."""


class PmvlError(Exception):
    """Base class for all package errors."""


class DimensionError(PmvlError):
    """Array shapes disagree with the declared layer or view dimensions."""


class ConfigurationError(PmvlError):
    """A configuration value is out of its legal range or infeasible."""


class IngestionError(PmvlError):
    """A data file could not be parsed; the message carries file and line."""


class SplitError(PmvlError):
    """A dataset cannot be split as requested (e.g. a class with <2 samples)."""


class TrainingError(PmvlError):
    """Training hit an invalid state (divergence, empty class, ...)."""


class InputError(PmvlError):
    """A runtime input violates an operation's precondition."""
