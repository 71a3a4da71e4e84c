"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration/validation
problems exit 2, data problems exit 3, numeric failures exit 4.
"""


class NhgnetError(Exception):
    """Base class for all package errors."""


class ConfigError(NhgnetError):
    """Invalid configuration value or unsupported option combination."""


class ShapeError(NhgnetError):
    """Tensor dimensions do not satisfy an operation's contract."""


class DataError(NhgnetError):
    """Dataset loading, labelling, augmentation, or file-format failure."""


class NumericError(NhgnetError):
    """A computation produced NaN/Inf or an otherwise unusable value."""
