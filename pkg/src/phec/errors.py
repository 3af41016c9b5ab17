"""Error taxonomy shared across the package.

Exit-code mapping used by the CLI: usage/config problems exit 1, data
problems exit 2, numeric failures during training exit 3.
"""


class PhecError(Exception):
    """Base class for package errors."""

    exit_code = 1


class ConfigError(PhecError):
    """Invalid configuration or command usage."""

    exit_code = 1


class DataError(PhecError):
    """Malformed, inconsistent, or incompatible data."""

    exit_code = 2


class NumericError(PhecError):
    """Non-finite values encountered during numeric computation."""

    exit_code = 3
