"""Error taxonomy shared by the library, the HTTP service, and the CLI.

Exit-code / HTTP mapping: ConfigError -> 1 / 400, DataError -> 2 / 422,
InvariantError -> 3 / 500.
"""


class RiskcalError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RiskcalError):
    """Invalid configuration or parameters (usage error)."""


class DataError(RiskcalError):
    """Invalid or inconsistent input data."""


class InvariantError(RiskcalError):
    """An internal invariant was violated; indicates a bug or API misuse."""


class ProvenanceError(InvariantError):
    """Evidence computed on one data split was used where another is required."""
