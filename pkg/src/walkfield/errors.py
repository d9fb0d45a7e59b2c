"""Exception classes shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
data problems exit 3, numerical failures exit 4.
"""


class WalkfieldError(Exception):
    """Base class for all package errors."""


class ConfigError(WalkfieldError):
    """Bad configuration: unknown keys, missing covariates, invalid options."""


class DataError(WalkfieldError):
    """Invalid input data: malformed graphs, dangling edges, bad observations."""


class NumericalError(WalkfieldError):
    """Numerical failure: overflow, singular systems, divergent integration."""
