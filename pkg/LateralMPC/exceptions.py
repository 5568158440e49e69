"""Errors raised by LateralMPC.

All of them are `ValueError` subclasses so callers that only catch
`ValueError` keep working. The command line front end maps
`ConfigurationError` to exit code 1 and everything else to exit code 2.
"""


class DomainError(ValueError):
    """An argument lies outside the domain where a model is defined,
    e.g. standstill (u <= 0) or a negative normal load."""


class ConfigurationError(ValueError):
    """A parameter file, override or parameter set is invalid."""


class ModelError(ValueError):
    """A model cannot be assembled, e.g. a singular body-matrix
    denominator."""


class DimensionError(ValueError):
    """Arrays handed to a model or solver have inconsistent shapes or
    contain non-finite values."""


__all__ = (
    "DomainError",
    "ConfigurationError",
    "ModelError",
    "DimensionError",
)
