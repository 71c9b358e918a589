"""Exception types shared across the package."""


class PvSmoothError(Exception):
    """Base class for errors raised by this package."""


class WeatherFormatError(PvSmoothError, ValueError):
    """Weather CSV is malformed: bad value, missing column or non-uniform step."""


class LpDefinitionError(PvSmoothError, ValueError):
    """A linear program was defined with invalid indices, bounds or coefficients."""


class MpsFormatError(PvSmoothError, ValueError):
    """An MPS file could not be parsed."""


class ConfigError(PvSmoothError, ValueError):
    """Run configuration is invalid; the message names the offending field."""


class SolveStatusError(PvSmoothError):
    """An operation required an optimal solution but got a different status."""
