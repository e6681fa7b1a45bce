"""
Exceptions raised by cascadesr. The CLI maps every CascadeSRError to exit code 1.
"""


class CascadeSRError(Exception):
    pass


class ParameterError(CascadeSRError, ValueError):
    """Invalid shape, scale, size, kernel or empty input."""


class NumericError(CascadeSRError, ArithmeticError):
    """NaN or Inf where finite values are required."""


class SolverError(CascadeSRError, RuntimeError):
    """Breakdown of an iterative solver."""


class DegenerateInputError(CascadeSRError, ValueError):
    """Input carries no information for the requested estimate, e.g. a flat image."""


class ConfigError(CascadeSRError):
    pass


class FormatError(CascadeSRError):
    """Malformed manifest or weight file."""
