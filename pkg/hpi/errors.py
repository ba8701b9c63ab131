"""
    Exception hierarchy for hpi. Every exception carries the CLI exit code it maps to, so the command line
    layer never has to know which module raised it.
"""

import typing


class HPIError(Exception):
    """
        Base class for all errors raised by hpi
    """
    exit_code: typing.ClassVar[int] = 1


class DomainError(HPIError, ValueError):
    """
        An argument lies outside the domain of the operation it was passed to.

    :param message: Human readable description
    :param parameter: Name of the offending parameter
    :param bound: Optional bound that was violated, e.g. ``nu_max`` for the imaginary-axis dispersion
    """
    exit_code = 2

    def __init__(self, message: str, parameter: typing.Optional[str] = None,
                 bound: typing.Optional[float] = None) -> None:
        super().__init__(message)
        self.parameter = parameter
        self.bound = bound


class ConfigurationError(HPIError, ValueError):
    """
        Invalid run configuration: unknown keys, unparsable values, or lattice extents too small for the interface.
    """
    exit_code = 2


class NumericalError(HPIError, ArithmeticError):
    """
        A numerical procedure failed to produce a trustworthy answer. ``diagnostics`` holds whatever the procedure
        knew at the time of failure.
    """
    exit_code = 2

    def __init__(self, message: str, diagnostics: typing.Optional[typing.Dict[str, typing.Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConsistencyError(NumericalError):
    """
        Two independent evaluations of the same quantity disagree beyond tolerance
    """


class StatisticsError(HPIError):
    """
        Too few samples or paths for the requested estimate
    """
    exit_code = 2


class ExtractionError(HPIError):
    """
        No open contour could be traced through a configuration
    """
    exit_code = 4


class SnapshotError(HPIError, OSError):
    """
        Snapshot files are missing, truncated, or carry the wrong header
    """
    exit_code = 4


class EscapeRateError(HPIError):
    """
        The open contour touched the clamp rows too often; the strip is too short for the interface
    """
    exit_code = 3

    def __init__(self, message: str, rate: float) -> None:
        super().__init__(message)
        self.rate = rate
