"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for usage/config
problems, 3 for bad input data, 4 for numerical failures.
"""
from __future__ import annotations


class CiWorkbenchError(Exception):
    exit_code = 3


# data errors
class EmptySample(CiWorkbenchError):
    pass


class InsufficientData(CiWorkbenchError):
    pass


class QOutOfRange(CiWorkbenchError, ValueError):
    pass


class MissingBounds(CiWorkbenchError):
    exit_code = 2


class ZeroVariance(CiWorkbenchError):
    pass


class ParseError(CiWorkbenchError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class SchemaMismatch(CiWorkbenchError):
    pass


class UnpairedKeys(CiWorkbenchError):
    pass


class MetricUndefined(CiWorkbenchError):
    pass


class StatisticUndefinedOnResample(CiWorkbenchError):
    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"statistic undefined on resample {index}: {cause}")


# usage / config errors
class IncompatibleMethod(CiWorkbenchError):
    exit_code = 2


class NonPositiveSigma(CiWorkbenchError, ValueError):
    exit_code = 2


class ConfigError(CiWorkbenchError):
    exit_code = 2


class MissingTruth(CiWorkbenchError):
    exit_code = 2


# numerical errors
class BcaDegenerate(CiWorkbenchError):
    exit_code = 4


class SingularCovariance(CiWorkbenchError):
    exit_code = 4


class DegenerateClassCovariance(CiWorkbenchError):
    exit_code = 4


class DegenerateDesign(CiWorkbenchError):
    exit_code = 4


class TruthPrecisionError(CiWorkbenchError):
    """Monte-Carlo truth too noisy relative to the interval widths it audits."""

    exit_code = 4
