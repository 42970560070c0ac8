"""Exception types raised across the package."""


class StratHetError(Exception):
    """Base class for all package errors."""


# data validation
class EmptyArm(StratHetError, ValueError):
    pass


class NonFinite(StratHetError, ValueError):
    pass


class TooFewStrata(StratHetError, ValueError):
    pass


# numerics
class NoConvergence(StratHetError, ArithmeticError):
    pass


class NotPSD(StratHetError, ValueError):
    pass


class DomainError(StratHetError, ValueError):
    pass


# U-statistics
class CountOverflow(StratHetError, OverflowError):
    """Product of arm sizes does not fit in a signed 64-bit count."""


class CoverageFailed(StratHetError, RuntimeError):
    """Some subject was never drawn after the allowed number of redraws."""


class DegenerateGroup(StratHetError, ValueError):
    """An arm of size one has no sample covariance."""


class RankZero(StratHetError, ValueError):
    pass


# parametric baseline
class TooSmallArm(StratHetError, ValueError):
    pass


class ZeroVariance(StratHetError, ValueError):
    pass


class EmptySample(StratHetError, ValueError):
    pass


# simulation
class InvalidParam(StratHetError, ValueError):
    pass


class NonPositiveForLog(StratHetError, ValueError):
    pass


class ReplicateError(StratHetError, RuntimeError):
    def __init__(self, index, cause):
        super().__init__(f"replicate {index} failed: {cause!r}")
        self.index = index
        self.cause = cause


# ingestion
class MissingColumn(StratHetError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ParseError(StratHetError, ValueError):
    def __init__(self, row, column, value):
        super().__init__(f"row {row}, column {column!r}: cannot parse {value!r}")
        self.row = row
        self.column = column
        self.value = value


class EmptyFile(StratHetError, ValueError):
    pass


class EmptyStratumArm(StratHetError, ValueError):
    pass


class DegenerateWarning(UserWarning):
    """Reference distribution collapsed to a point (zero covariance estimate)."""


class DegenerateBreakpoints(StratHetError, ValueError):
    """Stratum breakpoints are not strictly increasing."""
