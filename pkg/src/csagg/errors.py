"""Semantic exception hierarchy and warning categories."""


class CsaggError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(CsaggError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientDataError(CsaggError, ValueError):
    """Too few rows to perform the requested operation."""


class DegenerateEnvelopeError(CsaggError, RuntimeError):
    """Every direction was dropped or a threshold is non-positive."""


class EmptyRegionError(CsaggError, RuntimeError):
    """The acceptance region excludes every candidate outcome."""


class UndefinedMetricError(CsaggError, RuntimeError):
    """A metric's denominator is zero (e.g. hindsight optimum of 0)."""


class InfeasibleProblemError(CsaggError, RuntimeError):
    """A flow or optimization instance has no feasible solution."""


class ParseError(CsaggError, ValueError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class CalibrationWarning(UserWarning):
    """Non-fatal calibration issue (window missed, directions dropped)."""


class DegenerateScoreWarning(UserWarning):
    """A score hit a degenerate guard (e.g. zero ensemble spread)."""
