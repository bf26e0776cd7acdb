"""Exception hierarchy for the toolkit.

Every error raised by the library derives from GwtsError so callers (and the
CLI) can distinguish library failures from programming errors.
"""


class GwtsError(Exception):
    """Base class for all toolkit errors."""


class ParseError(GwtsError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConflictError(GwtsError):
    """Two input rows define the same (station, quarter, variable) cell."""


class EmptyInputError(GwtsError):
    """The input file contained no data rows."""


class MissingDataError(GwtsError):
    """A requested range contains masked (missing) observations."""


class SampleSizeError(GwtsError):
    """Not enough observations for the requested operation."""


class SingularityError(GwtsError):
    """A matrix that must be invertible / positive definite is not."""


class DegenerateDataError(GwtsError):
    """Input data carries no usable variation (constant series, zero variance)."""


class ConvergenceError(GwtsError):
    """An iterative optimizer failed to converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class ComparisonError(GwtsError):
    """Results are not comparable (mismatched thresholds or too few entries)."""


class StateError(GwtsError):
    """An operation was invoked before its prerequisite artifact exists."""
