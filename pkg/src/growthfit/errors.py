"""Exception hierarchy shared across the package."""


class GrowthFitError(Exception):
    """Base class for all package errors."""


class GraphError(GrowthFitError):
    """Invalid graph mutation."""


class RejectedIncrementError(GraphError):
    """Increment would create a self-loop or duplicate edge."""


class UnknownNodeError(GraphError):
    """Increment references a node that does not exist."""


class ModelError(GrowthFitError):
    """Invalid model construction or evaluation."""


class MissingAnchorError(ModelError):
    """Triangle-closure target choice requested without an anchor node."""


class DegenerateModelError(ModelError):
    """No component can assign positive probability over the eligible set."""


class UnsupportedSimilarityError(ModelError):
    """Model similarity requested for an anchor-conditional component."""


class StreamError(GrowthFitError):
    """Invalid edge or star stream."""


class StreamParseError(StreamError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ModelSpecError(GrowthFitError):
    """Malformed model-spec expression; carries the 0-based column."""

    def __init__(self, message: str, column: int):
        super().__init__(f"column {column}: {message}")
        self.column = column


class FitError(GrowthFitError):
    """Estimation failure."""


class NoFeasibleFitError(FitError):
    """Every grid point evaluated to an impossible likelihood."""


class IntervalUnderflowError(FitError):
    """An interval of the requested partition contains no increments."""


class NestingViolationError(FitError):
    """Nested-model test inputs are not actually nested."""


class UndefinedRatioError(FitError):
    """Per-choice ratio requested with zero total choices."""


class GrowthStallError(GrowthFitError):
    """Generator cannot fill a star because the eligible set is exhausted."""
