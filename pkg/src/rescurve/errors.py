"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures to distinct
process exit statuses without a lookup table scattered across commands.
"""


class ResilienceError(Exception):
    exit_code = 1


# -- input / series ---------------------------------------------------------

class SeriesError(ResilienceError):
    exit_code = 3


class RowError(SeriesError):
    """An input row could not be accepted; ``row`` is 1-based incl. header."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class MissingMonth(RowError):
    pass


class DuplicateMonth(RowError):
    pass


class NegativeValue(RowError):
    pass


class MalformedRow(RowError):
    pass


class WindowTooLarge(SeriesError):
    pass


class ZeroOrigin(SeriesError):
    pass


class CutoffOutOfRange(SeriesError):
    pass


class AlignmentMismatch(SeriesError):
    pass


class SeriesTooShort(SeriesError):
    pass


# -- baseline ---------------------------------------------------------------

class BaselineError(ResilienceError):
    exit_code = 4


class DegenerateCovariate(BaselineError):
    pass


class NonConvergence(BaselineError):
    def __init__(self, message, sse=None, parameters=None):
        self.sse = sse
        self.parameters = parameters
        super().__init__(message)


class CovariateMissing(BaselineError):
    pass


class CovariateTooShort(BaselineError):
    pass


# -- fitting ----------------------------------------------------------------

class FitError(ResilienceError):
    exit_code = 2


class AllStartsFailed(FitError):
    pass


class FitFailed(FitError):
    pass


class DegenerateWindow(FitError):
    pass


# -- indices / stats --------------------------------------------------------

class IndicesError(ResilienceError):
    exit_code = 5


class NoDisruptions(IndicesError):
    pass


class EmptySpan(IndicesError):
    pass


class StatsError(ResilienceError):
    exit_code = 6


class EmptyInput(StatsError):
    pass


class LengthMismatch(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


class TooFewPoints(StatsError):
    pass


class NumericalNonConvergence(StatsError):
    pass


class NoOverlap(StatsError):
    pass


# -- synthetic scenarios / io ----------------------------------------------

class ScenarioError(ResilienceError):
    exit_code = 7


class InvalidSpec(ScenarioError):
    pass


class OverlappingDisruptions(ScenarioError):
    pass


class LossExceedsBaseline(ScenarioError):
    pass


class IoFailure(ResilienceError):
    exit_code = 8
