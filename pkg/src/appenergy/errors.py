"""Exception hierarchy shared by all appenergy stages."""

from __future__ import annotations


class AppEnergyError(Exception):
    """Base class for every error raised by this package."""


class ParseError(AppEnergyError):
    """A text artifact (trace CSV, logcat, stats file) could not be parsed.

    ``line`` is the 1-based physical line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TraceFormatError(ParseError):
    """Trace file header or overall structure does not match the schema."""


class UidNotFoundError(ParseError):
    """No ``PKG ... UID ... PID ...`` metadata line found in the log."""


class WindowNotFoundError(ParseError):
    """The test start/end marker pair is missing or ambiguous."""


class AcquisitionError(AppEnergyError):
    """Sample acquisition failed (bad replay file, source misconfiguration)."""


class BackendUnavailableError(AcquisitionError):
    """The physical monitor backend is not reachable.

    Expected on desk environments with no instrument attached.
    """


class EmptyTraceError(AppEnergyError):
    """An operation that needs samples was given an empty trace."""


class WindowOutOfRangeError(AppEnergyError):
    """Requested extraction window lies outside the trace span."""


class MissingBaselineError(AppEnergyError):
    """Baseline energies are required but none are available."""


class InvalidInputError(AppEnergyError):
    """Inputs violate a stage precondition (mixed packages, bad config...)."""


class PreflightError(AppEnergyError):
    """The device environment check refused to let a campaign start."""


class IterationFailedError(AppEnergyError):
    """A device-side test run crashed; carries whatever logcat was captured."""

    def __init__(self, message: str, partial_logcat: str = ""):
        super().__init__(message)
        self.partial_logcat = partial_logcat


class InvalidTransitionError(AppEnergyError):
    """Campaign state machine rejected an operation in the current phase."""


class DecisionRequiredError(AppEnergyError):
    """The campaign paused for an operator decision and no decider is wired."""


class ConflictError(AppEnergyError):
    """Control service conflict: second concurrent campaign, or a decision
    posted while none is pending."""


class StatsError(AppEnergyError):
    """Base class for statistical analysis errors."""


class DegenerateDataError(StatsError):
    """Data has no usable variation for the requested test."""


class UndefinedCorrelationError(StatsError):
    """Correlation undefined (a constant input vector)."""


class EmptySelectionError(StatsError):
    """Filter or grouping selected zero rows."""


class UnknownColumnError(StatsError):
    """A referenced column does not exist in the dataset."""


class ColumnTypeError(StatsError):
    """Column type does not match what the analysis or plot requires."""
