"""Exception types raised across the package.

Every error is a ``ValueError`` subclass so callers that do not care about
the distinction can catch the builtin. ``NumericalError`` subclasses mark
failures of the linear algebra / optimization layer rather than bad input.
"""


class TemporecError(ValueError):
    """Base class for all package-specific errors."""


# --- hierarchy construction and unit handling ---

class HierarchyError(TemporecError):
    pass


class NotDecreasing(HierarchyError):
    """Frequency vector is not strictly decreasing."""


class NonDivisor(HierarchyError):
    """Some sampling interval does not divide the cycle length."""


class MissingBottom(HierarchyError):
    """Frequency vector does not end at interval 1."""


class PartialCycle(HierarchyError):
    """Series length is not a whole number of cycles."""


# --- joint-sample assembly ---

class SamplingError(TemporecError):
    pass


class MissingLevel(SamplingError):
    """Not exactly one sample matrix per hierarchy level."""


class ColumnMismatch(SamplingError):
    """Sample matrices disagree on the number of sample paths."""


class RowCountMismatch(SamplingError):
    """A sample matrix has the wrong number of rows for its level."""


# --- weight matrices and reconciliation ---

class ReconcileError(TemporecError):
    pass


class LengthMismatch(ReconcileError):
    """Level-weight vector has the wrong length."""


class MissingWeight(ReconcileError):
    """Node-weight map lacks an entry for a required node."""


class DimensionMismatch(ReconcileError):
    """Matrix shapes do not agree for reconciliation."""


# --- scoring ---

class ScoringError(TemporecError):
    pass


class EmptySample(ScoringError):
    """Score requested for an empty sample."""


class AlignmentError(ScoringError):
    """Forecasts and actuals do not line up."""


# --- simulation / model fitting ---

class SimkitError(TemporecError):
    pass


class TooShort(SimkitError):
    """Training series too short to fit a model."""


# --- CSV ingestion ---

class DataError(TemporecError):
    pass


class SchemaError(DataError):
    """Input file does not match the expected schema."""


class GapError(DataError):
    """Input series has missing periods."""


class NonMonotoneTimestamps(DataError):
    """Timestamps are duplicated or out of order."""


# --- numerical failures ---

class NumericalError(TemporecError):
    pass


class SingularSystem(NumericalError):
    """A linear system that should be well posed failed to solve."""


class NonFinite(NumericalError):
    """Objective evaluated to NaN or infinity at every start point."""


class ConfigError(TemporecError):
    """Run configuration is invalid."""


class DidNotConverge(UserWarning):
    """Optimizer hit its iteration budget; best point so far is returned."""
