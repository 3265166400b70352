"""Exception hierarchy shared by every module."""


class QcapError(Exception):
    """Base class for all library errors."""


class ValidationError(QcapError):
    """An object violates one of its defining invariants."""


class DimensionMismatchError(ValidationError):
    """Operands have incompatible dimensions."""


class InfeasibleError(QcapError):
    """The constraint set is empty (energy bound below the spectral floor)."""


class ConvergenceError(QcapError):
    """An iterative routine failed to reach its tolerance."""


class ConsistencyError(QcapError):
    """Two independent computations of the same quantity disagree."""


class SizeCapError(QcapError):
    """A requested construction exceeds the configured dimension cap."""


class ProblemFormatError(QcapError):
    """A problem file failed to parse or validate."""
