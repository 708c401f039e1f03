"""Exception types raised by the library.

Every guard that turns a runaway computation into a clean failure raises a
subclass of :class:`PidppError`, so callers (and the CLI) can distinguish
"you asked for something infeasible or malformed" from genuine bugs.
"""


class PidppError(Exception):
    """Base class for all library errors."""


class DimensionMismatchError(PidppError):
    """Matrix or tuple dimensions do not line up."""


class IndexRangeError(PidppError):
    """A vertex or matrix index lies outside the ground set."""


class NonSymmetricError(PidppError):
    """An operation requiring a symmetric matrix got a non-symmetric one."""


class NotPositiveSemidefiniteError(PidppError):
    """Pivoting exposed a negative pivot or an impossible zero row."""


class RankExceededError(PidppError):
    """A low-rank factorization was requested below the actual rank."""


class SingularMatrixError(PidppError):
    """An inverse was requested of a singular matrix."""


class CapExceededError(PidppError):
    """An exponential-time brute-force routine was asked to exceed its cap."""


class BudgetExceededError(PidppError):
    """A fixed-parameter algorithm's estimated work exceeds its budget."""


class InvalidDecompositionError(PidppError):
    """A tree decomposition violates one of its defining conditions."""


class UncoveredEntryError(PidppError):
    """A matrix has a nonzero entry not covered by the given decomposition."""


class FormatError(PidppError):
    """A matrix, graph, or decomposition file could not be parsed."""


class NegativeMinorError(PidppError):
    """A fractional power was requested of a negative principal minor."""


class ZeroMassError(PidppError):
    """A conditioning event has probability zero under the point process."""


class ProbabilityRangeError(PidppError):
    """A computed probability fell outside [0, 1] (non-P0 input)."""


class StrategySelectionError(PidppError):
    """No normalizer strategy is applicable to the given input."""


class DisconnectedGraphError(PidppError):
    """A construction requiring a connected graph got a disconnected one."""


class InterpolationError(PidppError):
    """Interpolation points are insufficient or have duplicate abscissae."""
