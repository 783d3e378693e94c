"""Exception hierarchy shared by all modules."""


class SpinPathsError(Exception):
    """Base class for every error raised by the package."""


# graph construction and queries
class DuplicateEdge(SpinPathsError, ValueError):
    pass


class SelfLoop(SpinPathsError, ValueError):
    pass


class VertexOutOfRange(SpinPathsError, ValueError):
    pass


class GhostInSet(SpinPathsError, ValueError):
    pass


# wire configurations
class ParityViolation(SpinPathsError, ValueError):
    pass


class PreconditionViolated(SpinPathsError, ValueError):
    pass


class InvalidState(SpinPathsError, ValueError):
    pass


class FieldZero(SpinPathsError, ValueError):
    pass


# exact enumeration
class BudgetExceeded(SpinPathsError, RuntimeError):
    pass


class InfiniteCaps(SpinPathsError, ValueError):
    pass


class AggregateModeUnsupported(SpinPathsError, ValueError):
    pass


class InadmissiblePair(SpinPathsError, ValueError):
    pass


# spin integrals
class UnsupportedN(SpinPathsError, ValueError):
    pass


class NonConvergence(SpinPathsError, RuntimeError):
    pass


# sampling
class NotEquilibrated(SpinPathsError, RuntimeError):
    pass


class InvalidPartialConfig(SpinPathsError, ValueError):
    pass


class ExplorationComplete(SpinPathsError):
    pass


class NoCandidateSteps(SpinPathsError, ValueError):
    pass


class InsufficientData(SpinPathsError, ValueError):
    pass


class InsufficientSignal(SpinPathsError, ValueError):
    pass


class UsageError(SpinPathsError, ValueError):
    pass
