"""Exception types shared across the package."""


class CycleflowError(Exception):
    """Base class for all package-specific errors."""


class UnbalancedDemand(CycleflowError):
    """Vertex demands do not sum to zero."""


class EmptyInterval(CycleflowError):
    """An edge has lower capacity strictly above its upper capacity."""


class Infeasible(CycleflowError):
    """A flow vector violates capacity or conservation constraints."""


class InfeasibleInstance(CycleflowError):
    """The instance admits no feasible flow."""


class NotACirculation(CycleflowError):
    """A vector expected to have zero divergence does not."""


class WouldCreateCycle(CycleflowError):
    """Linking two vertices that are already connected in the forest."""


class NoSuchEdge(CycleflowError):
    """Operation on an edge id the structure does not know about."""


class NotConnected(CycleflowError):
    """Path query between vertices in different forest components."""


class Disconnected(CycleflowError):
    """A spanning structure was requested for a disconnected graph."""


class NotBranchFree(CycleflowError):
    """A root set is not closed under pairwise tree LCAs."""


class BoundaryFlow(CycleflowError):
    """A flow value sits on (or outside) a capacity bound where strict
    interiority is required."""


class NonpositiveGap(CycleflowError):
    """The residual cost c'f - F* is not strictly positive."""


class QualityTooLow(CycleflowError):
    """A candidate circulation failed the min-ratio quality check."""


class Stalled(CycleflowError):
    """The interior point method ran out of rebuild levels without finding
    an acceptable cycle; usually means the optimum guess F* is too low."""

    def __init__(self, message, flow=None, stats=None):
        super().__init__(message)
        self.flow = flow
        self.stats = stats


class NegativeCycleError(CycleflowError):
    """A negative residual cycle exists where optimality was assumed."""

    def __init__(self, message, cycle=None):
        super().__init__(message)
        self.cycle = cycle


class NoInteriorPoint(CycleflowError):
    """No strictly interior point exists for a barrier domain slice."""


class DegenerateLength(CycleflowError):
    """A convex-flow edge produced a zero length; its barrier lacks the
    required box terms."""


class IllegalForce(CycleflowError):
    """A rebuilding-game adversary forced a fixing step while neither
    forcing condition held."""


class ParseError(CycleflowError):
    """Malformed DIMACS input."""

    def __init__(self, line_no, reason):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason
