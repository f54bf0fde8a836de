"""Flow solvers driven by approximate undirected min-ratio cycles.

The package provides:

* exact min-cost flow / max-flow solvers built from a potential-reduction
  interior point method whose per-iteration subproblem (an undirected
  min-ratio cycle) is answered by fundamental cycles of a batch of sampled
  low-stretch spanning trees,
* cost- and capacity-scaling wrappers that reduce instances with huge
  costs or capacities to polynomially bounded ones,
* a convex-flow solver for edge-separable convex objectives (p-norm flows,
  isotonic regression, entropy-regularized transport, matrix scaling),
* simple exact reference solvers used for cross-checking.
"""

from .errors import (
    CycleflowError,
    UnbalancedDemand,
    EmptyInterval,
    Infeasible,
    InfeasibleInstance,
    NotACirculation,
    WouldCreateCycle,
    NoSuchEdge,
    NotConnected,
    Disconnected,
    NotBranchFree,
    BoundaryFlow,
    NonpositiveGap,
    QualityTooLow,
    Stalled,
    NegativeCycleError,
    NoInteriorPoint,
    DegenerateLength,
    IllegalForce,
)
from .graph import FlowInstance, ResidualArc, ResidualGraph, build_instance, is_feasible, residual_graph, cycle_decompose, divergence
from .oracles import ssp_mincostflow, maxflow_oracle, OracleResult


def __getattr__(name):
    # Solver entry points live in heavier modules; import them lazily so
    # light-weight uses of the graph types stay cheap.
    if name in ("solve_mincostflow", "run_ipm", "potential", "gradients_lengths", "quality_check"):
        from . import ipm

        return getattr(ipm, name)
    raise AttributeError(name)

__all__ = [
    "FlowInstance",
    "ResidualArc",
    "ResidualGraph",
    "build_instance",
    "is_feasible",
    "residual_graph",
    "cycle_decompose",
    "divergence",
    "solve_mincostflow",
    "run_ipm",
    "potential",
    "gradients_lengths",
    "quality_check",
    "ssp_mincostflow",
    "maxflow_oracle",
    "OracleResult",
    "CycleflowError",
    "UnbalancedDemand",
    "EmptyInterval",
    "Infeasible",
    "InfeasibleInstance",
    "NotACirculation",
    "WouldCreateCycle",
    "NoSuchEdge",
    "NotConnected",
    "Disconnected",
    "NotBranchFree",
    "BoundaryFlow",
    "NonpositiveGap",
    "QualityTooLow",
    "Stalled",
    "NegativeCycleError",
    "NoInteriorPoint",
    "DegenerateLength",
    "IllegalForce",
]
