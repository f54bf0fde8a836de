"""Directed multigraph flow instances, residual graphs and circulation tools.

Conventions used throughout the package:

* vertices are ``0 .. n-1``; edges are identified by their position in the
  edge list and keep a fixed orientation ``tail -> head``,
* the divergence of a flow is ``sum(out) - sum(in)`` per vertex, so a flow
  ``f`` routes demand ``d`` when ``divergence(f) == d`` (suppliers have
  positive demand),
* all instance data is integral and kept as Python ints, so exact
  (arbitrary precision) arithmetic is available to the scaling and
  certification paths; float views are built on demand by the interior
  point method.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInterval, Infeasible, NotACirculation, UnbalancedDemand


@dataclass(frozen=True)
class FlowInstance:
    """A min-cost flow instance on a directed multigraph.

    ``U`` bounds capacity and demand magnitudes, ``C`` bounds cost
    magnitudes; both are computed by :func:`build_instance`. Parallel edges
    and self-loops are allowed.
    """

    n: int
    tails: tuple
    heads: tuple
    demand: tuple
    cost: tuple
    u_lo: tuple
    u_hi: tuple
    U: int
    C: int

    @property
    def m(self) -> int:
        return len(self.tails)

    def edges(self):
        return list(zip(self.tails, self.heads))

    # Cached float views for the numeric paths. frozen dataclass, so the
    # cache lives in object.__dict__ via __getattr__-free property trick.
    def arrays(self):
        cache = getattr(self, "_arrays", None)
        if cache is None:
            cache = (
                np.asarray(self.tails, dtype=np.int64),
                np.asarray(self.heads, dtype=np.int64),
                np.asarray(self.cost, dtype=np.float64),
                np.asarray(self.u_lo, dtype=np.float64),
                np.asarray(self.u_hi, dtype=np.float64),
            )
            object.__setattr__(self, "_arrays", cache)
        return cache

    def with_demand(self, demand) -> "FlowInstance":
        return build_instance(self.n, list(zip(self.tails, self.heads)), demand, self.cost, self.u_lo, self.u_hi)


def build_instance(n, edges, d, c, u_lo, u_hi) -> FlowInstance:
    """Validate raw arrays and assemble a :class:`FlowInstance`.

    Raises :class:`UnbalancedDemand` when demands do not sum to zero and
    :class:`EmptyInterval` when some ``u_lo > u_hi``.
    """
    edges = list(edges)
    m = len(edges)
    d = list(d)
    c = list(c)
    u_lo = list(u_lo)
    u_hi = list(u_hi)
    if len(d) != n:
        raise ValueError(f"demand vector has length {len(d)}, expected n={n}")
    if not (len(c) == len(u_lo) == len(u_hi) == m):
        raise ValueError("edge attribute arrays have inconsistent lengths")
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) out of vertex range")
    if sum(d) != 0:
        raise UnbalancedDemand(f"sum of demands is {sum(d)}, expected 0")
    for e in range(m):
        if u_lo[e] > u_hi[e]:
            raise EmptyInterval(f"edge {e}: u_lo={u_lo[e]} > u_hi={u_hi[e]}")
    U = max(
        [1]
        + [abs(x) for x in d]
        + [abs(x) for x in u_lo]
        + [abs(x) for x in u_hi]
    )
    C = max([1] + [abs(x) for x in c])
    tails = tuple(u for u, _ in edges)
    heads = tuple(v for _, v in edges)
    return FlowInstance(n, tails, heads, tuple(d), tuple(c), tuple(u_lo), tuple(u_hi), U, C)


def divergence(inst: FlowInstance, f: Sequence) -> list:
    """Per-vertex net outflow of ``f`` (suppliers positive)."""
    div = [0] * inst.n
    for e in range(inst.m):
        div[inst.tails[e]] += f[e]
        div[inst.heads[e]] -= f[e]
    return div


def is_feasible(inst: FlowInstance, f: Sequence) -> bool:
    """True iff ``f`` respects the capacity box and routes the demand.

    Exact when ``f`` is integral; no tolerance is applied.
    """
    if len(f) != inst.m:
        raise ValueError("flow vector has wrong length")
    for e in range(inst.m):
        if not (inst.u_lo[e] <= f[e] <= inst.u_hi[e]):
            return False
    return divergence(inst, f) == list(inst.demand)


@dataclass(frozen=True)
class ResidualArc:
    """One arc of a residual graph.

    ``edge`` is the originating edge id and ``forward`` tells whether the
    arc follows the edge orientation (capacity ``u_hi - f``) or reverses it
    (capacity ``f - u_lo``).
    """

    tail: int
    head: int
    cost: object
    cap: object
    edge: int
    forward: bool


@dataclass
class ResidualGraph:
    n: int
    arcs: list

    def out_arcs(self):
        """Adjacency index: list of arc ids per tail vertex."""
        adj = [[] for _ in range(self.n)]
        for i, a in enumerate(self.arcs):
            adj[a.tail].append(i)
        return adj


def residual_graph(inst: FlowInstance, f: Sequence) -> ResidualGraph:
    """Residual graph of a feasible flow; zero-capacity arcs are omitted.

    Self-loops never produce residual arcs. Raises :class:`Infeasible`
    when ``f`` violates its capacity box.
    """
    arcs = []
    for e in range(inst.m):
        if not (inst.u_lo[e] <= f[e] <= inst.u_hi[e]):
            raise Infeasible(f"edge {e}: flow {f[e]} outside [{inst.u_lo[e]}, {inst.u_hi[e]}]")
        u, v = inst.tails[e], inst.heads[e]
        if u == v:
            continue
        fwd_cap = inst.u_hi[e] - f[e]
        if fwd_cap > 0:
            arcs.append(ResidualArc(u, v, inst.cost[e], fwd_cap, e, True))
        rev_cap = f[e] - inst.u_lo[e]
        if rev_cap > 0:
            arcs.append(ResidualArc(v, u, -inst.cost[e], rev_cap, e, False))
    return ResidualGraph(inst.n, arcs)


def cycle_decompose(inst: FlowInstance, f: Sequence) -> list:
    """Decompose an exact circulation into at most ``m`` directed cycles.

    Returns ``[(cycle, coeff), ...]`` where each cycle is a list of
    ``(edge_id, sign)`` pairs (sign +1 traverses the edge forward) and each
    ``coeff`` is positive. The weighted cycle vectors re-sum to the input
    exactly when the input is integral (or rational).

    Raises :class:`NotACirculation` when the divergence is nonzero.
    """
    if any(x != 0 for x in divergence(inst, f)):
        raise NotACirculation("input vector has nonzero divergence")
    resid = list(f)
    cycles = []
    # Adjacency over edges with nonzero residual value, rebuilt lazily.
    while True:
        start_edge = next((e for e in range(inst.m) if resid[e] != 0), None)
        if start_edge is None:
            break
        # Self-loop: a cycle by itself.
        if inst.tails[start_edge] == inst.heads[start_edge]:
            coeff = abs(resid[start_edge])
            sign = 1 if resid[start_edge] > 0 else -1
            cycles.append(([(start_edge, sign)], coeff))
            resid[start_edge] = 0
            continue
        out = [[] for _ in range(inst.n)]
        for e in range(inst.m):
            if resid[e] == 0 or inst.tails[e] == inst.heads[e]:
                continue
            if resid[e] > 0:
                out[inst.tails[e]].append((e, 1))
            else:
                out[inst.heads[e]].append((e, -1))
        # Walk forward along nonzero edges until a vertex repeats.
        sign0 = 1 if resid[start_edge] > 0 else -1
        path = [(start_edge, sign0)]
        seen = {}
        v0 = inst.tails[start_edge] if sign0 > 0 else inst.heads[start_edge]
        seen[v0] = 0
        v = inst.heads[start_edge] if sign0 > 0 else inst.tails[start_edge]
        while v not in seen:
            seen[v] = len(path)
            e, s = out[v][-1]
            path.append((e, s))
            v = inst.heads[e] if s > 0 else inst.tails[e]
        cyc = path[seen[v]:]
        coeff = min(abs(resid[e]) for e, _ in cyc)
        for e, s in cyc:
            resid[e] -= s * coeff
        cycles.append((cyc, coeff))
        if len(cycles) > inst.m:
            raise AssertionError("cycle decomposition exceeded m cycles")
    return cycles


def cycle_vector(inst: FlowInstance, cycle) -> list:
    """Dense edge vector of a ``[(edge_id, sign), ...]`` cycle."""
    vec = [0] * inst.m
    for e, s in cycle:
        vec[e] += s
    return vec
