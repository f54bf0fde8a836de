"""Exact and reference solvers used for certification and cross-checks.

These prioritise auditability over speed: the integral solvers work in
exact Python-int arithmetic and every result carries a witness that
:func:`cycleflow.scaling.verify_optimal` accepts.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from heapq import heappop, heappush

import numpy as np

from .errors import InfeasibleInstance
from .graph import FlowInstance, divergence

INF = float("inf")


@dataclass
class OracleResult:
    cost: object
    flow: tuple
    witness: object
    solver: str
    elapsed: float

    def to_json(self):
        return {
            "cost": int(self.cost),
            "flow": [int(x) for x in self.flow],
            "solver": self.solver,
            "elapsed": self.elapsed,
        }


class _ResidualNet:
    """Paired-arc residual network over Python ints."""

    def __init__(self, n):
        self.n = n
        self.head = []
        self.cap = []
        self.cost = []
        self.adj = [[] for _ in range(n)]

    def add(self, u, v, cap, cost):
        a = len(self.head)
        self.head.append(v)
        self.cap.append(cap)
        self.cost.append(cost)
        self.adj[u].append(a)
        self.head.append(u)
        self.cap.append(0)
        self.cost.append(-cost)
        self.adj[v].append(a ^ 1)
        return a

    def tail(self, a):
        return self.head[a ^ 1]


def _ssp_scaling(net: _ResidualNet, excess):
    """Capacity-scaling successive shortest paths on a residual network.

    ``excess`` is the per-vertex imbalance to be drained to zero. Returns
    the final vertex potentials. Raises :class:`InfeasibleInstance` if some
    imbalance cannot be routed.
    """
    n = net.n
    pi = [0] * n
    maxcap = max([1] + [c for c in net.cap if c > 0] + [abs(e) for e in excess])
    delta = 1
    while delta * 2 <= maxcap:
        delta *= 2
    while delta >= 1:
        # Restore delta-optimality: saturate negative reduced-cost arcs in
        # the delta-residual graph.
        for a in range(len(net.head)):
            u, v = net.tail(a), net.head[a]
            if net.cap[a] >= delta and net.cost[a] + pi[u] - pi[v] < 0:
                amt = net.cap[a]
                net.cap[a] -= amt
                net.cap[a ^ 1] += amt
                excess[u] -= amt
                excess[v] += amt
        while True:
            sources = [v for v in range(n) if excess[v] >= delta]
            sinks = {v for v in range(n) if excess[v] <= -delta}
            if not sources or not sinks:
                break
            dist, parent = _dijkstra(net, pi, sources, delta)
            target = None
            best = None
            for v in sinks:
                if dist[v] < INF and (best is None or dist[v] < best):
                    best, target = dist[v], v
            if target is None:
                break
            for v in range(n):
                if dist[v] < INF:
                    pi[v] += dist[v] - best if dist[v] <= best else 0
            # Standard potential update: pi += min(dist, dist[target]).
            # (applied above with clamp)
            v = target
            while parent[v] is not None:
                a = parent[v]
                net.cap[a] -= delta
                net.cap[a ^ 1] += delta
                v = net.tail(a)
            excess[v] -= delta
            excess[target] += delta
        delta //= 2
    if any(excess):
        raise InfeasibleInstance("imbalance left after scaling phases")
    return pi


def _dijkstra(net, pi, sources, delta):
    dist = [INF] * net.n
    parent = [None] * net.n
    heap = []
    for s in sources:
        dist[s] = 0
        heappush(heap, (0, s))
    while heap:
        d, u = heappop(heap)
        if d > dist[u]:
            continue
        for a in net.adj[u]:
            if net.cap[a] < delta:
                continue
            v = net.head[a]
            nd = d + net.cost[a] + pi[u] - pi[v]
            if nd < dist[v]:
                dist[v] = nd
                parent[v] = a
                heappush(heap, (nd, v))
    return dist, parent


def ssp_mincostflow(inst: FlowInstance) -> OracleResult:
    """Exact min-cost flow via successive shortest paths.

    Johnson-style potentials keep reduced costs non-negative and a
    capacity-scaling outer loop keeps the number of augmentations
    O(m log U). Exact integer arithmetic throughout.
    """
    t0 = time.perf_counter()
    net = _ResidualNet(inst.n)
    arc_of_edge = [None] * inst.m
    excess = [0] * inst.n
    base_cost = 0
    for v in range(inst.n):
        excess[v] += inst.demand[v]
    # Shift lower bounds: route u_lo mandatorily.
    for e in range(inst.m):
        u, v = inst.tails[e], inst.heads[e]
        lo, hi, c = inst.u_lo[e], inst.u_hi[e], inst.cost[e]
        base_cost += c * lo
        excess[u] -= lo
        excess[v] += lo
        if u == v:
            # Self-loop: saturate when profitable, else stay at the lower
            # bound; it never interacts with conservation.
            if c < 0:
                base_cost += c * (hi - lo)
            continue
        arc_of_edge[e] = net.add(u, v, hi - lo, c)
    pi = _ssp_scaling(net, excess)
    flow = []
    for e in range(inst.m):
        a = arc_of_edge[e]
        if a is None:
            lo, hi, c = inst.u_lo[e], inst.u_hi[e], inst.cost[e]
            flow.append(hi if c < 0 else lo)
        else:
            flow.append(inst.u_lo[e] + net.cap[a ^ 1])
    cost = sum(inst.cost[e] * flow[e] for e in range(inst.m))
    return OracleResult(cost, tuple(flow), {"potentials": pi}, "ssp", time.perf_counter() - t0)


def maxflow_oracle(n, edges, caps, s, t):
    """Max flow by augmenting paths (BFS within capacity-scaling phases).

    Returns ``(value, flow, cut)`` where ``cut`` is the set of vertices on
    the source side of a minimum cut.
    """
    net = _ResidualNet(n)
    arcs = [net.add(u, v, cap, 0) for (u, v), cap in zip(edges, caps)]
    maxcap = max([1] + list(caps))
    delta = 1
    while delta * 2 <= maxcap:
        delta *= 2
    value = 0
    while delta >= 1:
        while True:
            parent = [None] * n
            parent[s] = -1
            queue = [s]
            while queue and parent[t] is None:
                u = queue.pop(0)
                for a in net.adj[u]:
                    v = net.head[a]
                    if parent[v] is None and net.cap[a] >= delta:
                        parent[v] = a
                        queue.append(v)
            if parent[t] is None:
                break
            bottleneck = None
            v = t
            while v != s:
                a = parent[v]
                bottleneck = net.cap[a] if bottleneck is None else min(bottleneck, net.cap[a])
                v = net.tail(a)
            v = t
            while v != s:
                a = parent[v]
                net.cap[a] -= bottleneck
                net.cap[a ^ 1] += bottleneck
                v = net.tail(a)
            value += bottleneck
        delta //= 2
    # Source side of the min cut = residual-reachable set from s.
    reach = [False] * n
    reach[s] = True
    queue = [s]
    while queue:
        u = queue.pop(0)
        for a in net.adj[u]:
            v = net.head[a]
            if net.cap[a] > 0 and not reach[v]:
                reach[v] = True
                queue.append(v)
    flow = tuple(net.cap[a ^ 1] for a in arcs)
    cut = {v for v in range(n) if reach[v]}
    return value, flow, cut


def feasible_integral_flow(inst: FlowInstance):
    """Some integral feasible flow, or None when the instance is infeasible.

    Standard reduction: saturate lower bounds, then route the remaining
    imbalance through a super source/sink max-flow.
    """
    n = inst.n
    S, T = n, n + 1
    edges = []
    caps = []
    for e in range(inst.m):
        edges.append((inst.tails[e], inst.heads[e]))
        caps.append(inst.u_hi[e] - inst.u_lo[e])
    need = 0
    imbalance = [inst.demand[v] for v in range(n)]
    div_lo = divergence(inst, list(inst.u_lo))
    for v in range(n):
        imbalance[v] -= div_lo[v]
    aux = []
    for v in range(n):
        if imbalance[v] > 0:
            aux.append(len(edges))
            edges.append((S, v))
            caps.append(imbalance[v])
            need += imbalance[v]
        elif imbalance[v] < 0:
            edges.append((v, T))
            caps.append(-imbalance[v])
    value, flow, _ = maxflow_oracle(n + 2, edges, caps, S, T)
    if value != need:
        return None
    return [inst.u_lo[e] + flow[e] for e in range(inst.m)]


def _karp_min_mean_cycle(n, arcs):
    """Karp's DP. ``arcs``: list of (u, v, w, tag). Returns (mean, cycle) with
    mean a Fraction, or (None, None) when the graph is acyclic."""
    m = len(arcs)
    if m == 0:
        return None, None
    D = [[None] * n for _ in range(n + 1)]
    P = [[None] * n for _ in range(n + 1)]
    for v in range(n):
        D[0][v] = 0
    for k in range(1, n + 1):
        for (u, v, w, tag) in arcs:
            if D[k - 1][u] is None:
                continue
            cand = D[k - 1][u] + w
            if D[k][v] is None or cand < D[k][v]:
                D[k][v] = cand
                P[k][v] = (u, tag)
    best = None
    best_v = None
    for v in range(n):
        if D[n][v] is None:
            continue
        worst = None
        for k in range(n):
            if D[k][v] is None:
                continue
            val = Fraction(D[n][v] - D[k][v], n - k)
            if worst is None or val > worst:
                worst = val
        if worst is not None and (best is None or worst < best):
            best = worst
            best_v = v
    if best is None:
        return None, None
    # Recover a cycle on the walk of length n ending at best_v.
    walk = [best_v]
    tags = []
    v = best_v
    for k in range(n, 0, -1):
        u, tag = P[k][v]
        tags.append(tag)
        walk.append(u)
        v = u
    walk.reverse()
    tags.reverse()
    seen = {}
    for i, v in enumerate(walk):
        if v in seen:
            cyc = tags[seen[v]:i]
            return best, cyc
        seen[v] = i
    return best, None


def min_mean_cycle_cancel(inst: FlowInstance) -> OracleResult:
    """Min-cost flow by min-mean cycle canceling (cross-check oracle)."""
    t0 = time.perf_counter()
    f = feasible_integral_flow(inst)
    if f is None:
        raise InfeasibleInstance("no feasible flow")
    while True:
        arcs = []
        for e in range(inst.m):
            u, v = inst.tails[e], inst.heads[e]
            if u == v:
                continue
            if f[e] < inst.u_hi[e]:
                arcs.append((u, v, inst.cost[e], (e, 1)))
            if f[e] > inst.u_lo[e]:
                arcs.append((v, u, -inst.cost[e], (e, -1)))
        # Self-loops: cancel directly.
        for e in range(inst.m):
            if inst.tails[e] == inst.heads[e]:
                f[e] = inst.u_hi[e] if inst.cost[e] < 0 else (inst.u_lo[e] if inst.cost[e] > 0 else f[e])
        mean, cyc = _karp_min_mean_cycle(inst.n, arcs)
        if mean is None or mean >= 0:
            break
        bottleneck = None
        for e, s in cyc:
            room = inst.u_hi[e] - f[e] if s > 0 else f[e] - inst.u_lo[e]
            bottleneck = room if bottleneck is None else min(bottleneck, room)
        for e, s in cyc:
            f[e] += s * bottleneck
    cost = sum(inst.cost[e] * f[e] for e in range(inst.m))
    return OracleResult(cost, tuple(f), None, "mmcc", time.perf_counter() - t0)


def exhaustive_tiny(inst: FlowInstance, limit=3_000_000):
    """Brute-force optimum by enumerating all integral flows (tiny cases)."""
    ranges = [range(inst.u_lo[e], inst.u_hi[e] + 1) for e in range(inst.m)]
    total = 1
    for r in ranges:
        total *= len(r)
        if total > limit:
            raise ValueError("instance too large for exhaustive enumeration")
    best = None
    best_f = None
    d = list(inst.demand)
    for f in itertools.product(*ranges):
        if divergence(inst, f) != d:
            continue
        cost = sum(inst.cost[e] * f[e] for e in range(inst.m))
        if best is None or cost < best:
            best, best_f = cost, f
    if best is None:
        return None
    return OracleResult(best, best_f, None, "exhaustive", 0.0)


# ----------------------------------------------------------------------
# Convex reference solvers.


def sinkhorn(cost, row, col, reg=1.0, tol=1e-10, max_iter=100_000):
    """Entropic optimal transport via Sinkhorn iterations (log domain).

    Minimizes sum(P * cost) + reg * sum(P * (log P - 1))? No: the solver
    targets ``sum(P*cost + P*log P)`` when ``reg == 1``; the kernel is
    ``exp(-cost/reg - 1)`` so that stationarity matches d/dP [P*cost +
    reg*P*log P] = cost + reg*(1 + log P).
    Returns the transport plan with marginal error below ``tol``.
    """
    cost = np.asarray(cost, dtype=float)
    row = np.asarray(row, dtype=float)
    col = np.asarray(col, dtype=float)
    logK = -cost / reg - 1.0
    lu = np.zeros(len(row))
    lv = np.zeros(len(col))
    for _ in range(max_iter):
        lu = np.log(row) - _logsumexp_rows(logK + lv[None, :])
        lv = np.log(col) - _logsumexp_rows((logK + lu[:, None]).T)
        P = np.exp(logK + lu[:, None] + lv[None, :])
        err = max(np.abs(P.sum(axis=1) - row).max(), np.abs(P.sum(axis=0) - col).max())
        if err < tol:
            break
    return P


def _logsumexp_rows(M):
    mx = M.max(axis=1)
    return mx + np.log(np.exp(M - mx[:, None]).sum(axis=1))


def pava(y, w=None):
    """Pool-adjacent-violators for L2 isotonic regression on a chain."""
    y = list(map(float, y))
    w = [1.0] * len(y) if w is None else list(map(float, w))
    blocks = [[y[i] * w[i], w[i], 1] for i in range(len(y))]
    out = []
    for b in blocks:
        out.append(b)
        while len(out) > 1 and out[-2][0] / out[-2][1] >= out[-1][0] / out[-1][1]:
            s2, w2, c2 = out.pop()
            out[-1][0] += s2
            out[-1][1] += w2
            out[-1][2] += c2
    res = []
    for s, wt, cnt in out:
        res.extend([s / wt] * cnt)
    return res


def projected_newton_cycle_space(inst_edges, n, demand, objective, x0=None, tol=1e-12, max_iter=400):
    """Minimize an edge-separable smooth convex objective over flows routing
    ``demand``: Newton's method on the cycle-space parametrization.

    ``objective(f) -> (value, grad, hess_diag)`` with positive Hessian
    diagonal. Flows are parametrized as f = f0 + N z where N's columns are
    fundamental cycles of a spanning tree.
    """
    m = len(inst_edges)
    # Spanning forest via BFS; build fundamental cycle basis.
    adj = [[] for _ in range(n)]
    for e, (u, v) in enumerate(inst_edges):
        adj[u].append((v, e, 1))
        adj[v].append((u, e, -1))
    parent = [None] * n
    order = []
    tree_edges = set()
    for root in range(n):
        if parent[root] is not None:
            continue
        parent[root] = (root, -1, 0)
        queue = [root]
        while queue:
            u = queue.pop(0)
            order.append(u)
            for v, e, s in adj[u]:
                if parent[v] is None:
                    parent[v] = (u, e, s)
                    tree_edges.add(e)
                    queue.append(v)
    basis = []
    for e, (u, v) in enumerate(inst_edges):
        if e in tree_edges or u == v:
            if u == v:
                col = np.zeros(m)
                col[e] = 1.0
                basis.append(col)
            continue
        col = np.zeros(m)
        col[e] = 1.0

        # Close the cycle with the tree path v -> root -> u. Walking
        # child->parent traverses a tree edge against its stored sign.
        def path_to_root(x):
            path = []
            while parent[x][1] != -1:
                p, pe, ps = parent[x]
                path.append((pe, ps))
                x = p
            return x, path

        ru, pathu = path_to_root(u)
        rv, pathv = path_to_root(v)
        assert ru == rv
        for pe, ps in pathv:
            col[pe] -= ps
        for pe, ps in pathu:
            col[pe] += ps
        basis.append(col)
    if not basis:
        # Tree graph: flow fully determined by demand.
        N = np.zeros((m, 0))
    else:
        N = np.stack(basis, axis=1)
    if x0 is None:
        raise ValueError("x0 (a feasible starting flow) is required")
    f = np.asarray(x0, dtype=float).copy()
    for _ in range(max_iter):
        val, grad, hdiag = objective(f)
        g = N.T @ grad
        if np.linalg.norm(g, ord=np.inf) < tol * (1 + abs(val)):
            break
        H = N.T @ (hdiag[:, None] * N)
        try:
            dz = np.linalg.solve(H + 1e-14 * np.eye(H.shape[0]), -g)
        except np.linalg.LinAlgError:
            dz = -g
        step = 1.0
        df = N @ dz
        while step > 1e-18:
            cand = f + step * df
            try:
                v2, _, _ = objective(cand)
            except (ValueError, FloatingPointError):
                step /= 2
                continue
            if np.isfinite(v2) and v2 <= val + 1e-12 * abs(val):
                if v2 <= val:
                    break
            step /= 2
        f = f + step * df
        if step <= 1e-18:
            break
    return f
