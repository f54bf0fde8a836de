"""Cost/capacity scaling wrappers, interior starting point, isolation-style
rounding, and exact optimality certification.

Everything here is exact: instances are integral, potentials are kept as
Fractions with bounded denominators, and every claimed optimum is verified
by the absence of negative residual cycles. The solvers that produce
candidate flows (the interior point core, or a reference oracle) are
passed in as ``core_solver`` callables taking a circulation-form
:class:`FlowInstance` and returning an exact integral optimal flow.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InfeasibleInstance, NegativeCycleError
from .graph import FlowInstance, build_instance, divergence, is_feasible, residual_graph

MAX_SCALING_ROUNDS = 200


# ----------------------------------------------------------------------
# Certification.


@dataclass
class Certificate:
    ok: bool
    reason: str
    cost: object = None
    potentials: list = None
    negative_cycle: list = None

    def to_json(self):
        out = {"status": "optimal" if self.ok else self.reason}
        if self.cost is not None:
            out["cost"] = int(self.cost)
        if self.potentials is not None:
            out["potentials"] = [str(y) for y in self.potentials]
        if self.negative_cycle is not None:
            out["negative_cycle"] = [[int(e), int(s)] for e, s in self.negative_cycle]
        return json.dumps(out)


def _bellman_ford(n, arcs):
    """arcs: (u, v, w, tag). Returns (dist, None) or (None, cycle_tags)."""
    dist = [0] * n
    pred = [None] * n
    for _ in range(n + 1):
        changed = False
        for (u, v, w, tag) in arcs:
            nd = dist[u] + w
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = (u, tag)
                changed = True
                last = v
        if not changed:
            return dist, None
    # negative cycle: walk predecessors until a repeat
    seen = {}
    x = last
    while x not in seen:
        seen[x] = True
        x = pred[x][0]
    cyc = []
    start = x
    while True:
        u, tag = pred[x]
        cyc.append(tag)
        x = u
        if x == start:
            break
    cyc.reverse()
    return None, cyc


def residual_arcs(inst: FlowInstance, f):
    arcs = []
    for e in range(inst.m):
        u, v = inst.tails[e], inst.heads[e]
        if u == v:
            continue
        if f[e] < inst.u_hi[e]:
            arcs.append((u, v, inst.cost[e], (e, 1)))
        if f[e] > inst.u_lo[e]:
            arcs.append((v, u, -inst.cost[e], (e, -1)))
    return arcs


def verify_optimal(inst: FlowInstance, f) -> Certificate:
    """Feasibility plus no negative residual cycle, certified by potentials
    from Bellman-Ford (exact integer arithmetic)."""
    if not is_feasible(inst, f):
        return Certificate(False, "infeasible")
    dist, cyc = _bellman_ford(inst.n, residual_arcs(inst, f))
    cost = sum(inst.cost[e] * f[e] for e in range(inst.m))
    if cyc is not None:
        return Certificate(False, "negative_cycle", cost=cost, negative_cycle=cyc)
    y = [-d for d in dist]
    return Certificate(True, "optimal", cost=cost, potentials=y)


def eps_optimal(inst: FlowInstance, f, y, eps) -> bool:
    """min over residual arcs of the reduced cost c - (y_u - y_v) > -eps."""
    for (u, v, w, _tag) in residual_arcs(inst, f):
        if w - (y[u] - y[v]) <= -eps:
            return False
    return True


def extract_dual(inst: FlowInstance, f):
    """Optimal dual (y, s-, s+) for a circulation-form instance (zero lower
    bounds): y from shortest distances on the residual graph, slacks by the
    three complementary-slackness cases; exact. Raises
    :class:`NegativeCycleError` when f is not optimal."""
    if any(lo != 0 for lo in inst.u_lo):
        raise ValueError("extract_dual expects circulation form (u_lo == 0)")
    dist, cyc = _bellman_ford(inst.n, residual_arcs(inst, f))
    if cyc is not None:
        raise NegativeCycleError("flow is not optimal", cycle=cyc)
    y = [-d for d in dist]
    s_minus = [0] * inst.m
    s_plus = [0] * inst.m
    for e in range(inst.m):
        u, v = inst.tails[e], inst.heads[e]
        by = y[u] - y[v]
        if f[e] == inst.u_lo[e] and f[e] < inst.u_hi[e]:
            s_minus[e] = inst.cost[e] - by
        elif f[e] == inst.u_hi[e] and f[e] > inst.u_lo[e]:
            s_plus[e] = by - inst.cost[e]
        elif inst.u_lo[e] == inst.u_hi[e]:
            d = inst.cost[e] - by
            if d >= 0:
                s_minus[e] = d
            else:
                s_plus[e] = -d
    return y, s_minus, s_plus


# ----------------------------------------------------------------------
# Interior starting point and rounding.


def initial_point(inst: FlowInstance):
    """Augment with a star vertex so the capacity-box midpoint becomes a
    feasible, strictly interior start; star edges carry cost 4 m U^2, so an
    optimal augmented flow uses them iff the instance is infeasible.

    Requires every edge to have u_lo < u_hi (presolve fixed edges away
    first). Returns (augmented instance, f_init, star edge ids)."""
    for e in range(inst.m):
        if inst.u_lo[e] >= inst.u_hi[e]:
            raise ValueError("initial_point requires nonempty open capacity intervals")
    m, n = inst.m, inst.n
    f0 = [Fraction(inst.u_lo[e] + inst.u_hi[e], 2) for e in range(m)]
    dbar = divergence(inst, f0)
    star_cost = 4 * max(1, m) * inst.U * inst.U
    edges = list(zip(inst.tails, inst.heads))
    u_lo = list(inst.u_lo)
    u_hi = list(inst.u_hi)
    cost = list(inst.cost)
    f_init = list(f0)
    star = []
    vstar = n
    for v in range(n):
        delta = dbar[v] - inst.demand[v]
        if delta == 0:
            continue
        eid = len(edges)
        if delta > 0:
            # v over-supplies by delta: absorb it through an edge into v
            edges.append((vstar, v))
        else:
            edges.append((v, vstar))
        cap = 2 * abs(delta)
        assert cap == int(cap)
        u_lo.append(0)
        u_hi.append(int(cap))
        cost.append(star_cost)
        f_init.append(abs(delta))
        star.append(eid)
    if not star:
        return inst, [float(x) for x in f_init], []
    demand = list(inst.demand) + [0]
    aug = build_instance(n + 1, edges, demand, cost, u_lo, u_hi)
    return aug, [float(x) for x in f_init], star


def perturb_costs(inst: FlowInstance, rng: random.Random):
    """Isolation-style perturbation: c~ = c + z with z uniform in
    {1..2mU}/(4 m^2 U^2); returned as floats for the numeric core plus the
    exact Fractions for bookkeeping."""
    m = max(1, inst.m)
    denom = 4 * m * m * inst.U * inst.U
    z = [Fraction(rng.randint(1, 2 * m * inst.U), denom) for _ in range(inst.m)]
    floats = [inst.cost[e] + float(z[e]) for e in range(inst.m)]
    return floats, z


def round_to_integral(inst: FlowInstance, f_tilde):
    """Round each entry to the nearest integer, clamped to the capacity
    box; the caller re-verifies and re-randomizes on failure."""
    out = []
    for e in range(inst.m):
        x = int(round(float(f_tilde[e])))
        x = min(max(x, inst.u_lo[e]), inst.u_hi[e])
        out.append(x)
    return out


def repair_to_optimal(inst: FlowInstance, f, max_rounds=None):
    """Cancel negative residual cycles (exact) until optimal; the warm
    start is expected to be near-optimal so few cancellations happen.
    Returns (optimal flow, number of cancellations)."""
    f = list(f)
    rounds = 0
    cap = max_rounds if max_rounds is not None else 10_000 + 100 * inst.m
    while True:
        dist, cyc = _bellman_ford(inst.n, residual_arcs(inst, f))
        if cyc is None:
            return f, rounds
        bottleneck = None
        for e, s in cyc:
            room = inst.u_hi[e] - f[e] if s > 0 else f[e] - inst.u_lo[e]
            bottleneck = room if bottleneck is None else min(bottleneck, room)
        assert bottleneck and bottleneck > 0
        for e, s in cyc:
            f[e] += s * bottleneck
        rounds += 1
        if rounds > cap:
            raise RuntimeError("negative-cycle repair did not converge")


def make_feasible_integral(inst: FlowInstance, f_float):
    """Integral feasible flow near ``f_float``: round, then route the
    leftover imbalance through residual shortest augmenting paths."""
    from .oracles import feasible_integral_flow

    f = round_to_integral(inst, f_float)
    div = divergence(inst, f)
    need = [div[v] - inst.demand[v] for v in range(inst.n)]
    if all(x == 0 for x in need):
        return f
    # Fix imbalances one unit at a time along residual paths: pushing a
    # unit a->b raises the divergence at a and lowers it at b, so route
    # from deficit vertices to excess vertices.
    for _ in range(4 * inst.n * (1 + inst.U)):
        try:
            src = next(v for v in range(inst.n) if need[v] < 0)
        except StopIteration:
            break
        arcs = residual_arcs(inst, f)
        adj = {}
        for (u, v, w, tag) in arcs:
            adj.setdefault(u, []).append((v, tag))
        prev = {src: None}
        queue = [src]
        target = None
        while queue and target is None:
            x = queue.pop(0)
            for (v, tag) in adj.get(x, []):
                if v not in prev:
                    prev[v] = (x, tag)
                    if need[v] > 0:
                        target = v
                        break
                    queue.append(v)
        if target is None:
            full = feasible_integral_flow(inst)
            if full is None:
                raise InfeasibleInstance("no feasible flow")
            return full
        x = target
        while prev[x] is not None:
            px, (e, s) = prev[x]
            f[e] += s
            x = px
        need[src] += 1
        need[target] -= 1
    if divergence(inst, f) != list(inst.demand):
        full = feasible_integral_flow(inst)
        if full is None:
            raise InfeasibleInstance("no feasible flow")
        return full
    return f


# ----------------------------------------------------------------------
# Circulation form.


@dataclass
class CirculationMap:
    inst: FlowInstance          # original (presolved) instance
    circ: FlowInstance          # circulation form instance
    apex_edges: list            # ids in circ that must be saturated
    n_real: int                 # original edge count

    def flow_back(self, f_circ):
        for eid in self.apex_edges:
            if f_circ[eid] != self.circ.u_hi[eid]:
                raise InfeasibleInstance("demand cannot be routed")
        return [f_circ[e] + self.inst.u_lo[e] for e in range(self.n_real)]


def to_circulation(inst: FlowInstance) -> CirculationMap:
    """Shift lower bounds to zero and route demands through an apex vertex
    with strongly negative-cost edges; saturating them is optimal exactly
    when the original instance is feasible."""
    n, m = inst.n, inst.m
    edges = []
    caps = []
    costs = []
    for e in range(m):
        edges.append((inst.tails[e], inst.heads[e]))
        caps.append(inst.u_hi[e] - inst.u_lo[e])
        costs.append(inst.cost[e])
    div_lo = divergence(inst, list(inst.u_lo))
    imbalance = [inst.demand[v] - div_lo[v] for v in range(n)]
    M = 2 * sum(abs(costs[e]) * caps[e] for e in range(m)) + 1
    apex = []
    z = n
    for v in range(n):
        b = imbalance[v]
        if b == 0:
            continue
        eid = len(edges)
        if b > 0:
            edges.append((z, v))
        else:
            edges.append((v, z))
        caps.append(abs(b))
        costs.append(-M)
        apex.append(eid)
    nn = n + 1 if apex else n
    circ = build_instance(nn, edges, [0] * nn, costs, [0] * len(edges), caps)
    return CirculationMap(inst, circ, apex, m)


def presolve(inst: FlowInstance):
    """Remove self-loops and fixed edges (u_lo == u_hi); returns
    (reduced instance, an embedding function for flows)."""
    keep = []
    fixed_flow = {}
    d = list(inst.demand)
    for e in range(inst.m):
        u, v = inst.tails[e], inst.heads[e]
        if u == v:
            fixed_flow[e] = inst.u_hi[e] if inst.cost[e] < 0 else inst.u_lo[e]
        elif inst.u_lo[e] == inst.u_hi[e]:
            fixed_flow[e] = inst.u_lo[e]
            d[u] -= fixed_flow[e]
            d[v] += fixed_flow[e]
        else:
            keep.append(e)
    sub = build_instance(
        inst.n,
        [(inst.tails[e], inst.heads[e]) for e in keep],
        d,
        [inst.cost[e] for e in keep],
        [inst.u_lo[e] for e in keep],
        [inst.u_hi[e] for e in keep],
    )

    def embed(f_sub):
        f = [0] * inst.m
        for i, e in enumerate(keep):
            f[e] = f_sub[i]
        for e, x in fixed_flow.items():
            f[e] = x
        return f

    return sub, embed


# ----------------------------------------------------------------------
# Cost scaling (Appendix-style, exact arithmetic).


def _poly_cost_bound(m):
    return max(2, m) ** 10


@dataclass
class ScalingAudit:
    rounds: list = field(default_factory=list)

    def record(self, **kw):
        self.rounds.append(kw)


def cost_scaling_solve(circ: FlowInstance, core_solver, audit: ScalingAudit = None):
    """Exact min-cost circulation for arbitrary costs given a core that
    handles m^10-bounded costs: halve an eps-optimality parameter by
    solving cost-rounded residual instances, tracking exact potentials."""
    n, m = circ.n, circ.m
    if any(lo != 0 for lo in circ.u_lo):
        raise ValueError("cost scaling expects circulation form")
    C = circ.C
    if C <= _poly_cost_bound(m):
        f = core_solver(circ)
        if audit is not None:
            audit.record(kind="direct", eps=None)
        return f
    f = [0] * m
    y = [Fraction(0)] * n
    eps = Fraction(C)
    m8 = max(2, m) ** 8
    target = Fraction(1, n + 1)
    rounds = 0
    while eps >= target:
        g = eps / m8
        arcs = residual_arcs(circ, f)
        r_edges = []
        r_caps = []
        r_costs = []
        r_tags = []
        for (u, v, w, tag) in arcs:
            chat = w - (y[u] - y[v])
            cint = _round_nearest(chat / g)
            if cint > max(2, m) ** 9:
                continue  # never on a negative cycle
            cap = (circ.u_hi[tag[0]] - f[tag[0]]) if tag[1] > 0 else f[tag[0]]
            r_edges.append((u, v))
            r_caps.append(cap)
            r_costs.append(cint)
            r_tags.append(tag)
        rinst = build_instance(n, r_edges, [0] * n, r_costs, [0] * len(r_edges), r_caps)
        delta = core_solver(rinst)
        dy, _, _ = extract_dual(rinst, delta)
        for i, (e, s) in enumerate(r_tags):
            f[e] += s * delta[i]
        y = [y[v] + dy[v] * g for v in range(n)]
        eps = eps / 2
        rounds += 1
        if audit is not None:
            audit.record(kind="cost", eps=eps, f=list(f), y=list(y))
        if rounds > MAX_SCALING_ROUNDS:
            raise RuntimeError("cost scaling did not terminate")
    cert = verify_optimal(circ, f)
    if not cert.ok:
        f, _ = repair_to_optimal(circ, f)
    return f


def _round_nearest(q: Fraction) -> int:
    return int(math.floor(q + Fraction(1, 2)))


# ----------------------------------------------------------------------
# Capacity scaling.


def poly_approx(circ: FlowInstance):
    """m^12-approximate min-cost circulation: the max-bottleneck negative
    cycle, found by binary search over distinct capacities with
    Bellman-Ford detection. Returns (flow, x) with value -x <= 0."""
    caps = sorted({circ.u_hi[e] for e in range(circ.m) if circ.u_hi[e] > 0})
    if not caps:
        return [0] * circ.m, 0

    def neg_cycle_at(u):
        # Self-loops are legitimate one-arc cycles here.
        arcs = [(circ.tails[e], circ.heads[e], circ.cost[e], (e, 1))
                for e in range(circ.m)
                if circ.u_hi[e] >= u]
        _, cyc = _bellman_ford(circ.n, arcs)
        return cyc

    lo, hi = 0, len(caps) - 1
    if neg_cycle_at(caps[0]) is None:
        return [0] * circ.m, 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if neg_cycle_at(caps[mid]) is not None:
            lo = mid
        else:
            hi = mid - 1
    cyc = neg_cycle_at(caps[lo])
    bottleneck = min(circ.u_hi[e] for e, _ in cyc)
    f = [0] * circ.m
    for e, s in cyc:
        f[e] += s * bottleneck
    x = -sum(circ.cost[e] * f[e] for e in range(circ.m))
    assert x > 0
    return f, x


def capacity_scaling_solve(circ: FlowInstance, core_solver, audit: ScalingAudit = None):
    """Exact min-cost circulation for arbitrary capacities: repeatedly add
    the optimal circulation of a capacity-rounded residual instance; each
    round at least halves the optimality gap."""
    if any(lo != 0 for lo in circ.u_lo):
        raise ValueError("capacity scaling expects circulation form")
    n, m = circ.n, circ.m
    f = [0] * m
    m20 = max(2, m) ** 20
    for _round in range(MAX_SCALING_ROUNDS):
        res_edges = []
        res_caps = []
        res_costs = []
        res_tags = []
        for (u, v, w, tag) in residual_arcs(circ, f):
            cap = (circ.u_hi[tag[0]] - f[tag[0]]) if tag[1] > 0 else f[tag[0]]
            res_edges.append((u, v))
            res_caps.append(cap)
            res_costs.append(w)
            res_tags.append(tag)
        # keep self-loop profits available via poly_approx on the original
        for e in range(m):
            if circ.tails[e] == circ.heads[e]:
                room_fwd = circ.u_hi[e] - f[e]
                if room_fwd > 0:
                    res_edges.append((circ.tails[e], circ.heads[e]))
                    res_caps.append(room_fwd)
                    res_costs.append(circ.cost[e])
                    res_tags.append((e, 1))
                if f[e] > 0:
                    res_edges.append((circ.tails[e], circ.heads[e]))
                    res_caps.append(f[e])
                    res_costs.append(-circ.cost[e])
                    res_tags.append((e, -1))
        rinst = build_instance(n, res_edges, [0] * n, res_costs, [0] * len(res_edges), res_caps)
        approx_f, x = poly_approx(rinst)
        if audit is not None:
            audit.record(kind="capacity", x=x, f=list(f))
        if x == 0:
            break
        B = x
        g = -(-B // m20)  # ceil(B / m^20)
        capBm = B * m20
        r2_caps = []
        keep = []
        for i, cap in enumerate(res_caps):
            c2 = (min(cap, capBm) // g) * g
            if c2 > 0:
                keep.append(i)
                r2_caps.append(c2 // g)
        r2 = build_instance(
            n,
            [res_edges[i] for i in keep],
            [0] * n,
            [res_costs[i] for i in keep],
            [0] * len(keep),
            r2_caps,
        )
        delta = core_solver(r2)
        moved = 0
        for j, i in enumerate(keep):
            e, s = res_tags[i]
            f[e] += s * delta[j] * g
            moved += abs(delta[j])
        if moved == 0:
            break
    cert = verify_optimal(circ, f)
    if not cert.ok:
        f, _ = repair_to_optimal(circ, f)
    return f


# ----------------------------------------------------------------------
# Reductions.


def reduce_maxflow(n, edges, caps, s, t):
    """Max-flow as min-cost circulation: add t->s with cost -1 and huge
    capacity, zero costs/demands elsewhere."""
    m = len(edges)
    U = max([1] + list(caps))
    all_edges = list(edges) + [(t, s)]
    cost = [0] * m + [-1]
    u_lo = [0] * (m + 1)
    u_hi = list(caps) + [m * U]
    inst = build_instance(n, all_edges, [0] * n, cost, u_lo, u_hi)
    return inst, m  # id of the t->s edge


def extract_cut(n, edges, caps, s, f):
    """Source side of a min cut: residual reachability over the original
    edges."""
    adj = [[] for _ in range(n)]
    for e, (u, v) in enumerate(edges):
        if f[e] < caps[e]:
            adj[u].append(v)
        if f[e] > 0:
            adj[v].append(u)
    reach = [False] * n
    reach[s] = True
    queue = [s]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if not reach[y]:
                reach[y] = True
                queue.append(y)
    return {v for v in range(n) if reach[v]}


def reduce_neg_sssp(n, edges, weights, s, solver):
    """Single-source shortest paths with negative weights via min-cost
    flow; returns ("cycle", cycle) when a negative cycle exists, else
    ("dist", distances) with unreachable vertices at +inf."""
    from .graph import cycle_decompose

    # negative-cycle probe: unit capacities, zero demand
    probe = build_instance(n, edges, [0] * n, list(weights), [0] * len(edges), [1] * len(edges))
    f = solver(probe)
    if any(f):
        cycles = cycle_decompose(probe, f)
        return "cycle", cycles[0][0]
    # reachable subgraph
    adj = [[] for _ in range(n)]
    for (u, v) in edges:
        adj[u].append(v)
    reach = [False] * n
    reach[s] = True
    queue = [s]
    while queue:
        x = queue.pop(0)
        for y in adj[x]:
            if not reach[y]:
                reach[y] = True
                queue.append(y)
    idx = [v for v in range(n) if reach[v]]
    pos = {v: i for i, v in enumerate(idx)}
    sub_edges = [(pos[u], pos[v]) for (u, v) in edges if reach[u] and reach[v]]
    sub_w = [weights[e] for e, (u, v) in enumerate(edges) if reach[u] and reach[v]]
    k = len(idx)
    d = [-1] * k
    d[pos[s]] = k - 1
    inst = build_instance(k, sub_edges, d, sub_w, [0] * len(sub_edges), [k] * len(sub_edges))
    f = solver(inst)
    y, _, _ = _potentials_for_demand_instance(inst, f)
    dist = [math.inf] * n
    for v in idx:
        dist[v] = y[pos[s]] - y[pos[v]]
    return "dist", dist


def _potentials_for_demand_instance(inst, f):
    dist, cyc = _bellman_ford(inst.n, residual_arcs(inst, f))
    if cyc is not None:
        raise NegativeCycleError("solver returned non-optimal flow", cycle=cyc)
    y = [-d for d in dist]
    return y, None, None
