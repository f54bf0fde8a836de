"""Potential-reduction interior point method for min-cost flow, driven by
approximate min-ratio cycles from a batch of sampled low-stretch trees,
with lazy gradient/length maintenance via the dynamic trees' detect
trigger and rebuilds scheduled by the rebuilding game.

The potential is ``20 m log(c'f - F*) + sum_e ((u+ - f)^-a + (f - u-)^-a)``
with ``a = 1/(1000 log2(mU))``. A step moves along a fundamental tree
cycle whose gradient/length ratio passes the quality check; the step size
starts at the analytical value ``-k^2 a^2 / (800 <g, D>)`` and is then
extended by a doubling line search on the true potential (the analytical
step is a worst-case guarantee; searching never hurts and every accepted
step is asserted to beat the guaranteed decrease).

Exactness is restored outside the numeric loop: costs are perturbed,
near-optimal flows are rounded to integers and certified by exact
negative-cycle checks, with certified cycle-canceling repair as the
last-resort fallback.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryFlow,
    InfeasibleInstance,
    NonpositiveGap,
    QualityTooLow,
    Stalled,
)
from .graph import FlowInstance, build_instance, divergence
from .mrc import CycleRef, TreeBatch
from .rebuilding import GameState, scheduler_hook
from .scaling import (
    capacity_scaling_solve,
    cost_scaling_solve,
    initial_point,
    make_feasible_integral,
    perturb_costs,
    presolve,
    repair_to_optimal,
    round_to_integral,
    to_circulation,
    verify_optimal,
)


def alpha_for(m, U):
    return 1.0 / (1000.0 * math.log2(max(4, m * max(1, U))))


def _interior_slacks(inst, f, cost=None):
    tails, heads, c, lo, hi = inst.arrays()
    if cost is not None:
        c = cost
    up = hi - f
    dn = f - lo
    if np.any(up <= 0) or np.any(dn <= 0):
        raise BoundaryFlow("flow not strictly inside its capacity box")
    return c, up, dn


def potential(inst: FlowInstance, f, Fstar, cost=None) -> float:
    """Phi(f) = 20 m log(c'f - F*) + sum of alpha-power barrier terms."""
    f = np.asarray(f, dtype=np.float64)
    c, up, dn = _interior_slacks(inst, f, cost)
    gap = float(c @ f) - float(Fstar)
    if gap <= 0:
        raise NonpositiveGap(f"c'f - F* = {gap}")
    a = alpha_for(inst.m, inst.U)
    return 20.0 * inst.m * math.log(gap) + float(np.sum(up ** (-a) + dn ** (-a)))


def gradients_lengths(inst: FlowInstance, f, r, cost=None):
    """Componentwise lengths (u+-f)^(-1-a) + (f-u-)^(-1-a) and gradients
    20 m c / r + a (u+-f)^(-1-a) - a (f-u-)^(-1-a)."""
    f = np.asarray(f, dtype=np.float64)
    c, up, dn = _interior_slacks(inst, f, cost)
    if r <= 0:
        raise NonpositiveGap(f"r = {r}")
    a = alpha_for(inst.m, inst.U)
    pu = up ** (-1.0 - a)
    pd = dn ** (-1.0 - a)
    lens = pu + pd
    grads = 20.0 * inst.m * c / r + a * pu - a * pd
    return grads, lens


def quality_check(g, lens, cycle_edges, threshold) -> bool:
    """True iff <g, D> / ||l o D||_1 <= -threshold for the circulation D
    given as [(edge, coeff), ...] (closed threshold: ties pass)."""
    num = sum(s * g[e] for e, s in cycle_edges)
    den = sum(abs(s) * lens[e] for e, s in cycle_edges)
    if den <= 0:
        return False
    return num / den <= -threshold


@dataclass
class IpmStats:
    iterations: int = 0
    detect_total: int = 0
    rebuilds: int = 0
    loss_fixes: int = 0
    win_fixes: int = 0
    full_refreshes: int = 0
    min_phi_decrease: float = math.inf
    quality_failures: int = 0

    def merge(self, other):
        self.iterations += other.iterations
        self.detect_total += other.detect_total
        self.rebuilds += other.rebuilds
        self.loss_fixes += other.loss_fixes
        self.win_fixes += other.win_fixes
        self.full_refreshes += other.full_refreshes
        self.min_phi_decrease = min(self.min_phi_decrease, other.min_phi_decrease)
        self.quality_failures += other.quality_failures


@dataclass
class IpmResult:
    status: str  # "optimal" | "stalled" | "iteration_limit"
    flow: np.ndarray
    gap: float
    phi: float
    stats: IpmStats
    log: list


class IpmState:
    """Mutable solver state: true flow f, lazily refreshed mirror f~ with
    the gradients/lengths computed from it, the tree batch and the
    rebuilding-game scheduler."""

    def __init__(self, inst, f0, Fstar, *, kappa=1.0 / 64, cost=None, rng=None,
                 detect_eps=None, B=None, log=None):
        self.inst = inst
        self.rng = rng or random.Random(0)
        self.Fstar = float(Fstar)
        self.kappa = float(kappa)
        self.alpha = alpha_for(inst.m, inst.U)
        self.f = np.asarray(f0, dtype=np.float64).copy()
        tails, heads, c, lo, hi = inst.arrays()
        self.cost = np.asarray(cost, dtype=np.float64) if cost is not None else c
        self.lo = lo
        self.hi = hi
        _interior_slacks(inst, self.f, self.cost)
        self.gap = float(self.cost @ self.f) - self.Fstar
        self.B = B if B is not None else max(1, math.ceil(math.log2(max(2, inst.n))))
        self.eps_detect = detect_eps if detect_eps is not None else \
            self.kappa * self.alpha / (1000.0 * self.B)
        self.r = self.gap
        self.f_tilde = self.f.copy()
        g, lens = gradients_lengths(inst, self.f_tilde, self.r, self.cost)
        self.batch = TreeBatch(inst.n, list(zip(inst.tails, inst.heads)), g, lens,
                               B=self.B, eps=self.eps_detect, rng=self.rng)
        mU = max(4, inst.m * max(1, inst.U))
        self.game = GameState(m=max(4, inst.m), d=3, gamma_g=0.5, C_r=1.0,
                              K=max(2, round(0.02 * math.log2(mU) ** 2)))
        self.phi = potential(inst, self.f, Fstar, self.cost)
        self.stats = IpmStats()
        self.log = log if log is not None else []
        self.t = 0

    # -- approximation maintenance ------------------------------------

    def maintain_approx(self):
        """Detect-driven refresh: only flagged edges get new f~, lengths
        and gradients; returns the refreshed edge set."""
        changed = self.batch.detect_union()
        if not changed:
            return changed
        eids = sorted(changed)
        a = self.alpha
        g_new = []
        l_new = []
        for e in eids:
            fe = self.f[e]
            self.f_tilde[e] = fe
            pu = (self.hi[e] - fe) ** (-1.0 - a)
            pd = (fe - self.lo[e]) ** (-1.0 - a)
            l_new.append(pu + pd)
            g_new.append(20.0 * self.inst.m * self.cost[e] / self.r + a * pu - a * pd)
        self.batch.set_edge_values(eids, g_new, l_new)
        self.stats.detect_total += len(changed)
        return changed

    def refresh_residual_estimate(self):
        """Refresh r and with it every gradient (lengths are untouched, so
        the dynamic trees' detect thresholds stay valid)."""
        self.r = self.gap
        a = self.alpha
        pu = (self.hi - self.f_tilde) ** (-1.0 - a)
        pd = (self.f_tilde - self.lo) ** (-1.0 - a)
        g = 20.0 * self.inst.m * self.cost / self.r + a * pu - a * pd
        self.batch.refresh_all_gradients(g)
        self.stats.full_refreshes += 1

    def full_refresh(self):
        """Exact mirror refresh plus full batch rebuild (used after
        level-0 fixes, mirroring the periodic reinitialization)."""
        self.f_tilde = self.f.copy()
        self.r = self.gap
        g, lens = gradients_lengths(self.inst, self.f_tilde, self.r, self.cost)
        self.batch.gall[:] = g
        self.batch.lall[:] = lens
        self.batch.rebuild(0)
        self.stats.rebuilds += 1

    def rebuild_level(self, level):
        """Map a game level to tree resampling: level 0 = new weights
        family + all trees; deeper levels resample proportionally fewer
        trees (the deepest level is a no-op, matching its O(1) role)."""
        d = self.game.d
        start = math.ceil(level * self.B / d)
        if level <= 0:
            self.full_refresh()
        elif start < self.B:
            self.batch.rebuild(start)
            self.stats.rebuilds += 1

    # -- stepping -------------------------------------------------------

    def step_threshold(self):
        return self.kappa * self.alpha / 8.0

    def guaranteed_decrease(self):
        return (self.kappa * self.alpha / 8.0) ** 2 / 500.0

    def _phi_delta(self, supp_e, supp_s, etas, cdelta):
        """Vectorized potential change for candidate step sizes along the
        cycle restricted to its support."""
        a = self.alpha
        e = np.asarray(supp_e)
        s = np.asarray(supp_s, dtype=np.float64)
        f = self.f[e]
        up = self.hi[e] - f
        dn = f - self.lo[e]
        etas = np.asarray(etas, dtype=np.float64)[:, None]
        up_new = up[None, :] - etas * s[None, :]
        dn_new = dn[None, :] + etas * s[None, :]
        bad = (up_new <= 0) | (dn_new <= 0)
        up_new = np.where(bad, 1.0, up_new)
        dn_new = np.where(bad, 1.0, dn_new)
        barrier = (up_new ** -a + dn_new ** -a) - (up[None, :] ** -a + dn[None, :] ** -a)
        dphi = barrier.sum(axis=1)
        gaps = self.gap + etas[:, 0] * cdelta
        ok = (gaps > 0) & ~bad.any(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            dphi = dphi + 20.0 * self.inst.m * (np.log(np.where(ok, gaps, 1.0)) - math.log(self.gap))
        dphi = np.where(ok, dphi, np.inf)
        return dphi

    def ipm_step(self, cyc: CycleRef):
        """Scale the accepted cycle and add it to the flow; the analytic
        step is extended by a doubling line search on Phi. Returns the
        realized potential decrease."""
        if cyc is None or cyc.grad >= 0:
            raise QualityTooLow("no descent cycle")
        edge_list = cyc.edge_list(self.batch)
        supp_e = [e for e, _ in edge_list]
        supp_s = [s for _, s in edge_list]
        cdelta = float(sum(self.cost[e] * s for e, s in edge_list))
        eta0 = -(self.kappa ** 2) * (self.alpha ** 2) / (800.0 * cyc.grad)
        # largest interior step along the cycle
        eta_max = math.inf
        for e, s in edge_list:
            room = (self.hi[e] - self.f[e]) if s > 0 else (self.f[e] - self.lo[e])
            eta_max = min(eta_max, room)
        eta_max *= 0.95
        if cdelta < 0:
            pass  # gap shrinks; positivity is checked per candidate
        etas = []
        eta = min(eta0, eta_max)
        while eta <= eta_max:
            etas.append(eta)
            eta *= 2.0
        if not etas:
            etas = [eta_max]
        dphi = self._phi_delta(supp_e, supp_s, etas, cdelta)
        j = int(np.argmin(dphi))
        # fall back to shrinking when even the analytic step misbehaves
        shrink = 0
        while not np.isfinite(dphi[j]) or dphi[j] >= 0:
            etas = [etas[0] * 0.5]
            dphi = self._phi_delta(supp_e, supp_s, etas, cdelta)
            j = 0
            shrink += 1
            if shrink > 60:
                raise QualityTooLow("line search failed to decrease the potential")
        eta_star = float(etas[j])
        decrease = float(dphi[j])
        for e, s in edge_list:
            self.f[e] += s * eta_star
        self.gap += eta_star * cdelta
        self.phi += decrease
        self.batch.slots[cyc.tree_index].add_cycle_flow(cyc, eta_star)
        self.stats.min_phi_decrease = min(self.stats.min_phi_decrease, -decrease)
        return -decrease


def run_ipm(inst: FlowInstance, f0, Fstar, *, kappa=1.0 / 64, cost=None, rng=None,
            target_gap=None, max_iters=None, log=None, check_start_potential=True) -> IpmResult:
    """Drive the potential below the termination threshold, or stall.

    ``cost`` optionally overrides the instance costs (used for perturbed
    solves). Stalling (quality failures surviving the rebuild schedule)
    signals that ``Fstar`` undershoots the optimum.
    """
    state = IpmState(inst, f0, Fstar, kappa=kappa, cost=cost, rng=rng, log=log)
    m, U = inst.m, max(1, inst.U)
    mU = max(4, m * U)
    if target_gap is None:
        target_gap = max(float(mU) ** -10, 1e-12 * (1.0 + abs(Fstar)))
    if check_start_potential and state.phi > 200.0 * m * math.log(mU) + 1e-6:
        raise ValueError("starting potential exceeds the admissible bound")
    if max_iters is None:
        max_iters = 20_000 + 40 * m
    threshold = state.step_threshold()
    status = "iteration_limit"
    consecutive_root_losses = 0
    while state.t < max_iters:
        if state.gap <= target_gap:
            status = "optimal"
            break
        if not (0.98 * state.r <= state.gap <= 1.02 * state.r):
            state.refresh_residual_estimate()
        win = state.game.begin_round()
        if win is not None:
            state.stats.win_fixes += 1
            state.rebuild_level(win)
        state.maintain_approx()
        cyc = state.batch.best()
        stalled = False
        while cyc is None or cyc.ratio > -threshold:
            state.stats.quality_failures += 1
            if state.game.exhausted():
                stalled = True
                break
            level = scheduler_hook(state.game)
            state.stats.loss_fixes += 1
            if level == 0:
                consecutive_root_losses += 1
            state.rebuild_level(level)
            cyc = state.batch.best()
            if level == 0 and (cyc is None or cyc.ratio > -threshold):
                if consecutive_root_losses >= 2:
                    stalled = True
                    break
            elif cyc is not None and cyc.ratio <= -threshold:
                consecutive_root_losses = 0
        if stalled:
            status = "stalled"
            break
        decrease = state.ipm_step(cyc)
        state.game.end_round()
        state.t += 1
        state.stats.iterations += 1
        state.log.append({
            "t": state.t,
            "phi": state.phi,
            "gap": state.gap,
            "ratio": cyc.ratio,
            "phi_decrease": decrease,
            "U_size": state.stats.detect_total,
            "rebuilds": state.stats.rebuilds,
        })
        if state.t % 512 == 0:
            state.phi = potential(inst, state.f, Fstar, state.cost)
    else:
        status = "iteration_limit"
    if state.gap <= target_gap:
        status = "optimal"
    return IpmResult(status, state.f, state.gap, state.phi, state.stats, state.log)


# ----------------------------------------------------------------------
# Exact solve pipeline.


@dataclass
class SolveReport:
    flow: list
    cost: object
    certificate: object
    stats: IpmStats
    probes: int = 0
    retries: int = 0
    repairs: int = 0
    elapsed: float = 0.0
    backend: str = "ipm"
    log: list = field(default_factory=list)


def _ipm_core(inst: FlowInstance, rng: random.Random, report: SolveReport, kappa=1.0 / 64):
    """Exact integral optimum of an integral instance: interior start +
    perturbed float IPM with an optimum-guess search, rounding, exact
    verification, and certified repair as fallback."""
    sub, embed = presolve(inst)
    if sub.m == 0:
        if any(sub.demand):
            raise InfeasibleInstance("no edges left but demands remain")
        return embed([])
    aug, f0, star = initial_point(sub)
    best_int = None
    for attempt in range(3):
        cfloat, _z = perturb_costs(aug, rng)
        cfloat = np.asarray(cfloat)
        f_float, ok = _fstar_search(aug, f0, cfloat, rng, report, kappa)
        f_int = round_to_integral(aug, f_float)
        report.retries += attempt
        if divergence(aug, f_int) == list(aug.demand):
            cert = verify_optimal(aug, f_int)
            if cert.ok:
                best_int = f_int
                break
        best_int = None
    if best_int is None:
        f_feas = make_feasible_integral(aug, f_float)
        best_int, rounds = repair_to_optimal(aug, f_feas)
        report.repairs += rounds
    if any(best_int[e] != 0 for e in star):
        raise InfeasibleInstance("optimal augmented flow uses a star edge")
    f_sub = best_int[: sub.m]
    return embed(f_sub)


def _fstar_search(aug, f0, cfloat, rng, report, kappa):
    """Approach the (perturbed) optimum value from below: every stalled
    probe yields an upper bound c'f on the optimum, so the guess window
    collapses geometrically."""
    scale = float(np.abs(cfloat).max() + 1.0)
    caps = max(abs(x) for x in (aug.u_lo + aug.u_hi)) + 1
    lo = -scale * caps * aug.m - 1.0
    f_warm = np.asarray(f0, dtype=np.float64)
    G = lo
    value = float(cfloat @ f_warm)
    last = None
    for probe in range(80):
        tail = max(1e-11 * (1.0 + abs(value)), 1e-13 * scale)
        res = run_ipm(aug, f_warm, G, kappa=kappa, cost=cfloat, rng=rng,
                      target_gap=tail, check_start_potential=False)
        report.probes += 1
        report.stats.merge(res.stats)
        f_warm = res.flow
        value = float(cfloat @ f_warm)
        last = res
        over = value - G
        if over <= 4.0 * tail:
            return f_warm, True
        # value upper-bounds the optimum; move the guess most of the way up
        G = value - max(tail, over / 16.0)
    return f_warm, last is not None and last.status == "optimal"


def oracle_core(inst: FlowInstance):
    from .oracles import ssp_mincostflow

    return list(ssp_mincostflow(inst).flow)


def solve_mincostflow(inst: FlowInstance, backend="ipm", seed=0, kappa=1.0 / 64) -> SolveReport:
    """Exact integral min-cost flow with certificate: circulation form,
    cost- and capacity-scaling wrappers around the chosen core."""
    t0 = time.perf_counter()
    report = SolveReport(flow=None, cost=None, certificate=None, stats=IpmStats())
    report.backend = backend
    rng = random.Random(seed)
    sub, embed = presolve(inst)
    if sub.m == 0:
        if any(sub.demand):
            raise InfeasibleInstance("no feasible flow")
        f = embed([])
        cert = verify_optimal(inst, f)
        report.flow = f
        report.cost = cert.cost
        report.certificate = cert
        report.elapsed = time.perf_counter() - t0
        return report
    cm = to_circulation(sub)
    if backend == "ipm":
        core = lambda c2: _ipm_core(c2, rng, report, kappa)
    elif backend == "oracle":
        core = oracle_core
    else:
        raise ValueError(f"unknown backend {backend!r}")
    inner = lambda c2: capacity_scaling_solve(c2, core)
    f_circ = cost_scaling_solve(cm.circ, inner)
    f_sub = cm.flow_back(f_circ)
    f = embed(f_sub)
    cert = verify_optimal(inst, f)
    if not cert.ok:
        raise AssertionError(f"pipeline produced uncertified flow: {cert.reason}")
    report.flow = f
    report.cost = cert.cost
    report.certificate = cert
    report.elapsed = time.perf_counter() - t0
    return report


def log_to_jsonl(log) -> str:
    return "\n".join(json.dumps(entry) for entry in log)
