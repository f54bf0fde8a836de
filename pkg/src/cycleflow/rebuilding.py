"""The rebuilding game: a deterministic player strategy for scheduling
partial rebuilds of leveled data structures against an adversary with
hidden per-round weights, plus a simulation harness that validates
adversary legality and accounts costs.

Levels are ``0..d``; a *fix* at level i rebuilds levels ``j >= i`` at cost
``C_r * m / k^i``. The player pre-empts with a WIN fix whenever a level
has been through ``gamma_g * m / k^l`` rounds since its last rebuild, and
answers forced steps with a LOSS fix at the smallest level whose deeper
levels have all reached ``2K`` losses. The invariant ``fix_0 < 2K`` holds
against every legal adversary.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import IllegalForce


@dataclass
class GameState:
    m: int
    d: int
    gamma_g: float
    C_r: float
    K: int
    k: float = 0.0
    t: int = 1
    fix: list = field(default_factory=list)
    round_: list = field(default_factory=list)
    prev: list = field(default_factory=list)
    last_rebuild_round: list = field(default_factory=list)
    total_cost: float = 0.0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if self.k == 0.0:
            self.k = max(2.0, self.m ** (1.0 / self.d))
        levels = self.d + 1
        self.fix = [0] * levels
        self.round_ = [0] * levels
        self.prev = [1] * levels
        self.last_rebuild_round = [1] * levels

    # -- core strategy ---------------------------------------------------

    def round_threshold(self, level):
        return self.gamma_g * self.m / (self.k ** level)

    def fix_cost(self, level):
        return self.C_r * self.m / (self.k ** level)

    def _fix(self, level, event):
        for j in range(level, self.d + 1):
            self.prev[j] = self.t
            self.last_rebuild_round[j] = self.t
        cost = self.fix_cost(level)
        self.total_cost += cost
        self.trace.append((self.t, event, level, cost, tuple(self.fix)))
        return cost

    def begin_round(self):
        """WIN pre-fix, if some level has served enough rounds. Returns the
        fixed level or None."""
        win_level = None
        for i in range(self.d + 1):
            if self.round_[i] >= self.round_threshold(i):
                win_level = i
                break
        if win_level is None:
            return None
        self._fix(win_level, "WIN")
        for j in range(win_level, self.d + 1):
            self.fix[j] = 0
            self.round_[j] = 0
        return win_level

    def loss_level(self):
        """Smallest level i such that fix_j == 2K for all j > i."""
        i = self.d
        while i > 0 and self.fix[i] >= 2 * self.K:
            i -= 1
        return i

    def on_forced_step(self):
        """Perform the LOSS fix demanded by a forced fixing step; returns
        the fixed level."""
        i = self.loss_level()
        self._fix(i, "LOSS")
        self.fix[i] += 1
        return i

    def end_round(self):
        for j in range(self.d + 1):
            self.round_[j] += 1
        self.trace.append((self.t, "ROUND", -1, 0.0, tuple(self.fix)))
        self.t += 1

    def exhausted(self):
        """All levels including 0 have hit the loss budget; in the solver
        this is the stall signal."""
        return self.fix[0] >= 2 * self.K


def scheduler_hook(state: GameState) -> int:
    """Adapter for the solver: a quality failure is reported as a forced
    fixing step; the returned level drives tree resampling."""
    return state.on_forced_step()


def trace_csv(state: GameState) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "event", "level", "cost", "fix_vector"])
    for t, event, level, cost, fixes in state.trace:
        w.writerow([t, event, level, f"{cost:.6g}", " ".join(map(str, fixes))])
    return buf.getvalue()


class Adversary:
    """Base adversary: hidden weights via ``weight(t)``; forcing policy via
    ``wants_force(state, n_forced, legal)`` where ``legal`` tells whether a
    forcing condition currently holds (the adversary knows its own
    weights, so this is information it already has). ``log2 weight`` must
    stay in (-K, K)."""

    def weight(self, t):
        return 1.0

    def wants_force(self, state: GameState, n_forced_this_round: int, legal: bool) -> bool:
        return False


def _sum_condition(state: GameState, weights):
    total = sum(weights[state.prev[i]] for i in range(state.d + 1))
    return total > 2 * (state.d + 1) * weights[state.t]


def _progress_condition(state: GameState):
    return any(
        state.t - state.last_rebuild_round[l] >= state.round_threshold(l)
        for l in range(state.d + 1)
    )


@dataclass
class SimulationReport:
    rounds: int
    total_cost: float
    bound: float
    max_fix0: int
    forced_steps: int
    state: GameState

    @property
    def within_bound(self):
        return self.total_cost <= self.bound


def simulate(m, d, gamma_g, C_r, K, adversary: Adversary, T, k=None, validate=True) -> SimulationReport:
    """Play T rounds; with ``validate`` every force must be legal (raises
    :class:`IllegalForce` otherwise). Reports cost against the bound
    ``K_game * (C_r K d / gamma_g) * (m + T)`` with K_game = 8."""
    state = GameState(m=m, d=d, gamma_g=gamma_g, C_r=C_r, K=K, k=k or 0.0)
    weights = {0: 1.0}
    max_fix0 = 0
    forced = 0
    for t in range(1, T + 1):
        w = float(adversary.weight(t))
        if not (-K < math.log2(w) < K):
            raise ValueError("adversary weight out of range")
        weights[t] = w
        state.begin_round()
        n_forced = 0
        while True:
            legal = _sum_condition(state, weights) or _progress_condition(state)
            if not adversary.wants_force(state, n_forced, legal):
                break
            if validate and not legal:
                raise IllegalForce(f"round {t}: neither forcing condition holds")
            state.on_forced_step()
            forced += 1
            n_forced += 1
            max_fix0 = max(max_fix0, state.fix[0])
        max_fix0 = max(max_fix0, state.fix[0])
        state.end_round()
    bound = 8.0 * (C_r * K * d / gamma_g) * (m + T)
    return SimulationReport(T, state.total_cost, bound, max_fix0, forced, state)
