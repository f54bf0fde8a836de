import random

import numpy as np
import pytest

from cycleflow.gen import random_instance
from cycleflow.graph import build_instance, divergence, is_feasible
from cycleflow.errors import InfeasibleInstance
from cycleflow.oracles import (
    exhaustive_tiny,
    feasible_integral_flow,
    maxflow_oracle,
    min_mean_cycle_cancel,
    pava,
    projected_newton_cycle_space,
    sinkhorn,
    ssp_mincostflow,
)


def triangle():
    return build_instance(3, [(0, 1), (1, 2), (2, 0)], [0, 0, 0], [-1, -1, 1], [0, 0, 0], [1, 1, 1])


def test_ssp_triangle():
    res = ssp_mincostflow(triangle())
    assert res.cost == -1
    assert is_feasible(triangle(), list(res.flow))


def test_ssp_parallel_edges():
    inst = build_instance(2, [(0, 1), (0, 1)], [2, -2], [1, 2], [0, 0], [2, 2])
    res = ssp_mincostflow(inst)
    assert res.cost == 2
    assert tuple(res.flow) == (2, 0)


def test_ssp_infeasible():
    inst = build_instance(2, [(0, 1)], [2, -2], [1], [0], [1])
    with pytest.raises(InfeasibleInstance):
        ssp_mincostflow(inst)


def test_ssp_matches_exhaustive_tiny():
    rng = random.Random(0)
    for seed in range(40):
        inst = random_instance(rng, n_max=5, m_max=7, U=2, C=5)
        res = ssp_mincostflow(inst)
        brute = exhaustive_tiny(inst)
        assert brute is not None
        assert res.cost == brute.cost
        assert is_feasible(inst, list(res.flow))


def test_ssp_matches_mmcc_random():
    rng = random.Random(1)
    for seed in range(25):
        inst = random_instance(rng, n_max=7, m_max=14, U=4, C=9)
        a = ssp_mincostflow(inst)
        b = min_mean_cycle_cancel(inst)
        assert a.cost == b.cost


def test_ssp_big_capacities():
    inst = build_instance(
        3,
        [(0, 1), (1, 2), (0, 2)],
        [10**9, 0, -(10**9)],
        [3, 4, 9],
        [0, 0, 0],
        [10**9, 10**9, 10**9],
    )
    res = ssp_mincostflow(inst)
    # route everything 0->1->2 (cost 7) rather than direct (cost 9)
    assert res.cost == 7 * 10**9


def test_maxflow_unit_path():
    value, _, cut = maxflow_oracle(3, [(0, 1), (1, 2)], [1, 1], 0, 2)
    assert value == 1
    assert 0 in cut and 2 not in cut


def test_maxflow_disconnected():
    value, _, cut = maxflow_oracle(4, [(0, 1), (2, 3)], [5, 5], 0, 3)
    assert value == 0


def test_maxflow_cut_capacity_matches():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(3, 9)
        m = rng.randint(n, 3 * n)
        edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(m)]
        edges = [(u, v) for u, v in edges if u != v]
        caps = [rng.randint(1, 8) for _ in edges]
        value, flow, cut = maxflow_oracle(n, edges, caps, 0, n - 1)
        cutcap = sum(c for (u, v), c in zip(edges, caps) if u in cut and v not in cut)
        assert value == cutcap


def test_feasible_integral_flow():
    rng = random.Random(11)
    for _ in range(25):
        inst = random_instance(rng, n_max=7, m_max=12, U=5, C=5)
        f = feasible_integral_flow(inst)
        assert f is not None
        assert is_feasible(inst, f)


def test_pava_sorted_identity():
    y = [1.0, 2.0, 5.0, 9.0]
    assert pava(y) == y


def test_pava_pools():
    assert pava([2.0, 1.0]) == [1.5, 1.5]


def test_sinkhorn_marginals():
    rng = np.random.default_rng(0)
    cost = rng.uniform(0, 2, size=(5, 5))
    row = np.full(5, 1.0)
    col = np.full(5, 1.0)
    P = sinkhorn(cost, row, col, reg=1.0, tol=1e-10)
    assert np.abs(P.sum(axis=1) - row).max() < 1e-9
    assert np.abs(P.sum(axis=0) - col).max() < 1e-9


def test_projected_newton_single_cycle():
    # triangle with quadratic costs; compare against golden-section on the
    # single cycle coordinate.
    edges = [(0, 1), (1, 2), (2, 0)]
    w = np.array([1.0, 2.0, 3.0])
    base = np.array([1.0, 1.0, 0.0])  # routes d = (1,0,-1)

    def objective(f):
        return float(np.sum(w * f * f)), 2 * w * f, 2 * w

    f = projected_newton_cycle_space(edges, 3, None, objective, x0=base)

    def val(t):
        g = base + t * np.array([1.0, 1.0, 1.0])
        return float(np.sum(w * g * g))

    lo, hi = -10.0, 10.0
    phi = (5**0.5 - 1) / 2
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    for _ in range(200):
        if val(c) < val(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    best = val((a + b) / 2)
    assert objective(f)[0] == pytest.approx(best, rel=1e-9, abs=1e-9)
