import random

import pytest

from cycleflow.graph import (
    build_instance,
    cycle_decompose,
    cycle_vector,
    divergence,
    is_feasible,
    residual_graph,
)
from cycleflow.errors import EmptyInterval, Infeasible, NotACirculation, UnbalancedDemand


def single_edge():
    return build_instance(2, [(0, 1)], [1, -1], [1], [0], [2])


def triangle():
    # 0->1->2->0, unit caps, costs (-1,-1,1), zero demand
    return build_instance(3, [(0, 1), (1, 2), (2, 0)], [0, 0, 0], [-1, -1, 1], [0, 0, 0], [1, 1, 1])


def test_build_instance_fields():
    inst = single_edge()
    assert inst.U == 2 and inst.C == 1
    assert inst.m == 1 and inst.n == 2


def test_build_instance_unbalanced():
    with pytest.raises(UnbalancedDemand):
        build_instance(2, [(0, 1)], [1, 0], [1], [0], [2])


def test_build_instance_empty_interval():
    with pytest.raises(EmptyInterval):
        build_instance(2, [(0, 1)], [0, 0], [1], [3], [2])


def test_triangle_is_valid_circulation_instance():
    inst = triangle()
    assert is_feasible(inst, [1, 1, 1])
    assert divergence(inst, [1, 1, 1]) == [0, 0, 0]


def test_is_feasible_box():
    inst = single_edge()
    assert is_feasible(inst, [1])
    assert not is_feasible(inst, [3])


def test_residual_single_edge():
    inst = single_edge()
    rg = residual_graph(inst, [1])
    assert len(rg.arcs) == 2
    fwd = next(a for a in rg.arcs if a.forward)
    rev = next(a for a in rg.arcs if not a.forward)
    assert (fwd.cap, fwd.cost) == (1, 1)
    assert (rev.cap, rev.cost) == (1, -1)
    assert rev.edge == fwd.edge == 0


def test_residual_saturated_edge():
    inst = single_edge()
    rg = residual_graph(inst, [2])
    assert len(rg.arcs) == 1 and not rg.arcs[0].forward


def test_residual_triangle_saturated():
    inst = triangle()
    rg = residual_graph(inst, [1, 1, 1])
    assert all(not a.forward for a in rg.arcs)
    assert sorted(a.cost for a in rg.arcs) == [-1, 1, 1]


def test_residual_infeasible_raises():
    inst = single_edge()
    with pytest.raises(Infeasible):
        residual_graph(inst, [5])


def test_residual_roundtrip_augment():
    inst = build_instance(2, [(0, 1)], [0, 0], [1], [-3], [5])
    f = [1]
    rg = residual_graph(inst, f)
    fwd = next(a for a in rg.arcs if a.forward)
    f2 = [f[0] + 2]
    rg2 = residual_graph(inst, f2)
    fwd2 = next(a for a in rg2.arcs if a.forward)
    rev2 = next(a for a in rg2.arcs if not a.forward)
    assert fwd2.cap == fwd.cap - 2
    assert rev2.cap == (f[0] + 2) - inst.u_lo[0]


def test_cycle_decompose_triangle():
    inst = triangle()
    parts = cycle_decompose(inst, [1, 1, 1])
    assert len(parts) == 1
    cyc, coeff = parts[0]
    assert coeff == 1 and sorted(e for e, _ in cyc) == [0, 1, 2]


def test_cycle_decompose_zero():
    assert cycle_decompose(triangle(), [0, 0, 0]) == []


def test_cycle_decompose_not_circulation():
    with pytest.raises(NotACirculation):
        cycle_decompose(single_edge(), [1])


def test_cycle_decompose_nested_k4():
    # two nested cycles on K4 with coefficients 2 and 3
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 3)]
    inst = build_instance(4, edges, [0] * 4, [1] * 6, [-10] * 6, [10] * 6)
    f = [0] * 6
    for e in (0, 1, 2, 3):  # outer cycle coeff 2
        f[e] += 2
    # inner cycle 0->1, 1->3(e5), 3->0(e3) coeff 3
    f[0] += 3
    f[5] += 3
    f[3] += 3
    parts = cycle_decompose(inst, f)
    total = [0] * 6
    for cyc, coeff in parts:
        vec = cycle_vector(inst, cyc)
        total = [t + coeff * x for t, x in zip(total, vec)]
        assert coeff > 0
        assert all(x == 0 for x in divergence(inst, vec))
    assert total == f


def test_cycle_decompose_random_circulations():
    rng = random.Random(7)
    for _ in range(30):
        n = rng.randint(3, 8)
        m = rng.randint(3, 14)
        edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(m)]
        inst = build_instance(n, edges, [0] * n, [0] * m, [-9] * m, [9] * m)
        # random circulation by summing random fundamental loops
        f = [0] * m
        for _ in range(6):
            e = rng.randrange(m)
            u, v = edges[e]
            if u == v:
                f[e] += rng.randint(-3, 3)
        # add directed triangles if present
        parts = cycle_decompose(inst, f)
        total = [0] * m
        for cyc, coeff in parts:
            for e, s in cyc:
                total[e] += s * coeff
        assert total == f
