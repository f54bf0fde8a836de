"""Seeded random instance generators used by tests and the benchmark CLI."""

from __future__ import annotations

import random

from .graph import FlowInstance, build_instance, divergence


def random_instance(rng: random.Random, n_max=8, m_max=12, U=4, C=10, n=None, m=None,
                    feasible=True, allow_parallel=True, allow_self_loops=False) -> FlowInstance:
    """Random connected-ish multigraph instance with a guaranteed feasible
    flow (demands are the divergence of a random in-box flow)."""
    n = n if n is not None else rng.randint(2, n_max)
    m_min = n - 1
    m = m if m is not None else rng.randint(m_min, max(m_min, m_max))
    edges = []
    # random spanning tree for connectivity
    perm = list(range(n))
    rng.shuffle(perm)
    for i in range(1, n):
        u = perm[rng.randrange(i)]
        v = perm[i]
        if rng.random() < 0.5:
            u, v = v, u
        edges.append((u, v))
    while len(edges) < m:
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v and not allow_self_loops:
            continue
        if not allow_parallel and ((u, v) in edges or (v, u) in edges):
            continue
        edges.append((u, v))
    mm = len(edges)
    u_lo, u_hi = [], []
    for _ in range(mm):
        a = rng.randint(-U, U)
        b = rng.randint(-U, U)
        lo, hi = min(a, b), max(a, b)
        u_lo.append(lo)
        u_hi.append(hi)
    cost = [rng.randint(-C, C) for _ in range(mm)]
    if feasible:
        f0 = [rng.randint(u_lo[e], u_hi[e]) for e in range(mm)]
        tmp = build_instance(n, edges, [0] * n, cost, u_lo, u_hi)
        d = divergence(tmp, f0)
    else:
        d = [0] * n
        for _ in range(n):
            i, j = rng.randrange(n), rng.randrange(n)
            amt = rng.randint(0, U)
            d[i] += amt
            d[j] -= amt
    return build_instance(n, edges, d, cost, u_lo, u_hi)


def random_graph(rng: random.Random, n, m, max_len=4.0):
    """Connected undirected multigraph as (n, edge list, lengths)."""
    edges = []
    perm = list(range(n))
    rng.shuffle(perm)
    for i in range(1, n):
        edges.append((perm[rng.randrange(i)], perm[i]))
    while len(edges) < m:
        u, v = rng.randrange(n), rng.randrange(n)
        if u != v:
            edges.append((u, v))
    lengths = [rng.uniform(0.05, max_len) for _ in edges]
    return n, edges, lengths


def random_gradient_length(rng: random.Random, m, g_scale=5.0):
    g = [rng.uniform(-g_scale, g_scale) for _ in range(m)]
    l = [rng.uniform(0.05, 3.0) for _ in range(m)]
    return g, l
