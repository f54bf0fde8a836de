"""Approximate undirected min-ratio cycles from batches of sampled trees,
plus an exact parametric oracle.

Per tree, the best fundamental cycle ``argmin_e <g, cyc(e)> / ||l o
cyc(e)||_1`` is found from vectorized root-prefix sums: the cycle gradient
of edge e = (u,v) is ``g_e + D[u] - D[v]`` where D is the signed gradient
sum from the root, and the cycle length is ``l_e + pathlen(u, v)``.
Caches only depend on the tree structure and the current (g, l) values on
tree edges, so they are rebuilt lazily.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .dyntree import DynTree
from .lsst import Lsd, Tree, init_lsd, mwu_tree_distribution

RATIO_EPS = 1e-300


@dataclass
class CycleRef:
    """One fundamental tree cycle: the off-tree edge plus the tree path
    between its endpoints, oriented so the gradient is non-positive."""

    tree_index: int
    eid: int
    sign: int
    grad: float     # <g, cycle> (<= 0 by orientation)
    length: float   # ||l o cycle||_1
    ratio: float

    def edge_list(self, batch):
        """Materialize [(edge_id, coefficient)] for the oriented cycle."""
        slot = batch.slots[self.tree_index]
        u, v = batch.tails[self.eid], batch.heads[self.eid]
        out = [(self.eid, self.sign)]
        if u == v:
            return out
        tree = slot.tree
        lca = int(tree.lca([u], [v])[0])
        x = int(v)  # walk head -> lca -> tail, i.e. the path closing u->v
        while x != lca:
            pe = int(tree.parent_eid[x])
            step = 1 if batch.tails[pe] == x else -1
            out.append((pe, self.sign * step))
            x = int(tree.parent[x])
        up = []
        x = int(u)
        while x != lca:
            pe = int(tree.parent_eid[x])
            step = -1 if batch.tails[pe] == x else 1
            up.append((pe, self.sign * step))
            x = int(tree.parent[x])
        out.extend(reversed(up))
        return out


class TreeSlot:
    """One sampled tree bound to a dynamic-tree structure and ratio caches."""

    def __init__(self, index, lsd: Lsd, batch, eps):
        self.index = index
        self.lsd = lsd
        self.tree: Tree = lsd.tree
        self.tree_eids = frozenset(self.tree.tree_eids())
        self.batch = batch
        self.dirty = True
        self._lca = None
        self.cycG = None
        self.cycL = None
        self.mask = None
        self.dyn = DynTree(batch.n, eps=eps)
        for eid in self.tree_eids:
            u, v = batch.tails[eid], batch.heads[eid]
            self.dyn.link(int(u), int(v), float(batch.gall[eid]), float(batch.lall[eid]), eid=eid)
        self._loose = set()

    def ensure_cache(self):
        if not self.dirty:
            return
        batch = self.batch
        tree = self.tree
        n = batch.n
        D = np.zeros(n)
        L = np.zeros(n)
        gall, lall = batch.gall, batch.lall
        for x in tree.order:
            p = tree.parent[x]
            if p < 0:
                continue
            pe = int(tree.parent_eid[x])
            s = 1.0 if batch.tails[pe] == int(p) else -1.0
            D[x] = D[p] + s * gall[pe]
            L[x] = L[p] + lall[pe]
        if self._lca is None:
            self._lca = tree.lca(batch.tails, batch.heads)
        lca = self._lca
        pathL = L[batch.tails] + L[batch.heads] - 2 * L[lca]
        self.cycG = gall + D[batch.tails] - D[batch.heads]
        self.cycL = lall + pathL
        mask = np.ones(batch.m, dtype=bool)
        for eid in self.tree_eids:
            mask[eid] = False
        self.mask = mask
        self.dirty = False

    def best_cycle(self):
        """Best fundamental cycle of this tree, or None when the graph has
        no off-tree edge."""
        self.ensure_cache()
        if not self.mask.any():
            return None
        ratios = np.where(self.mask, -np.abs(self.cycG) / np.maximum(self.cycL, RATIO_EPS), np.inf)
        e = int(np.argmin(ratios))
        if not np.isfinite(ratios[e]):
            return None
        cg = float(self.cycG[e])
        sign = -1 if cg > 0 else 1
        grad = -abs(cg)
        length = float(self.cycL[e])
        return CycleRef(self.index, e, sign, grad, length, grad / max(length, RATIO_EPS))

    def add_cycle_flow(self, cyc: CycleRef, eta):
        """Record eta units around the cycle in the dynamic tree (tree path
        add plus a loose-edge update for the off-tree edge)."""
        batch = self.batch
        e = cyc.eid
        u, v = int(batch.tails[e]), int(batch.heads[e])
        if e not in self._loose:
            self.dyn.add_loose_edge(e, float(batch.gall[e]), float(batch.lall[e]))
            self._loose.add(e)
        self.dyn.add_edge_flow(e, cyc.sign * eta)
        if u != v:
            # tree path from v back to u closes the cycle
            self.dyn.add_flow_on_path(v, u, cyc.sign * eta)

    def set_edge_value(self, eid, g, ln):
        if eid in self.tree_eids:
            self.dyn.set_gradient(eid, g)
            self.dyn.set_length(eid, ln)
            self.dirty = True
        elif eid in self._loose:
            self.dyn.set_gradient(eid, g)
            self.dyn.set_length(eid, ln)


class TreeBatch:
    """B spanning trees sampled from a multiplicative-weights family, each
    bound to a dynamic tree, answering min-ratio-cycle queries."""

    def __init__(self, n, edges, gall, lall, B=None, eps=1e-6, rng=None, k=None,
                 mwu_rounds=None):
        self.n = n
        self.m = len(edges)
        self.edges = list(edges)
        self.tails = np.asarray([u for u, _ in edges], dtype=np.int64)
        self.heads = np.asarray([v for _, v in edges], dtype=np.int64)
        self.gall = np.asarray(gall, dtype=np.float64).copy()
        self.lall = np.asarray(lall, dtype=np.float64).copy()
        self.rng = rng or random.Random(0)
        self.eps = eps
        self.B = B if B is not None else max(1, math.ceil(math.log2(max(2, n))))
        self.k = k if k is not None else max(2, round(self.m ** 0.5 / 2))
        self.mwu_rounds = mwu_rounds if mwu_rounds is not None else max(4, 2 * self.B)
        self.epoch = 0
        self.family = None
        self.slots = []
        self.rebuild(0)

    def rebuild(self, level):
        """Resample trees ``level .. B-1``; level 0 also recomputes the
        multiplicative-weights family against the current lengths."""
        self.epoch += 1
        if level <= 0 or self.family is None:
            self.family = mwu_tree_distribution(
                self.n, self.edges, np.maximum(self.lall, 1e-300), k=self.k,
                rng=self.rng, rounds=self.mwu_rounds, certify=False)
            level = 0
        del self.slots[level:]
        while len(self.slots) < self.B:
            lsd = self.family.sample(self.rng)
            self.slots.append(TreeSlot(len(self.slots), lsd, self, self.eps))

    def set_edge_values(self, eids, g_new, l_new):
        for eid, g, ln in zip(eids, g_new, l_new):
            self.gall[eid] = g
            self.lall[eid] = ln
            for slot in self.slots:
                slot.set_edge_value(eid, g, ln)

    def refresh_all_gradients(self, gall):
        self.gall[:] = gall
        for slot in self.slots:
            slot.dirty = True

    def refresh_all(self, gall, lall):
        self.gall[:] = gall
        self.lall[:] = lall
        for slot in self.slots:
            slot.dirty = True
            for eid in slot.tree_eids:
                slot.dyn.set_gradient(eid, float(gall[eid]))
                slot.dyn.set_length(eid, float(lall[eid]))

    def detect_union(self):
        out = set()
        for slot in self.slots:
            out |= slot.dyn.detect()
        return out

    def best(self):
        """Best cycle across the batch (None when the graph is a forest)."""
        best = None
        for slot in self.slots:
            cand = slot.best_cycle()
            if cand is None:
                continue
            if best is None or cand.ratio < best.ratio:
                best = cand
        return best


def best_tree_cycle(slot: TreeSlot) -> CycleRef | None:
    return slot.best_cycle()


def solve_mrc(batch: TreeBatch) -> CycleRef | None:
    return batch.best()


def cycle_vector_of(batch: TreeBatch, cyc: CycleRef):
    vec = np.zeros(batch.m)
    for e, s in cyc.edge_list(batch):
        vec[e] += s
    return vec


# ----------------------------------------------------------------------
# Exact oracle: parametric negative-cycle search.


def exact_min_ratio_cycle(n, edges, g, lens, iters=64, trace=None):
    """Optimal ratio min over circulations of <g, D> / ||l o D||_1 via
    binary search on lambda: the ratio is < -lambda iff the bidirected
    graph with arc costs g_e + lambda*l_e forward and -g_e + lambda*l_e
    backward has a negative cycle.

    Intended for n up to a few hundred. Returns (cycle, ratio) where the
    cycle is [(edge_id, sign), ...]; ratio 0 and [] when no cycle has
    negative gradient.
    """
    m = len(edges)
    g = np.asarray(g, dtype=np.float64)
    lens = np.asarray(lens, dtype=np.float64)
    tails = np.asarray([u for u, _ in edges], dtype=np.int64)
    heads = np.asarray([v for _, v in edges], dtype=np.int64)
    au = np.concatenate([tails, heads])
    av = np.concatenate([heads, tails])
    base = np.concatenate([g, -g])
    lns = np.concatenate([lens, lens])

    def has_negative_cycle(lam):
        w = base + lam * lns
        dist = np.zeros(n)
        for _ in range(n):
            cand = dist[au] + w
            nd = dist.copy()
            np.minimum.at(nd, av, cand)
            if np.allclose(nd, dist, rtol=0, atol=0):
                return False
            dist = nd
        cand = dist[au] + w
        nd = dist.copy()
        np.minimum.at(nd, av, cand)
        return bool((nd < dist - 1e-15).any())

    if not has_negative_cycle(0.0):
        if trace is not None:
            trace.append((0.0, False))
        return [], 0.0
    if trace is not None:
        trace.append((0.0, True))
    hi = float(np.max(np.abs(g)) / max(np.min(lens), RATIO_EPS)) + 1.0
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        found = has_negative_cycle(mid)
        if trace is not None:
            trace.append((mid, found))
        if found:
            lo = mid
        else:
            hi = mid
    cycle = _extract_negative_cycle(n, au, av, base + lo * lns, m)
    num = sum(s * g[e] for e, s in cycle)
    den = sum(abs(s) * lens[e] for e, s in cycle)
    return cycle, float(num / den)


def _extract_negative_cycle(n, au, av, w, m):
    """Bellman-Ford predecessor walk; arcs i < m are edge i forward, arcs
    i >= m are edge i-m backward."""
    dist = [0.0] * n
    pred = [-1] * n
    arcs = list(range(len(au)))
    last_updated = -1
    for _ in range(n + 1):
        changed = False
        for a in arcs:
            u, v = int(au[a]), int(av[a])
            nd = dist[u] + float(w[a])
            if nd < dist[v] - 1e-18:
                dist[v] = nd
                pred[v] = a
                changed = True
                last_updated = v
        if not changed:
            break
    if last_updated < 0:
        return []
    x = last_updated
    for _ in range(n):
        x = int(au[pred[x]])
    cyc = []
    start = x
    while True:
        a = pred[x]
        e = a if a < m else a - m
        s = 1 if a < m else -1
        cyc.append((int(e), s))
        x = int(au[a])
        if x == start:
            break
    cyc.reverse()
    return cyc
