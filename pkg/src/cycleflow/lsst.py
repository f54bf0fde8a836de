"""Low-stretch spanning trees, rooted low-stretch decompositions (LSD) with
global stretch overestimates, and the multiplicative-weights distribution
over trees.

A spanning tree is built by repeated exponentially-shifted low-diameter
clustering over length classes (AKPW-style); the measured average stretch
constant is calibrated in the test suite rather than derived.

The LSD machinery follows the classic recipe: order tree edges by
congestion, build a heavy-light auxiliary tree whose ancestor closures are
branch-free, take nested root sets from the auxiliary-tree levels, and sum
the per-level forest stretches into one global overestimate per edge.
Updates only ever add roots, so the forest is decremental and the
overestimates never need to change.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import Disconnected, NotBranchFree


class Tree:
    """Rooted spanning tree with vectorized LCA and root-path length sums."""

    def __init__(self, n, parent, parent_eid, lengths_of_eid, root=0):
        self.n = n
        self.root = root
        self.parent = np.asarray(parent, dtype=np.int64)
        self.parent_eid = np.asarray(parent_eid, dtype=np.int64)
        self.depth = np.zeros(n, dtype=np.int64)
        self.dlen = np.zeros(n, dtype=np.float64)
        order = self._bfs_order()
        self.order = order
        for v in order:
            p = self.parent[v]
            if p >= 0:
                self.depth[v] = self.depth[p] + 1
                self.dlen[v] = self.dlen[p] + lengths_of_eid(self.parent_eid[v])
        logn = max(1, int(np.ceil(np.log2(max(2, n)))))
        up = np.zeros((logn, n), dtype=np.int64)
        par = self.parent.copy()
        par[par < 0] = np.arange(n)[par < 0]
        up[0] = par
        for j in range(1, logn):
            up[j] = up[j - 1][up[j - 1]]
        self.up = up

    def _bfs_order(self):
        children = [[] for _ in range(self.n)]
        for v in range(self.n):
            p = self.parent[v]
            if p >= 0:
                children[p].append(v)
        order = [self.root]
        i = 0
        while i < len(order):
            order.extend(children[order[i]])
            i += 1
        if len(order) != self.n:
            raise Disconnected("parent array does not span all vertices")
        return np.asarray(order, dtype=np.int64)

    def tree_eids(self):
        return [int(e) for e in self.parent_eid if e >= 0]

    def lca(self, u, v):
        """Vectorized lowest common ancestors of paired vertex arrays."""
        u = np.array(u, dtype=np.int64, copy=True)
        v = np.array(v, dtype=np.int64, copy=True)
        du = self.depth[u]
        dv = self.depth[v]
        swap = du < dv
        u[swap], v[swap] = v[swap], u[swap].copy()
        diff = np.abs(du - dv)
        for j in range(self.up.shape[0] - 1, -1, -1):
            mask = (diff >> j) & 1 == 1
            u[mask] = self.up[j][u[mask]]
        eq = u == v
        for j in range(self.up.shape[0] - 1, -1, -1):
            mask = ~eq & (self.up[j][u] != self.up[j][v])
            u[mask] = self.up[j][u[mask]]
            v[mask] = self.up[j][v[mask]]
        out = np.where(eq, u, self.up[0][u])
        return out

    def path_edges(self, u, v):
        """Edge ids on the u..v tree path (python walk)."""
        lca = int(self.lca([u], [v])[0])
        out = []
        x = u
        while x != lca:
            out.append(int(self.parent_eid[x]))
            x = int(self.parent[x])
        tail = []
        x = v
        while x != lca:
            tail.append(int(self.parent_eid[x]))
            x = int(self.parent[x])
        out.extend(reversed(tail))
        return out


@dataclass
class StretchTree:
    """A spanning tree plus the lengths it was built against."""

    tree: Tree
    lengths: np.ndarray  # per graph edge
    tails: np.ndarray
    heads: np.ndarray

    def stretches(self, eids=None):
        return tree_stretches(self.tree, self.tails, self.heads, self.lengths, eids)


class _Dsu:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.p[ra] = rb
        return True


def build_lsst(n, edges, lengths, weights=None, rng=None, root=0) -> StretchTree:
    """Spanning tree with empirically small weighted average stretch.

    Levels of exponentially-shifted multi-source Dijkstra cluster the graph
    over growing length scales; the arcs that first reach each cluster
    become tree edges. ``weights`` bias the effective lengths slightly so
    heavy edges are preferred as tree edges (this is what lets the
    multiplicative-weights loop steer successive trees).
    """
    rng = rng or random.Random(0)
    m = len(edges)
    if n == 1:
        return StretchTree(Tree(1, [-1], [-1], lambda e: 0.0, 0),
                           np.asarray(lengths, float), np.zeros(0, np.int64), np.zeros(0, np.int64))
    lengths = np.asarray(lengths, dtype=np.float64)
    if weights is None:
        w = np.ones(m)
    else:
        w = np.asarray(weights, dtype=np.float64)
        w = w / max(w.max(), 1e-300)
    eff = lengths * (1.0 - 0.25 * w)

    usable = [e for e in range(m) if edges[e][0] != edges[e][1]]
    if not usable:
        raise Disconnected("graph has no non-loop edges")
    lmin = float(min(eff[e] for e in usable))
    z = max(3.0, math.log2(n + 2))
    cls = {e: int(math.floor(math.log(max(eff[e] / lmin, 1.0), z))) for e in usable}
    max_cls = max(cls.values())

    dsu = _Dsu(n)
    tree_eids = []
    comp_count = n
    level = 0
    while comp_count > 1:
        radius = lmin * (z ** (level + 1))
        active = [e for e in usable if cls[e] <= min(level, max_cls)
                  and dsu.find(edges[e][0]) != dsu.find(edges[e][1])]
        if not active:
            if level > max_cls:
                raise Disconnected("graph is not connected")
            level += 1
            continue
        merged = _shifted_cluster_round(n, edges, eff, active, dsu, tree_eids, rng, radius)
        if merged == 0:
            # Force progress with one Boruvka pass over the active edges.
            best = {}
            for e in active:
                u, v = edges[e]
                ru, rv = dsu.find(u), dsu.find(v)
                if ru == rv:
                    continue
                for r in (ru, rv):
                    if r not in best or eff[e] < eff[best[r]]:
                        best[r] = e
            for e in set(best.values()):
                u, v = edges[e]
                if dsu.union(u, v):
                    tree_eids.append(e)
                    comp_count -= 1
        else:
            comp_count -= merged
        if level <= max_cls:
            level += 1
    parent = [-1] * n
    parent_eid = [-1] * n
    adj = [[] for _ in range(n)]
    for e in tree_eids:
        u, v = edges[e]
        adj[u].append((v, e))
        adj[v].append((u, e))
    seen = [False] * n
    seen[root] = True
    queue = [root]
    while queue:
        x = queue.pop(0)
        for y, e in adj[x]:
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                parent_eid[y] = e
                queue.append(y)
    if not all(seen):
        raise Disconnected("graph is not connected")
    tree = Tree(n, parent, parent_eid, lambda e: float(lengths[e]), root)
    tails = np.asarray([u for u, _ in edges], dtype=np.int64)
    heads = np.asarray([v for _, v in edges], dtype=np.int64)
    return StretchTree(tree, lengths, tails, heads)


def _shifted_cluster_round(n, edges, eff, active, dsu, tree_eids, rng, radius):
    """One round of shifted multi-source Dijkstra over the contracted graph."""
    import heapq

    comps = sorted({dsu.find(edges[e][0]) for e in active} | {dsu.find(edges[e][1]) for e in active})
    adj = {c: [] for c in comps}
    for e in active:
        u, v = edges[e]
        ru, rv = dsu.find(u), dsu.find(v)
        adj[ru].append((rv, e))
        adj[rv].append((ru, e))
    beta = radius / (2.0 * math.log(len(comps) + 2))
    heap = []
    for c in comps:
        shift = rng.expovariate(1.0 / beta) if beta > 0 else 0.0
        heapq.heappush(heap, (-min(shift, 4 * radius), rng.random(), c, c, -1))
    owner = {}
    via = {}
    while heap:
        dist, _, c, src, eid = heapq.heappop(heap)
        if c in owner:
            continue
        owner[c] = src
        via[c] = eid
        for c2, e2 in adj[c]:
            if c2 not in owner and dist + eff[e2] <= radius:
                heapq.heappush(heap, (dist + eff[e2], rng.random(), c2, src, e2))
    merged = 0
    for c, eid in via.items():
        if eid < 0:
            continue
        u, v = edges[eid]
        if dsu.union(u, v):
            tree_eids.append(eid)
            merged += 1
    return merged


def tree_stretches(tree: Tree, tails, heads, lengths, eids=None):
    """Vectorized stretch 1 + len(T[u,v]) / len(e); tree edges get 2."""
    if eids is None:
        u = tails
        v = heads
        le = lengths
    else:
        eids = np.asarray(eids, dtype=np.int64)
        u = tails[eids]
        v = heads[eids]
        le = lengths[eids]
    lca = tree.lca(u, v)
    path = tree.dlen[u] + tree.dlen[v] - 2 * tree.dlen[lca]
    return 1.0 + path / le


@dataclass
class Forest:
    """A rooted forest F = F_T(R, pi): the tree minus one min-order edge per
    adjacent root pair, each component rooted at its unique root."""

    tree: Tree
    deleted: set
    comp: np.ndarray       # component label per vertex (a vertex id)
    comp_root: np.ndarray  # designated root per vertex

    def n_components(self):
        return len(set(self.comp.tolist()))


def forest_from_roots(tree: Tree, roots, pi_rank, check_branch_free=True) -> Forest:
    """Delete the smallest-``pi`` tree edge on every path between adjacent
    roots. ``pi_rank[eid]`` must be a total order on tree edges."""
    roots = set(int(r) for r in roots)
    if not roots:
        raise ValueError("root set must be nonempty")
    if check_branch_free and not is_branch_free(tree, roots):
        raise NotBranchFree("root set is not closed under tree LCAs")
    deleted = set()
    # DFS from tree root carrying (seen a root yet?, argmin-pi edge since).
    children = [[] for _ in range(tree.n)]
    for v in range(tree.n):
        p = tree.parent[v]
        if p >= 0:
            children[p].append(v)
    stack = [(tree.root, False, -1)]
    # state per stack entry: (vertex, have_root_above, best_eid)
    while stack:
        v, have, best = stack.pop()
        if v in roots:
            if have and best >= 0:
                deleted.add(best)
            have, best = True, -1
        for c in children[v]:
            e = int(tree.parent_eid[c])
            nbest = e if (best < 0 or pi_rank[e] < pi_rank[best]) else best
            stack.append((c, have, nbest))
    return _forest_from_deleted(tree, roots, deleted)


def _forest_from_deleted(tree: Tree, roots, deleted) -> Forest:
    comp = np.zeros(tree.n, dtype=np.int64)
    for v in tree.order:
        p = tree.parent[v]
        if p < 0 or int(tree.parent_eid[v]) in deleted:
            comp[v] = v
        else:
            comp[v] = comp[p]
    comp_root = np.full(tree.n, -1, dtype=np.int64)
    root_of = {}
    for r in roots:
        c = int(comp[r])
        if c in root_of:
            raise AssertionError("two roots in one forest component")
        root_of[c] = r
    for v in range(tree.n):
        c = int(comp[v])
        if c in root_of:
            comp_root[v] = root_of[c]
    if (comp_root < 0).any():
        raise AssertionError("forest component without a root")
    return Forest(tree, deleted, comp, comp_root)


def is_branch_free(tree: Tree, roots) -> bool:
    """Closure under pairwise LCA, checked via DFS-consecutive pairs."""
    dfs = tree_dfs_index(tree)
    rs = sorted(roots, key=lambda v: dfs[v])
    if len(rs) <= 1:
        return True
    idx = np.asarray(rs[:-1], dtype=np.int64)
    nxt = np.asarray(rs[1:], dtype=np.int64)
    lcas = tree.lca(idx, nxt)
    return all(int(x) in roots for x in lcas)


def tree_dfs_index(tree: Tree):
    cached = getattr(tree, "_dfs_index", None)
    if cached is not None:
        return cached
    children = [[] for _ in range(tree.n)]
    for v in range(tree.n):
        p = tree.parent[v]
        if p >= 0:
            children[p].append(v)
    order = np.zeros(tree.n, dtype=np.int64)
    stack = [tree.root]
    i = 0
    while stack:
        v = stack.pop()
        order[v] = i
        i += 1
        stack.extend(children[v])
    tree._dfs_index = order
    return order


def forest_stretches(forest: Forest, tails, heads, lengths, eids=None):
    """Vectorized forest stretch per the rooted-forest definition: same
    component uses the tree path, different components use both root
    paths."""
    tree = forest.tree
    if eids is None:
        u, v, le = tails, heads, lengths
    else:
        eids = np.asarray(eids, dtype=np.int64)
        u, v, le = tails[eids], heads[eids], lengths[eids]
    same = forest.comp[u] == forest.comp[v]
    lca_uv = tree.lca(u, v)
    path_same = tree.dlen[u] + tree.dlen[v] - 2 * tree.dlen[lca_uv]
    ru = forest.comp_root[u]
    rv = forest.comp_root[v]
    pu = tree.dlen[u] + tree.dlen[ru] - 2 * tree.dlen[tree.lca(u, ru)]
    pv = tree.dlen[v] + tree.dlen[rv] - 2 * tree.dlen[tree.lca(v, rv)]
    return 1.0 + np.where(same, path_same, pu + pv) / le


# ----------------------------------------------------------------------
# Heavy-light auxiliary tree.


@dataclass
class AuxTree:
    """Heavy chains replaced by depth-keyed balanced BSTs; ancestor
    closures in this tree are branch-free in the original tree."""

    parent: np.ndarray
    depth: np.ndarray

    @property
    def height(self):
        return int(self.depth.max())

    def closure(self, vs):
        out = set()
        for v in vs:
            v = int(v)
            while v >= 0 and v not in out:
                out.add(v)
                v = int(self.parent[v])
        return out


def heavy_light_aux_tree(tree: Tree) -> AuxTree:
    n = tree.n
    size = np.ones(n, dtype=np.int64)
    for v in tree.order[::-1]:
        p = tree.parent[v]
        if p >= 0:
            size[p] += size[v]
    heavy = np.full(n, -1, dtype=np.int64)
    best = np.zeros(n, dtype=np.int64)
    for v in range(n):
        p = tree.parent[v]
        if p >= 0 and size[v] > best[p]:
            best[p] = size[v]
            heavy[p] = v
    th_parent = np.full(n, -2, dtype=np.int64)
    # Chains: start at vertices that are not the heavy child of their parent.
    for head in tree.order:
        p = tree.parent[head]
        if p >= 0 and heavy[p] == int(head):
            continue
        chain = [int(head)]
        x = int(head)
        while heavy[x] >= 0:
            x = int(heavy[x])
            chain.append(x)
        bst_root = _build_depth_bst(chain, th_parent)
        th_parent[bst_root] = int(p) if p >= 0 else -1
    depth = np.zeros(n, dtype=np.int64)
    # Fill depths by walking up (memoized via topological order over th_parent).
    def get_depth(v):
        trail = []
        while v >= 0 and th_parent[v] != -2 and depth[v] == 0 and th_parent[v] != -1:
            trail.append(v)
            v = int(th_parent[v])
        base = 0 if v < 0 or th_parent[v] == -1 else depth[v]
        if v >= 0 and th_parent[v] == -1:
            base = 0
        for x in reversed(trail):
            base += 1
            depth[x] = base
        return None

    for v in range(n):
        get_depth(v)
    return AuxTree(th_parent, depth)


def _build_depth_bst(chain, th_parent):
    """Balanced BST over a heavy chain (sorted by depth already); the
    minimum-depth vertex becomes the subtree root. Returns the root."""
    head = chain[0]
    rest = chain[1:]

    def build(lo, hi):  # rest[lo:hi] -> root or -1
        if lo >= hi:
            return -1
        mid = (lo + hi) // 2
        r = rest[mid]
        lc = build(lo, mid)
        rc = build(mid + 1, hi)
        if lc >= 0:
            th_parent[lc] = r
        if rc >= 0:
            th_parent[rc] = r
        return r

    sub = build(0, len(rest))
    if sub >= 0:
        th_parent[sub] = head
    return head


# ----------------------------------------------------------------------
# Congestion ordering.


def congestion_order(tree: Tree, tails, heads, lengths):
    """Per tree edge, the sum of 1/len(e') over graph edges e' routed over
    it; returns (cong per eid dict, pi_rank array over all eids) with ties
    broken by edge id."""
    n = tree.n
    m = len(tails)
    node_w = np.zeros(n, dtype=np.float64)
    u = np.asarray(tails)
    v = np.asarray(heads)
    w = 1.0 / np.asarray(lengths, dtype=np.float64)
    lca = tree.lca(u, v)
    np.add.at(node_w, u, w)
    np.add.at(node_w, v, w)
    np.add.at(node_w, lca, -2.0 * w)
    sub = node_w.copy()
    for x in tree.order[::-1]:
        p = tree.parent[x]
        if p >= 0:
            sub[p] += sub[x]
    cong = {}
    for x in range(n):
        e = int(tree.parent_eid[x])
        if e >= 0:
            cong[e] = float(sub[x])
    ranked = sorted(cong, key=lambda e: (cong[e], e))
    pi_rank = np.full(m, m + 1, dtype=np.int64)
    for r, e in enumerate(ranked):
        pi_rank[e] = r
    return cong, pi_rank


# ----------------------------------------------------------------------
# Tree decomposition (vertex pieces with at most one boundary vertex).


def tree_decompose(tree: Tree, adj_weight, budget):
    """Greedy bottom-up decomposition: cut a vertex once the accumulated
    adjacent weight below it reaches ``budget``. Returns (cut set, pieces)
    where each piece is (vertex tuple, top cut vertex)."""
    n = tree.n
    acc = np.asarray(adj_weight, dtype=np.float64).copy()
    cuts = set()
    for x in tree.order[::-1]:
        if acc[x] >= budget and x != tree.root:
            cuts.add(int(x))
            acc[x] = 0.0
            continue
        p = tree.parent[x]
        if p >= 0:
            acc[p] += acc[x]
    cuts.add(int(tree.root))
    # Pieces: components of T minus cuts, augmented with their top cut.
    piece_id = np.full(n, -1, dtype=np.int64)
    tops = {}
    next_piece = 0
    for x in tree.order:
        if int(x) in cuts:
            continue
        p = int(tree.parent[x])
        if p in cuts or piece_id[p] < 0:
            piece_id[x] = next_piece
            tops[next_piece] = p
            next_piece += 1
        else:
            piece_id[x] = piece_id[p]
    pieces = [[] for _ in range(next_piece)]
    for x in range(n):
        if piece_id[x] >= 0:
            pieces[piece_id[x]].append(int(x))
    out = [(tuple(vs), tops[i]) for i, vs in enumerate(pieces)]
    return cuts, out


# ----------------------------------------------------------------------
# The LSD itself.


@dataclass
class Lsd:
    """Static tree + decremental rooted forest + global stretch
    overestimates, per the dynamic low-stretch decomposition recipe."""

    stree: StretchTree
    aux: AuxTree
    pi_rank: np.ndarray
    k: int
    roots: set
    forest: Forest
    str_over: dict          # eid -> overestimate, stable once assigned
    pieces: list            # [(vertices, top cut or None)]
    alive: set              # current (non-deleted) edge ids
    extra_edges: dict = field(default_factory=dict)  # inserted eid -> (u, v, len)
    initial_components: int = 0
    update_count: int = 0

    @property
    def tree(self):
        return self.stree.tree

    def edge_endpoints(self, eid):
        if eid in self.extra_edges:
            u, v, _ = self.extra_edges[eid]
            return u, v
        return int(self.stree.tails[eid]), int(self.stree.heads[eid])

    def edge_length(self, eid):
        if eid in self.extra_edges:
            return self.extra_edges[eid][2]
        return float(self.stree.lengths[eid])

    def current_forest_stretch(self, eid):
        u, v = self.edge_endpoints(eid)
        le = self.edge_length(eid)
        t = self.tree
        f = self.forest
        if f.comp[u] == f.comp[v]:
            lca = int(t.lca([u], [v])[0])
            path = t.dlen[u] + t.dlen[v] - 2 * t.dlen[lca]
        else:
            ru, rv = int(f.comp_root[u]), int(f.comp_root[v])
            path = (t.dlen[u] + t.dlen[ru] - 2 * t.dlen[int(t.lca([u], [ru])[0])]
                    + t.dlen[v] + t.dlen[rv] - 2 * t.dlen[int(t.lca([v], [rv])[0])])
        return 1.0 + path / le


def init_lsd(n, edges, lengths, weights=None, k=4, rng=None) -> Lsd:
    """Build the decomposition: LSST, congestion order, auxiliary tree,
    per-level forests summed into stretch overestimates, initial roots from
    the tree decomposition plus endpoints of overly stretched edges."""
    rng = rng or random.Random(0)
    stree = build_lsst(n, edges, lengths, weights, rng)
    tree = stree.tree
    m = len(edges)
    aux = heavy_light_aux_tree(tree)
    _, pi_rank = congestion_order(tree, stree.tails, stree.heads, stree.lengths)
    log2n = math.log2(n + 2)

    # Nested level forests from auxiliary-tree depth prefixes.
    height = aux.height
    str_sum = np.zeros(m, dtype=np.float64)
    for i in range(height + 1):
        roots_i = {int(v) for v in np.nonzero(aux.depth <= i)[0]}
        forest_i = forest_from_roots(tree, roots_i, pi_rank, check_branch_free=False)
        str_sum += forest_stretches(forest_i, stree.tails, stree.heads, stree.lengths)
    str_over_arr = 2.0 * str_sum

    # Cap so that (by Markov) at most m/(4 k log^2 n) edges are capped;
    # capped edges keep both endpoints rooted forever, so their true
    # forest stretch is 1 and the overestimate 2 stays valid.
    mean_str = float(np.mean(str_over_arr)) if m else 1.0
    cap = max(16.0, 4.0 * k * log2n * log2n * mean_str)
    capped = np.nonzero(str_over_arr >= cap)[0]

    deg = np.zeros(n, dtype=np.float64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    budget = max(2.0, float(2 * m) * max(1, k) * log2n * log2n / max(1, m))
    cuts, pieces = tree_decompose(tree, deg, budget)

    r0 = set(cuts)
    for e in capped:
        u, v = edges[int(e)]
        r0.add(int(u))
        r0.add(int(v))
        str_over_arr[int(e)] = 2.0
    roots = aux.closure(r0)
    forest = forest_from_roots(tree, roots, pi_rank, check_branch_free=False)
    # Refine pieces by forest connectivity.
    refined = []
    for vs, top in pieces:
        bycomp = {}
        for v in vs:
            bycomp.setdefault(int(forest.comp[v]), []).append(v)
        for sub in bycomp.values():
            refined.append((tuple(sub), top))
    str_over = {e: float(str_over_arr[e]) for e in range(m)}
    return Lsd(
        stree=stree,
        aux=aux,
        pi_rank=pi_rank,
        k=k,
        roots=set(int(r) for r in roots),
        forest=forest,
        str_over=str_over,
        pieces=refined,
        alive=set(range(m)),
        initial_components=forest.n_components(),
    )


def lsd_apply_update(lsd: Lsd, op, *, eid=None, endpoints=None, length=None):
    """Apply ``insert`` or ``delete``; both endpoints' auxiliary-tree
    ancestor closures become roots, keeping every overestimate valid.

    Returns (newly added roots, newly deleted forest edges)."""
    if op == "insert":
        if eid is None or endpoints is None or length is None:
            raise ValueError("insert needs eid, endpoints and length")
        if eid in lsd.str_over:
            raise ValueError(f"edge id {eid} already present")
        u, v = endpoints
        lsd.extra_edges[eid] = (int(u), int(v), float(length))
        lsd.alive.add(eid)
        lsd.str_over[eid] = 1.0
    elif op == "delete":
        if eid is None or eid not in lsd.alive:
            from .errors import NoSuchEdge

            raise NoSuchEdge(str(eid))
        u, v = lsd.edge_endpoints(eid)
        lsd.alive.discard(eid)
    else:
        raise ValueError(f"unknown update {op!r}")
    new_roots = lsd.aux.closure([u, v]) - lsd.roots
    lsd.roots |= new_roots
    old_deleted = set(lsd.forest.deleted)
    lsd.forest = forest_from_roots(lsd.tree, lsd.roots, lsd.pi_rank, check_branch_free=False)
    assert old_deleted <= lsd.forest.deleted, "forest was not decremental"
    lsd.update_count += 1
    # Refine pieces by the new forest components.
    refined = []
    for vs, top in lsd.pieces:
        bycomp = {}
        for x in vs:
            bycomp.setdefault(int(lsd.forest.comp[x]), []).append(x)
        refined.extend((tuple(sub), top) for sub in bycomp.values())
    lsd.pieces = refined
    return new_roots, lsd.forest.deleted - old_deleted


# ----------------------------------------------------------------------
# Multiplicative weights distribution over trees.


@dataclass
class MwuFamily:
    lsds: list
    t: int
    w_emp: float
    max_mean_stretch: float
    bound: float
    certified: bool

    def sample(self, rng):
        return self.lsds[rng.randrange(len(self.lsds))]

    def mean_stretch_overestimates(self, eid):
        return sum(l.str_over[eid] for l in self.lsds) / len(self.lsds)


def mwu_tree_distribution(n, edges, lengths, k=4, rng=None, rounds=None, certify=True) -> MwuFamily:
    """Build t = Theta~(k) LSDs with multiplicative-weight updates
    v <- v * exp(str_over / t) and certify the regret bound
    ``max_e mean str_over <= 2 W_emp + ln m``.

    The bound's derivation needs every ``str_over / t <= ~1.25``; when
    ``certify`` is set, t is grown adaptively (with restarts) until that
    holds.
    """
    rng = rng or random.Random(0)
    m = len(edges)
    t = rounds if rounds is not None else max(8, 2 * k)
    for _restart in range(6):
        seed = rng.random()
        local = random.Random(seed)
        logv = np.zeros(m)
        lsds = []
        w_emp = 0.0
        cum = np.zeros(m)
        ok = True
        for i in range(t):
            logw = logv - logv.max()
            w = np.exp(logw)
            w = w / w.sum()
            lsd = init_lsd(n, edges, lengths, weights=w, k=k, rng=local)
            so = np.asarray([lsd.str_over[e] for e in range(m)])
            w_emp = max(w_emp, float(np.dot(w, so)))
            cum += so
            logv += so / t
            lsds.append(lsd)
            if certify and so.max() > 1.25 * t:
                ok = False
                needed = int(math.ceil(so.max() / 1.2))
                t = max(t * 2, needed)
                break
        if ok:
            break
    max_mean = float(cum.max() / t) if m else 0.0
    bound = 2.0 * w_emp + math.log(max(m, 2))
    return MwuFamily(lsds, t, w_emp, max_mean, bound, certified=certify and ok)
