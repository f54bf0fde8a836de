"""Splay-based link-cut trees with gradient/length path sums, signed path
flow accumulation, and the threshold trigger ``detect``.

Each graph edge is represented by its own splay node sitting between its
two endpoint nodes in the represented tree, so per-edge values (gradient,
length, flow, detect accumulator) live on edge nodes and path aggregates
are plain subtree aggregates.

Signed quantities (gradient contribution, flow) are stored relative to the
node's current position along its preferred path; a lazy reversal tag
negates them and flips an ``along`` bit that remembers whether the current
direction agrees with the edge's canonical tail->head orientation.

The detect accumulator of an edge stores ``sum |flow updates| - eps/len``
so the trigger ``len * sum |updates| >= eps`` is a sign test; a subtree-max
aggregate plus a hot set makes ``detect()`` roughly output-sensitive.

Edges that are not currently part of the forest can be registered as
*loose* edges: their flow/detect accumulators are kept in plain dicts with
identical semantics. The main solver uses this for the one off-tree edge
of each chosen fundamental cycle.
"""

from __future__ import annotations

from .errors import NoSuchEdge, NotConnected, WouldCreateCycle

NEG_INF = float("-inf")


class _Node:
    __slots__ = (
        "left", "right", "parent", "rev",
        "is_edge", "eid", "along",
        "g", "gsum", "ln", "lsum",
        "fl", "fadd", "dv", "dmax", "dadd",
    )

    def __init__(self, is_edge, eid=-1):
        self.left = None
        self.right = None
        self.parent = None
        self.rev = False
        self.is_edge = is_edge
        self.eid = eid
        self.along = True
        self.g = 0.0
        self.gsum = 0.0
        self.ln = 0.0
        self.lsum = 0.0
        self.fl = 0.0
        self.fadd = 0.0
        self.dv = NEG_INF if not is_edge else 0.0
        self.dmax = NEG_INF if not is_edge else 0.0
        self.dadd = 0.0


def _apply_rev(x):
    if x is None:
        return
    x.rev = not x.rev
    x.left, x.right = x.right, x.left
    x.g = -x.g
    x.gsum = -x.gsum
    x.fl = -x.fl
    x.fadd = -x.fadd
    if x.is_edge:
        x.along = not x.along


def _apply_fadd(x, v):
    if x is None:
        return
    x.fl += v
    x.fadd += v


def _apply_dadd(x, v):
    if x is None:
        return
    x.dv += v
    x.dmax += v
    x.dadd += v


def _push(x):
    if x.rev:
        _apply_rev(x.left)
        _apply_rev(x.right)
        x.rev = False
    if x.fadd != 0.0:
        _apply_fadd(x.left, x.fadd)
        _apply_fadd(x.right, x.fadd)
        x.fadd = 0.0
    if x.dadd != 0.0:
        _apply_dadd(x.left, x.dadd)
        _apply_dadd(x.right, x.dadd)
        x.dadd = 0.0


def _update(x):
    g = x.g
    l = x.ln
    d = x.dv
    if x.left is not None:
        g += x.left.gsum
        l += x.left.lsum
        if x.left.dmax > d:
            d = x.left.dmax
    if x.right is not None:
        g += x.right.gsum
        l += x.right.lsum
        if x.right.dmax > d:
            d = x.right.dmax
    x.gsum = g
    x.lsum = l
    x.dmax = d


def _is_splay_root(x):
    p = x.parent
    return p is None or (p.left is not x and p.right is not x)


def _rotate(x):
    p = x.parent
    gp = p.parent
    if not _is_splay_root(p):
        if gp.left is p:
            gp.left = x
        else:
            gp.right = x
    x.parent = gp
    if p.left is x:
        p.left = x.right
        if x.right is not None:
            x.right.parent = p
        x.right = p
    else:
        p.right = x.left
        if x.left is not None:
            x.left.parent = p
        x.left = p
    p.parent = x
    _update(p)
    _update(x)


def _splay(x):
    # Push pending tags from the splay root down to x, then rotate x up.
    stack = [x]
    node = x
    while not _is_splay_root(node):
        node = node.parent
        stack.append(node)
    while stack:
        _push(stack.pop())
    while not _is_splay_root(x):
        p = x.parent
        if not _is_splay_root(p):
            if (p.parent.left is p) == (p.left is x):
                _rotate(p)
            else:
                _rotate(x)
        _rotate(x)


def _access(x):
    _splay(x)
    if x.right is not None:
        x.right = None  # old preferred child keeps x as path-parent
        _update(x)
    while x.parent is not None:
        y = x.parent
        _splay(y)
        y.right = x  # x was a path-child of y (parent pointer already set)
        _update(y)
        _rotate(x)
    _splay(x)
    return x


def _make_root(x):
    _access(x)
    _apply_rev(x)


def _find_root(x):
    _access(x)
    while True:
        _push(x)
        if x.left is None:
            break
        x = x.left
    _splay(x)
    return x


class DynTree:
    """A dynamic forest over vertices ``0..n-1`` with per-edge gradients,
    lengths, flow accumulators and the ``detect`` trigger at threshold
    ``eps``."""

    def __init__(self, n, eps=1.0):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.n = n
        self.eps = float(eps)
        self._vert = [_Node(False) for _ in range(n)]
        self._edge = {}
        self._ends = {}
        self._hot = set()
        self._loose_g = {}
        self._loose_len = {}
        self._loose_fl = {}
        self._loose_dv = {}
        self._next_eid = 0

    # ---- structural operations ------------------------------------

    def connected(self, u, v):
        if u == v:
            return True
        return _find_root(self._vert[u]) is _find_root(self._vert[v])

    def link(self, u, v, g=0.0, ln=1.0, eid=None):
        """Add tree edge u->v (canonical orientation). Returns its id."""
        if self.connected(u, v):
            raise WouldCreateCycle(f"{u} and {v} already connected")
        if ln <= 0:
            raise ValueError("length must be positive")
        if eid is None:
            eid = self._next_eid
        if eid in self._edge or eid in self._loose_len:
            raise ValueError(f"edge id {eid} already in use")
        self._next_eid = max(self._next_eid, eid) + 1
        en = _Node(True, eid)
        en.g = float(g)
        en.ln = float(ln)
        en.dv = -self.eps / float(ln)
        _update(en)
        self._edge[eid] = en
        self._ends[eid] = (u, v)
        un, vn = self._vert[u], self._vert[v]
        # Chain shape u - en - v: the edge node sits strictly between its
        # endpoints, so descending always crosses it tail->head and the
        # reversal tags alone track its orientation.
        _make_root(vn)
        vn.parent = en
        en.parent = un
        return eid

    def cut(self, eid):
        en = self._edge.pop(eid, None)
        if en is None:
            raise NoSuchEdge(str(eid))
        u, v = self._ends.pop(eid)
        for w in (u, v):
            wn = self._vert[w]
            _make_root(en)
            _access(wn)
            _splay(en)
            # en now heads the preferred path en..wn, so the subtree after
            # it (its right child) is exactly the wn side; detach it.
            child = en.right
            if child is not None:
                child.parent = None
                en.right = None
                _update(en)
        self._hot.discard(eid)

    # ---- per-edge setters / getters ---------------------------------

    def _edge_node(self, eid):
        en = self._edge.get(eid)
        if en is None:
            raise NoSuchEdge(str(eid))
        return en

    def set_gradient(self, eid, g):
        if eid in self._loose_len:
            self._loose_g[eid] = float(g)
            return
        en = self._edge_node(eid)
        _splay(en)
        en.g = float(g) if en.along else -float(g)
        _update(en)

    def set_length(self, eid, ln):
        if ln <= 0:
            raise ValueError("length must be positive")
        if eid in self._loose_len:
            old = self._loose_len[eid]
            self._loose_dv[eid] += self.eps / old - self.eps / float(ln)
            self._loose_len[eid] = float(ln)
            if self._loose_dv[eid] >= 0:
                self._hot.add(eid)
            return
        en = self._edge_node(eid)
        _splay(en)
        en.dv += self.eps / en.ln - self.eps / float(ln)
        en.ln = float(ln)
        _update(en)
        if en.dv >= 0:
            self._hot.add(eid)

    def edge_flow(self, eid):
        if eid in self._loose_len:
            return self._loose_fl[eid]
        en = self._edge_node(eid)
        _splay(en)
        return en.fl if en.along else -en.fl

    def edge_ids(self):
        return set(self._edge)

    # ---- path queries ------------------------------------------------

    def _expose_path(self, u, v):
        if not self.connected(u, v):
            raise NotConnected(f"{u} .. {v}")
        _make_root(self._vert[u])
        _access(self._vert[v])
        return self._vert[v]

    def path_gradient(self, u, v):
        """Signed gradient sum along the oriented u->v tree path."""
        if u == v:
            return 0.0
        root = self._expose_path(u, v)
        return root.gsum

    def path_length(self, u, v):
        """Unsigned length sum of the u->v tree path."""
        if u == v:
            return 0.0
        root = self._expose_path(u, v)
        return root.lsum

    def add_flow_on_path(self, u, v, eta):
        """Add signed ``eta`` to every edge flow on the u->v path and
        ``|eta|`` to the detect accumulators."""
        if u == v:
            return
        root = self._expose_path(u, v)
        _apply_fadd(root, float(eta))
        _apply_dadd(root, abs(float(eta)))
        if root.dmax >= 0.0:
            self._collect_hot(root)

    def _collect_hot(self, x):
        stack = [x]
        while stack:
            node = stack.pop()
            if node is None or node.dmax < 0.0:
                continue
            _push(node)
            if node.is_edge and node.dv >= 0.0:
                self._hot.add(node.eid)
            stack.append(node.left)
            stack.append(node.right)

    # ---- loose (non-forest) edges -------------------------------------

    def add_loose_edge(self, eid, g=0.0, ln=1.0):
        if eid in self._edge or eid in self._loose_len:
            raise ValueError(f"edge id {eid} already in use")
        if ln <= 0:
            raise ValueError("length must be positive")
        self._loose_g[eid] = float(g)
        self._loose_len[eid] = float(ln)
        self._loose_fl[eid] = 0.0
        self._loose_dv[eid] = -self.eps / float(ln)

    def drop_loose_edge(self, eid):
        for d in (self._loose_g, self._loose_len, self._loose_fl, self._loose_dv):
            d.pop(eid, None)
        self._hot.discard(eid)

    def add_edge_flow(self, eid, eta):
        """Direct flow update on a loose edge (same detect semantics)."""
        if eid not in self._loose_len:
            raise NoSuchEdge(str(eid))
        self._loose_fl[eid] += float(eta)
        self._loose_dv[eid] += abs(float(eta))
        if self._loose_dv[eid] >= 0.0:
            self._hot.add(eid)

    # ---- detect --------------------------------------------------------

    def detect(self):
        """Edges whose length-weighted absolute flow change since they were
        last reported reaches ``eps``; resets their accumulators."""
        out = set()
        for eid in list(self._hot):
            if eid in self._loose_len:
                if self._loose_dv[eid] >= 0.0:
                    out.add(eid)
                    self._loose_dv[eid] = -self.eps / self._loose_len[eid]
                self._hot.discard(eid)
                continue
            en = self._edge.get(eid)
            if en is None:  # cut since it became hot
                self._hot.discard(eid)
                continue
            _splay(en)
            if en.dv >= 0.0:
                out.add(eid)
                en.dv = -self.eps / en.ln
                _update(en)
            self._hot.discard(eid)
        return out
