"""Finite systems standing in for an infinite graph.

A :class:`System` is a finite list of states with a sparse rate matrix between
them and sparse links to *boundary* vertices outside the truncation.  Every
boundary vertex carries four certified values used by the solver:

``q0_lo, q0_hi``  bounds on the never-hit probability ``q_0(b, A)``
``q_lo, q_hi``    bounds on the extinction probability ``q(b, A)``

Under the ``"clamp"`` scheme these are the trivial values 0 and 1 (with
members of ``A`` pinned to 0 for ``q_0``).  Under the ``"tail"`` scheme on
tree-like graphs they use first-passage estimates: a walk started at distance
``d`` from a vertex ``u`` on the path to the root visits ``u`` at most ``F**d``
times in expectation, ``F`` solving ``F = lam + lam * b * F**2``.

Trees are lumped: a child subtree lying wholly inside or wholly outside ``A``
collapses to a half-line indexed by depth.  The lumping is exact, so the
quotient reproduces the ball iteration value for value.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .sets import IN, MIXED, OUT, Empty


@dataclass
class System:
    keys: list
    lam: float
    K: sparse.csr_matrix
    B: sparse.csr_matrix
    in_A: np.ndarray
    bounds: dict
    radius: int
    boundary_keys: list
    resolve: object = None
    kind: str = "ball"
    reps: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = {k: i for i, k in enumerate(self.keys)}
        self.n = len(self.keys)

    def apply(self, z, c=None):
        deficit = self.K @ (1.0 - z)
        if self.B.shape[1]:
            deficit += self.B @ (1.0 - c)
        return 1.0 / (1.0 + self.lam * deficit)

    def state(self, v):
        key = self.resolve(v) if self.resolve is not None else v
        return self.index[key]

    def adjacency(self):
        """Directed reachability structure among states (rate > 0)."""
        return (self.K > 0).astype(np.int8)


def tail_bounds(graph, target, b, scheme="tail"):
    """Certified ``(q0_lo, q0_hi, q_lo, q_hi)`` at an out-of-truncation vertex ``b``."""
    in_a = target.contains(graph, b)
    if isinstance(target, Empty):
        return (1.0, 1.0, 1.0, 1.0)
    if scheme == "clamp" or not getattr(graph, "tree_like", False):
        return (0.0, 0.0, 0.0, 1.0) if in_a else (0.0, 1.0, 0.0, 1.0)
    qbar_lo, qbar_hi = graph.qbar_bounds(b)
    kind = target.subtree_kind(graph, b)
    f = graph.first_passage
    if kind == MIXED:
        return (0.0, 0.0 if in_a else 1.0, qbar_lo, 1.0)
    w = b
    while True:
        p = graph.parent(w)
        if p == graph.root or target.subtree_kind(graph, p) != kind:
            break
        w = p
    d = graph.depth(b) - graph.depth(w) + 1
    escape = 1.0 if f is None else min(1.0, f ** d)
    if kind == IN:
        return (0.0, 0.0, qbar_lo, min(1.0, qbar_hi + escape))
    return (1.0 - escape, 1.0, max(qbar_lo, 1.0 - escape), 1.0)


def _finish(keys, lam, rows, cols, vals, brows, bcols, bvals, in_a, bound_rows, radius,
            boundary_keys, resolve, kind, reps=None):
    n, nb = len(keys), len(boundary_keys)
    K = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    B = sparse.csr_matrix((bvals, (brows, bcols)), shape=(n, nb))
    arr = np.array(bound_rows, dtype=float).reshape(nb, 4)
    bounds = {name: arr[:, j].copy() for j, name in enumerate(("q0_lo", "q0_hi", "q_lo", "q_hi"))}
    return System(list(keys), lam, K, B, np.array(in_a, dtype=bool), bounds, radius,
                  list(boundary_keys), resolve, kind, reps or {})


def ball_system(graph, target, radius, scheme="tail"):
    """Truncate to the ball of ``radius`` around the root."""
    dist = {graph.root: 0}
    queue = deque([graph.root])
    while queue:
        v = queue.popleft()
        if dist[v] == radius:
            continue
        for y, _ in graph.neighbors(v):
            if y not in dist:
                dist[y] = dist[v] + 1
                queue.append(y)
    keys = sorted(dist, key=graph.sort_key)
    index = {k: i for i, k in enumerate(keys)}
    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    bindex, bkeys, bound_rows = {}, [], []
    for i, v in enumerate(keys):
        for y, r in graph.neighbors(v):
            j = index.get(y)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(float(r))
                continue
            k = bindex.get(y)
            if k is None:
                k = bindex[y] = len(bkeys)
                bkeys.append(y)
                bound_rows.extend(tail_bounds(graph, target, y, scheme))
            brows.append(i)
            bcols.append(k)
            bvals.append(float(r))
    in_a = [target.contains(graph, v) for v in keys]
    return _finish(keys, graph.lam, rows, cols, vals, brows, bcols, bvals, in_a, bound_rows,
                   radius, bkeys, None, "ball")


def tree_quotient(tree, target, radius, scheme="tail"):
    """Exact lumped system for a (possibly looped) tree.

    States are skeleton vertices ``("s", v)`` (the root and every vertex whose
    subtree meets ``A`` partially) and half-line levels ``("h", u, kind, depth)``
    grouping all descendants at a given depth of the homogeneous children of
    skeleton vertex ``u``.
    """
    m = tree.m
    skeleton = {}
    halflines = []  # (u, kind, count, representative child)
    opaque = []  # (u, child) mixed children beyond the radius
    queue = deque([tree.root])
    skeleton[tree.root] = tree.depth(tree.root)
    kind_cache = {}

    def kind_of(c):
        k = kind_cache.get(c)
        if k is None:
            k = kind_cache[c] = target.subtree_kind(tree, c)
        return k

    while queue:
        u = queue.popleft()
        du = skeleton[u]
        groups = {}
        for c in tree.children(u):
            k = kind_of(c)
            if k == MIXED:
                if du + 1 <= radius:
                    skeleton[c] = du + 1
                    queue.append(c)
                else:
                    opaque.append((u, c))
            else:
                if k in groups:
                    groups[k][0] += 1
                else:
                    groups[k] = [1, c]
        for k in (IN, OUT):
            if k in groups:
                halflines.append((u, k, groups[k][0], groups[k][1]))

    keys = [("s", v) for v in sorted(skeleton, key=tree.sort_key)]
    in_a = [target.contains(tree, v) for v in sorted(skeleton, key=tree.sort_key)]
    reps = {("s", v): v for v in skeleton}
    for u, k, count, c in halflines:
        for h in range(1, radius - skeleton[u] + 1):
            key = ("h", u, k, h)
            keys.append(key)
            in_a.append(k == IN)
    index = {k: i for i, k in enumerate(keys)}
    rows, cols, vals = [], [], []
    brows, bcols, bvals = [], [], []
    bkeys, bound_rows = [], []

    def link(i, key, r):
        rows.append(i)
        cols.append(index[key])
        vals.append(float(r))

    def boundary(i, rep, r, key):
        bkeys.append(key)
        bound_rows.extend(tail_bounds(tree, target, rep, scheme))
        brows.append(i)
        bcols.append(len(bkeys) - 1)
        bvals.append(float(r))

    for v, dv in skeleton.items():
        i = index[("s", v)]
        p = tree.parent(v)
        if p is not None:
            link(i, ("s", p), 1)
        if v == tree.root and tree.loop_rate:
            link(i, ("s", v), tree.loop_rate)
        for c in tree.children(v):
            if c in skeleton:
                link(i, ("s", c), 1)
    for u, c in opaque:
        boundary(index[("s", u)], c, 1, ("o", c))
    for u, k, count, c in halflines:
        du = skeleton[u]
        top = radius - du
        iu = index[("s", u)]
        rep = c
        if top == 0:
            boundary(iu, rep, count, ("h", u, k, 1))
            continue
        link(iu, ("h", u, k, 1), count)
        for h in range(1, top + 1):
            i = index[("h", u, k, h)]
            reps[("h", u, k, h)] = rep
            link(i, ("s", u) if h == 1 else ("h", u, k, h - 1), 1)
            if h < top:
                link(i, ("h", u, k, h + 1), m - 1)
            else:
                boundary(i, _deeper(rep), m - 1, ("h", u, k, h + 1))
            rep = _deeper(rep)

    def resolve(v):
        if v in skeleton:
            return ("s", v)
        h = 0
        c = v
        while True:
            p = tree.parent(c)
            h += 1
            if p in skeleton:
                return ("h", p, kind_of(c), h)
            c = p

    return _finish(keys, tree.lam, rows, cols, vals, brows, bcols, bvals, in_a, bound_rows,
                   radius, bkeys, resolve, "quotient", reps)


def _deeper(v):
    """A child of tree vertex ``v`` one level further from the root (same kind of subtree)."""
    s, w = v
    if w:
        return (s, w + (0,))
    return (s + (1 if s > 0 else -1), ())


def build_system(graph, target, radius, scheme="tail", lumped=True):
    from .geometry import TreeGraph

    if lumped and isinstance(graph, TreeGraph):
        return tree_quotient(graph, target, radius, scheme)
    return ball_system(graph, target, radius, scheme)
