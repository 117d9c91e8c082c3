"""Projections between rate graphs.

A surjective map ``g`` from a source graph to a target graph is a projection
when, for every source vertex ``x`` and target vertex ``y``, the source rates
from ``x`` into the fiber ``g^{-1}(y)`` add up to the target rate from
``g(x)`` to ``y``.  Under a projection the fiber-summed particle counts of a
source process form a target process, so extinction probabilities transport:
``q(x, g^{-1}(A)) = q~(g(x), A)``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .geometry import CombGraph, CombPrime, GadgetB, HalfLine, SingletonGraph, TreeGraph
from .sets import Empty, Full, IndexUnion, MIXED, Spine, TargetSet, Tooth


@dataclass
class ProjectionMap:
    name: str
    source: object
    target: object
    g: Callable

    def __call__(self, v):
        return self.g(v)


def tree_to_comb(tree: TreeGraph) -> ProjectionMap:
    """``y_s`` goes to the axis point ``(s, 0)``; a vertex ``h`` steps off the spine at ``y_s`` goes to ``(s, h)``."""
    comb = CombGraph(tree.m - 2, tree.lam)
    return ProjectionMap(f"tree({tree.m})->comb({tree.m - 2})", tree, comb, lambda v: (v[0], len(v[1])))


def comb_to_singleton(comb: CombGraph) -> ProjectionMap:
    single = SingletonGraph(comb.alpha + 2, comb.lam)
    return ProjectionMap(f"comb({comb.alpha})->singleton({comb.alpha + 2})", comb, single, lambda v: 0)


def gadget_to_tooth(alpha, lam, col: int = 1) -> ProjectionMap:
    """The gadget's vertices at distance ``d`` from its root all go to height ``d`` of the tooth."""
    src = GadgetB(alpha, lam)
    dst = HalfLine(alpha, lam, col)
    return ProjectionMap(f"B->V{col}", src, dst, lambda v: (col, v[1] + v[2]))


def comb_prime_to_comb(alpha, lam, col: int = 1) -> ProjectionMap:
    src = CombPrime(alpha, lam, col)
    dst = CombGraph(alpha, lam)

    def g(v):
        if v[0] == "B":
            return (col, v[1] + v[2])
        return v

    return ProjectionMap(f"comb'({col})->comb({alpha})", src, dst, g)


@dataclass
class ProjectionReport:
    map_name: str
    radius: int
    exact_pass: bool
    checked: int
    witness: dict | None = None
    tv_distance: float | None = None
    q_transport: dict | None = None

    def to_json(self) -> dict:
        return {"map_name": self.map_name, "R": self.radius, "exact_pass": self.exact_pass,
                "checked": self.checked, "witness": self.witness,
                "tv_distance": self.tv_distance, "q_transport": self.q_transport}


def _iter_ball(graph, radius):
    """Vertices within ``radius`` of the root, without storing the whole ball for trees."""
    if graph.tree_like:
        stack = [(graph.root, 0)]
        while stack:
            v, d = stack.pop()
            yield v
            if d < radius:
                for c in graph.children(v):
                    stack.append((c, d + 1))
    else:
        yield from graph.ball(radius)


def _exact(r):
    return r if isinstance(r, (int, Fraction)) else Fraction(r)


def check_projection(pmap: ProjectionMap, radius: int) -> ProjectionReport:
    """Verify the fiber rate-sum identity in exact arithmetic over the source ball.

    Also checks that the image of the source ball covers the target ball of the
    same radius (surjectivity on the truncation).
    """
    src, dst, g = pmap.source, pmap.target, pmap.g
    checked = 0
    image = set()
    target_rows = {}
    for x in _iter_ball(src, radius):
        gx = g(x)
        image.add(gx)
        lhs = Counter()
        for z, r in src.neighbors(x):
            lhs[g(z)] += _exact(r)
        rhs = target_rows.get(gx)
        if rhs is None:
            rhs = Counter()
            for y, r in dst.neighbors(gx):
                rhs[y] += _exact(r)
            target_rows[gx] = rhs
        checked += 1
        if lhs != rhs:
            for y in sorted(set(lhs) | set(rhs), key=repr):
                if lhs[y] != rhs[y]:
                    witness = {"x": repr(x), "y": repr(y), "lhs": str(lhs[y]), "rhs": str(rhs[y])}
                    return ProjectionReport(pmap.name, radius, False, checked, witness)
    missing = [y for y in dst.ball(radius) if y not in image]
    if missing:
        return ProjectionReport(pmap.name, radius, False, checked,
                                {"not_covered": repr(missing[0])})
    return ProjectionReport(pmap.name, radius, True, checked)


def project_config(config, pmap: ProjectionMap) -> dict:
    """Fiber-summed counts of a finitely supported configuration ``{vertex: count}``."""
    out = Counter()
    items = config.items() if hasattr(config, "items") else config
    for v, c in items:
        if c:
            out[pmap.g(v)] += c
    return dict(out)


def fiber_law_tv(pmap: ProjectionMap, x, samples: int, rng) -> float:
    """Total-variation distance between the sampled fiber-summed offspring law at ``x``
    and the exact target law at ``g(x)``."""
    from .montecarlo import sample_offspring_batch

    law = pmap.source.rate_law(x)
    target_law = pmap.target.rate_law(pmap.g(x))
    ys = sorted({y for y, _ in target_law.rates}, key=repr)
    col = {y: j for j, y in enumerate(ys)}
    fiber_of = np.array([col[pmap.g(z)] for z, _ in law.rates])
    counts = sample_offspring_batch(law, samples, rng)  # samples x neighbors
    proj = np.zeros((samples, len(ys)), dtype=np.int64)
    for k, j in enumerate(fiber_of):
        proj[:, j] += counts[:, k]
    keys, freq = np.unique(proj, axis=0, return_counts=True)
    # exact target probabilities of each observed configuration
    lam = target_law.lam
    total = sum(r for _, r in target_law.rates)
    p_die = 1.0 / (1.0 + lam * total)
    rate_by_y = Counter()
    for y, r in target_law.rates:
        rate_by_y[y] += r
    probs = np.array([rate_by_y[y] / total for y in ys])
    tv = 0.0
    covered = 0.0
    for key, f in zip(keys, freq):
        n = int(key.sum())
        logp = math.log(p_die) + n * math.log1p(-p_die) + math.lgamma(n + 1)
        for c, pr in zip(key, probs):
            if c:
                logp += c * math.log(pr) - math.lgamma(c + 1)
        p = math.exp(logp)
        covered += p
        tv += abs(f / samples - p)
    tv += max(0.0, 1.0 - covered)
    return 0.5 * tv


class PreimageSet(TargetSet):
    """``g^{-1}(A)`` as a target set on the source graph."""

    def __init__(self, target_set, pmap):
        self.base = target_set
        self.pmap = pmap
        self.name = f"g^-1({target_set.name})"

    def contains(self, graph, v):
        return self.base.contains(self.pmap.target, self.pmap.g(v))

    def subtree_kind(self, graph, w):
        return MIXED


def preimage(target_set, pmap: ProjectionMap):
    """Preimage of a target-graph set; column-defined sets are reused as-is on the tree."""
    if isinstance(target_set, (Full, Empty)):
        return target_set
    if isinstance(pmap.source, TreeGraph) and isinstance(pmap.target, CombGraph):
        if isinstance(target_set, (Tooth, Spine)):
            return target_set
        if isinstance(target_set, IndexUnion) and target_set.family == "V":
            return target_set
    if isinstance(pmap.target, SingletonGraph):
        return Full() if target_set.contains(pmap.target, 0) else Empty()
    return PreimageSet(target_set, pmap)


def check_q_transport(pmap: ProjectionMap, target_set, radius: int, x=None, **solver_kw) -> dict:
    """Compare the bracket of ``q(x, g^{-1}(A))`` with that of ``q~(g(x), A)``."""
    from .solver import compute_q

    x = pmap.source.root if x is None else x
    src = compute_q(pmap.source, preimage(target_set, pmap), radius, **solver_kw)
    dst = compute_q(pmap.target, target_set, radius, **solver_kw)
    s_lo, s_hi = src.at(x)
    t_lo, t_hi = dst.at(pmap.g(x))
    overlap = max(s_lo, t_lo) <= min(s_hi, t_hi)
    return {"set": target_set.name, "source": [s_lo, s_hi], "target": [t_lo, t_hi],
            "overlap": bool(overlap), "conclusive": bool(src.converged and dst.converged)}
