"""Brackets on the never-hit and extinction probabilities.

For a target set ``A`` and truncation radius ``R``:

* ``q_0(., A)``, the probability that no particle ever visits ``A``, is the
  limit of downward iteration from 1 of the map with ``A`` pinned to 0;
* ``q(., A)``, the probability of eventually leaving ``A`` for good, is the
  limit of upward iteration of the unpinned map started at ``q_0``.

Lower and upper brackets come from running these iterations with the lower
and upper boundary values of :mod:`brwext.truncation`.  Iterates that move
in the direction of the limit are certified bounds at every step; the two
other runs are certified only at their limit, so they get a slack from the
geometric convergence rate of the last two steps.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import (CLAMP_ONE, CLAMP_ZERO, FIXED_POINT_TOL, Boundary, FiniteModel, ProbVector,
                   classify_point, iterate_map)
from .errors import PreconditionError
from .sets import Full
from .truncation import System, build_system

TOL = 1e-12
MAX_ITER = 200_000


@dataclass
class Bracket:
    set_name: str
    radius: int
    lower: ProbVector
    upper: ProbVector
    iterations: int
    converged: bool
    scheme: str = "tail"
    monotone_violation: float = 0.0
    system: object = field(default=None, repr=False)

    def at(self, v) -> tuple[float, float]:
        return self.lower.value(v), self.upper.value(v)

    @property
    def width(self) -> float:
        return float(np.max(self.upper.values - self.lower.values))

    def width_at(self, v) -> float:
        lo, hi = self.at(v)
        return hi - lo

    def record(self, watch=(), fmt=str) -> dict:
        out = {"set_name": self.set_name, "R": self.radius, "iterations": self.iterations,
               "converged": self.converged, "width": self.width, "watch": []}
        for v in watch:
            lo, hi = self.at(v)
            out["watch"].append({"vertex": fmt(v), "lower": lo, "upper": hi, "width": hi - lo})
        return out


def _vec(system, values, boundary):
    keys = system.keys
    return ProbVector(keys, np.clip(values, 0.0, 1.0), boundary, resolve=system.resolve,
                      index=system.index)


def _finite_bracket(model, name, lower, upper, its, conv, viol):
    return Bracket(name, 0, model.vector(lower), model.vector(upper), its, conv, "exact", viol, model)


def _prepare(graph, target, radius, scheme, system):
    if system is not None:
        return system
    if isinstance(graph, FiniteModel):
        return graph
    return build_system(graph, target, radius, scheme)


def compute_q0(graph, target, radius=None, *, scheme="tail", tol=TOL, max_iter=MAX_ITER,
               system=None) -> Bracket:
    """Bracket on ``q_0(., A)`` over the truncation of ``graph``."""
    sys_ = _prepare(graph, target, radius, scheme, system)
    if isinstance(sys_, FiniteModel):
        pin = np.array([target.contains(sys_, v) for v in sys_.vertices])
        res = iterate_map(sys_.apply, np.ones(len(pin)), pin=pin, direction="down", tol=tol,
                          max_iter=max_iter)
        lo = np.where(pin, 0.0, res.values - res.slack)
        return _finite_bracket(sys_, target.name, lo, res.values, res.iterations, res.converged,
                               res.monotone_violation)
    b = sys_.bounds
    pin = sys_.in_A
    hi = iterate_map(lambda z: sys_.apply(z, b["q0_hi"]), np.ones(sys_.n), pin=pin,
                     direction="down", tol=tol, max_iter=max_iter)
    lo = iterate_map(lambda z: sys_.apply(z, b["q0_lo"]), np.ones(sys_.n), pin=pin,
                     direction="down", tol=tol, max_iter=max_iter)
    lower = np.where(pin, 0.0, lo.values - lo.slack)
    return Bracket(target.name, sys_.radius, _vec(sys_, lower, CLAMP_ZERO),
                   _vec(sys_, hi.values, CLAMP_ONE), max(hi.iterations, lo.iterations),
                   hi.converged and lo.converged, scheme,
                   max(hi.monotone_violation, lo.monotone_violation), sys_)


def compute_q(graph, target, radius=None, *, q0: Bracket | None = None, scheme="tail", tol=TOL,
              max_iter=MAX_ITER, system=None) -> Bracket:
    """Bracket on ``q(., A)`` by upward iteration from the ``q_0`` bracket."""
    sys_ = _prepare(graph, target, radius, scheme, system)
    if q0 is None:
        q0 = compute_q0(graph, target, radius, scheme=scheme, tol=tol, max_iter=max_iter, system=sys_)
    if isinstance(sys_, FiniteModel):
        up = iterate_map(sys_.apply, q0.upper.values, direction="up", tol=tol, max_iter=max_iter)
        dn = iterate_map(sys_.apply, q0.lower.values, direction="up", tol=tol, max_iter=max_iter)
        return _finite_bracket(sys_, target.name, dn.values, np.minimum(1.0, up.values + up.slack),
                               q0.iterations + max(up.iterations, dn.iterations),
                               q0.converged and up.converged and dn.converged,
                               max(up.monotone_violation, dn.monotone_violation))
    b = sys_.bounds
    up = iterate_map(lambda z: sys_.apply(z, b["q_hi"]), q0.upper.values, direction="up", tol=tol,
                     max_iter=max_iter)
    dn = iterate_map(lambda z: sys_.apply(z, b["q_lo"]), q0.lower.values, direction="up", tol=tol,
                     max_iter=max_iter)
    upper = np.minimum(1.0, up.values + up.slack)
    return Bracket(target.name, sys_.radius, _vec(sys_, dn.values, CLAMP_ZERO),
                   _vec(sys_, upper, CLAMP_ONE),
                   q0.iterations + max(up.iterations, dn.iterations),
                   q0.converged and up.converged and dn.converged, scheme,
                   max(q0.monotone_violation, up.monotone_violation, dn.monotone_violation), sys_)


def compute_qbar(graph, radius=None, *, scheme="clamp", **kw) -> Bracket:
    """Bracket on the global extinction probability ``q(., X)``.

    The default uses the plain clamp boundaries (0 below, 1 above), so the
    result owes nothing to the closed-form tail estimates.
    """
    return compute_q(graph, Full(), radius, scheme=scheme, **kw)


def clamped_iterate(graph, target, n: int, radius: int | None = None) -> ProbVector:
    """The ``n``-th downward iterate of the pinned map from 1.

    Its value at ``x`` is the probability that no particle visits ``A`` in
    generations ``0..n``.  With ``radius >= n`` the root value does not depend
    on the boundary, since particles move one step per generation.
    """
    radius = n + 1 if radius is None else radius
    if radius < n:
        raise PreconditionError("radius must be at least the horizon")
    system = build_system(graph, target, radius, "clamp")
    c = system.bounds["q0_hi"]
    z = np.where(system.in_A, 0.0, 1.0)
    for _ in range(n):
        z = system.apply(z, c)
        z[system.in_A] = 0.0
    return _vec(system, z, CLAMP_ONE)


def distance_to(graph, x, target, radius):
    """Length of the shortest directed path from ``x`` into ``A``.

    Searches up to ``radius`` steps; returns ``(d, exact)`` where ``exact`` is
    False when nothing was found (then ``d = radius + 1`` is a lower bound).
    """
    if isinstance(graph, FiniteModel):
        nbrs = lambda v: graph.mean_neighbors(v)
        member = lambda v: target.contains(graph, v)
    else:
        nbrs = lambda v: [y for y, r in graph.neighbors(v) if r > 0]
        member = lambda v: target.contains(graph, v)
    if member(x):
        return 0, True
    seen = {x}
    frontier = [x]
    for d in range(1, radius + 1):
        nxt = []
        for v in frontier:
            for y in nbrs(v):
                if y in seen:
                    continue
                if member(y):
                    return d, True
                seen.add(y)
                nxt.append(y)
        frontier = nxt
        if not frontier:
            return math.inf, True
    return radius + 1, False


def state_distances(system: System) -> np.ndarray:
    """Distance from each state to the pinned states, through the state graph."""
    n = system.n
    dist = np.full(n, np.inf)
    K = system.K.tocsc()  # column j lists states i with rate i -> j
    queue = deque()
    for i in np.flatnonzero(system.in_A):
        dist[i] = 0
        queue.append(i)
    while queue:
        j = queue.popleft()
        for i in K.indices[K.indptr[j]:K.indptr[j + 1]]:
            if dist[i] == np.inf:
                dist[i] = dist[j] + 1
                queue.append(i)
    return dist


@dataclass
class LocalityReport:
    n: int
    holds: bool
    checked: int
    mismatches: int
    fixed_point_exact: bool


def check_qn_locality(graph, target, n, radius, *, scheme="tail", max_iter=MAX_ITER) -> LocalityReport:
    """Check ``q_n(x, A) == q_0(x, A)`` exactly for states at distance ``>= n`` from ``A``.

    ``q_0`` is iterated until it is a floating-point fixed point of the pinned
    map, then ``q_k = G(q_{k-1})`` is applied ``n`` times along the same code path.
    """
    system = build_system(graph, target, radius, scheme)
    c0 = system.bounds["q0_hi"]
    res = iterate_map(lambda z: system.apply(z, c0), np.ones(system.n), pin=system.in_A,
                      direction="down", exact=True, max_iter=max_iter)
    z = res.values.copy()
    q0 = z.copy()
    for _ in range(n):
        z = system.apply(z, c0)
    far = state_distances(system) >= n
    mism = int(np.count_nonzero(z[far] != q0[far]))
    return LocalityReport(n, res.converged and mism == 0, int(far.sum()), mism, res.converged)


def sample_sub_solutions(model: FiniteModel, count: int, rng, max_tries: int = 200_000):
    """Random points of the sub-solution set by rejection from the unit cube."""
    out = []
    tries = 0
    while len(out) < count and tries < max_tries:
        z = rng.random(len(model.vertices))
        tries += 1
        if "L" in classify_point(model, z, tol=0.0):
            out.append(z)
    return out


@dataclass
class FixedPointSet:
    points: list
    minimal: np.ndarray
    maximal: np.ndarray


def enumerate_fixed_points_finite(model: FiniteModel, *, starts=64, seed=0, tol=TOL,
                                  cluster=1e-8, max_iter=MAX_ITER) -> FixedPointSet:
    """Fixed points reachable by upward iteration from sub-solutions.

    Starts are 0, 1 and random sub-solutions; limits closer than ``cluster`` in
    sup norm are merged.  Points are sorted by their sum.
    """
    model.require_irreducible()
    rng = np.random.default_rng(seed)
    n = len(model.vertices)
    seeds = [np.zeros(n), np.ones(n)] + sample_sub_solutions(model, starts, rng)
    limits = []
    for z0 in seeds:
        res = iterate_map(model.apply, z0, direction="up", tol=tol, max_iter=max_iter)
        if not any(np.max(np.abs(res.values - p)) < cluster for p in limits):
            limits.append(res.values)
    limits.sort(key=lambda p: float(p.sum()))
    for p in limits:
        if "F" not in classify_point(model, p, FIXED_POINT_TOL):
            raise PreconditionError("iteration did not reach a fixed point")
    return FixedPointSet(limits, limits[0], limits[-1])


def bracket_contains(bracket: Bracket, v, value, tol=0.0) -> bool:
    lo, hi = bracket.at(v)
    return lo - tol <= value <= hi + tol


__all__ = ["Bracket", "Boundary", "compute_q0", "compute_q", "compute_qbar", "distance_to",
           "check_qn_locality", "clamped_iterate", "enumerate_fixed_points_finite", "state_distances"]
