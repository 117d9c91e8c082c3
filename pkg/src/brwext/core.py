"""Offspring laws and their generating functions.

Two kinds of law are supported:

* :class:`RateLaw`: the geometric law attached to rates ``k_xy`` and a scale
  ``lam``.  Its generating function is ``1 / (1 + lam * sum_y k_xy (1 - z(y)))``.
* :class:`ExplicitLaw`: a finite list of offspring configurations with
  probabilities, used for small finite models.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import csr_matrix

from .errors import InvalidLaw, ReducibleModel, TruncationIncomplete

PROB_TOL = 1e-12
FIXED_POINT_TOL = 1e-9


@dataclass(frozen=True)
class Boundary:
    """Value assumed for vertices outside a truncation.

    ``kind`` is ``"none"`` (raise), ``"one"``, ``"zero"`` or ``"const"``.
    """

    kind: str = "none"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in ("none", "one", "zero", "const"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "const" and not (self.value is not None and 0.0 <= self.value <= 1.0):
            raise ValueError("constant boundary needs a value in [0, 1]")

    def fill(self):
        return {"one": 1.0, "zero": 0.0, "const": self.value}.get(self.kind)


CLAMP_ONE = Boundary("one")
CLAMP_ZERO = Boundary("zero")
STRICT = Boundary("none")


@dataclass
class ProbVector:
    """Values in ``[0, 1]`` on an ordered set of keys, plus a boundary policy.

    ``resolve`` maps a vertex label to its key (identity unless the keys are
    lumped fibers).
    """

    keys: tuple
    values: np.ndarray
    boundary: Boundary = STRICT
    resolve: Callable | None = None
    index: dict = field(default=None, repr=False)

    def __post_init__(self):
        self.keys = tuple(self.keys)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.keys),):
            raise ValueError("values and keys differ in length")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0) or np.any(np.isnan(self.values)):
            raise ValueError("probability vector entries must lie in [0, 1]")
        if self.index is None:
            self.index = {k: i for i, k in enumerate(self.keys)}

    def value(self, v) -> float:
        key = self.resolve(v) if self.resolve is not None else v
        i = self.index.get(key)
        if i is not None:
            return float(self.values[i])
        fill = self.boundary.fill()
        if fill is None:
            raise TruncationIncomplete(f"vertex {v!r} is outside the truncation")
        return fill

    def __getitem__(self, v):
        return self.value(v)

    def __len__(self):
        return len(self.keys)

    @classmethod
    def constant(cls, keys, c, boundary=STRICT, **kw):
        keys = tuple(keys)
        return cls(keys, np.full(len(keys), float(c)), boundary, **kw)


@dataclass(frozen=True)
class RateLaw:
    vertex: Hashable
    rates: tuple  # ((neighbor, k_xy), ...)
    lam: float

    def __post_init__(self):
        if not self.lam >= 0 or not math.isfinite(self.lam):
            raise InvalidLaw("lambda must be nonnegative and finite")
        for _, r in self.rates:
            if r < 0 or not math.isfinite(r):
                raise InvalidLaw("rates must be nonnegative and finite")

    @property
    def total_rate(self) -> float:
        return math.fsum(r for _, r in self.rates)

    @property
    def death_prob(self) -> float:
        """``P(N = 0)``; the number of children is geometric with this success probability."""
        return 1.0 / (1.0 + self.lam * self.total_rate)

    def mean_children(self) -> float:
        return self.lam * self.total_rate


@dataclass(frozen=True)
class ExplicitLaw:
    """Finite offspring law: ``configs`` is a tuple of (config, prob) with config a
    sorted tuple of ``(vertex, count)`` pairs; the empty tuple means no children."""

    vertex: Hashable
    configs: tuple

    def __post_init__(self):
        seen = set()
        total = 0.0
        for cfg, p in self.configs:
            if p < 0 or not math.isfinite(p):
                raise InvalidLaw("probabilities must be nonnegative")
            if cfg in seen:
                raise InvalidLaw(f"duplicate configuration {cfg!r}")
            if any(c <= 0 for _, c in cfg):
                raise InvalidLaw("configuration counts must be positive")
            seen.add(cfg)
            total += p
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidLaw(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_pairs(cls, vertex, pairs, order=None):
        """Build from ``[(dict_or_pairs, prob), ...]`` and sort canonically."""
        items = []
        for cfg, p in pairs:
            cfg = dict(cfg)
            key = tuple(sorted(((y, int(c)) for y, c in cfg.items() if c), key=lambda t: _okey(t[0], order)))
            items.append((key, float(p)))
        items.sort(key=lambda it: (sum(c for _, c in it[0]), [(_okey(y, order), c) for y, c in it[0]]))
        return cls(vertex, tuple(items))

    def mean_children(self) -> float:
        return math.fsum(p * sum(c for _, c in cfg) for cfg, p in self.configs)


def _okey(v, order):
    return order(v) if order is not None else v


def _value(z, y):
    if isinstance(z, ProbVector):
        return z.value(y)
    if callable(z):
        return z(y)
    return z[y]


def eval_genfun(law, z, x=None) -> float:
    """``G(z | x)`` for a rate or explicit law."""
    if isinstance(law, RateLaw):
        deficit = math.fsum(r * (1.0 - _value(z, y)) for y, r in law.rates)
        return 1.0 / (1.0 + law.lam * deficit)
    total = 0.0
    for cfg, p in law.configs:
        term = p
        for y, c in cfg:
            term *= _value(z, y) ** c
        total += term
    return total


@dataclass(frozen=True)
class DerivedLaw:
    """Enumeration of a rate law up to ``max_children`` with the leftover tail mass."""

    law: ExplicitLaw | None
    configs: tuple
    tail_mass: float


def derive_offspring_law(law: RateLaw, max_children: int) -> DerivedLaw:
    """Enumerate configurations of a rate law with at most ``max_children`` children.

    The count is geometric and positions are i.i.d. with probability proportional
    to the rates, so each configuration has probability
    ``P(N=n) * multinomial(n; counts) * prod p_y**count``.
    """
    ys = [y for y, r in law.rates if r > 0]
    ks = np.array([r for _, r in law.rates if r > 0], dtype=float)
    total = ks.sum()
    p_die = law.death_prob
    q = 1.0 - p_die
    probs = ks / total if total > 0 else ks
    configs = []
    mass = 0.0
    for n in range(max_children + 1):
        pn = p_die * q ** n
        for counts in _compositions(n, len(ys)):
            logp = math.lgamma(n + 1)
            for c, pr in zip(counts, probs):
                if c:
                    logp += c * math.log(pr) - math.lgamma(c + 1)
            p = pn * math.exp(logp)
            cfg = tuple((y, c) for y, c in zip(ys, counts) if c)
            configs.append((cfg, p))
            mass += p
        if total == 0:
            break
    return DerivedLaw(None, tuple(configs), max(0.0, 1.0 - mass))


def _compositions(n, k):
    if k == 0:
        if n == 0:
            yield ()
        return
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def eval_derived(derived: DerivedLaw, z) -> float:
    total = 0.0
    for cfg, p in derived.configs:
        term = p
        for y, c in cfg:
            term *= _value(z, y) ** c
        total += term
    return total


def derive_mean(law) -> dict:
    """Mean offspring matrix row ``m_xy`` as a dict ``{y: m_xy}``."""
    out: dict = {}
    if isinstance(law, RateLaw):
        for y, r in law.rates:
            out[y] = out.get(y, 0.0) + law.lam * r
        return out
    for cfg, p in law.configs:
        for y, c in cfg:
            out[y] = out.get(y, 0.0) + p * c
    return out


class FiniteModel:
    """Finite vertex set with explicit laws (or rate laws), no boundary."""

    family = "finite"

    def __init__(self, laws: dict):
        self.laws = dict(laws)
        self.vertices = tuple(sorted(self.laws, key=str))
        self.index = {v: i for i, v in enumerate(self.vertices)}
        for law in self.laws.values():
            for y in derive_mean(law):
                if y not in self.index:
                    raise InvalidLaw(f"law refers to unknown vertex {y!r}")
        self._terms = []
        for v in self.vertices:
            law = self.laws[v]
            if isinstance(law, ExplicitLaw):
                self._terms.append([(p, [(self.index[y], c) for y, c in cfg]) for cfg, p in law.configs])
            else:
                self._terms.append(None)

    def mean_neighbors(self, v):
        return [y for y, val in derive_mean(self.laws[v]).items() if val > 0]

    def mean_matrix(self) -> np.ndarray:
        n = len(self.vertices)
        m = np.zeros((n, n))
        for v in self.vertices:
            for y, val in derive_mean(self.laws[v]).items():
                m[self.index[v], self.index[y]] += val
        return m

    def is_irreducible(self) -> bool:
        m = self.mean_matrix()
        ncomp, _ = connected_components(csr_matrix(m > 0), directed=True, connection="strong")
        return ncomp == 1

    def require_irreducible(self):
        if not self.is_irreducible():
            raise ReducibleModel("mean-offspring graph is not strongly connected")

    def apply(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(len(self.vertices))
        for i, v in enumerate(self.vertices):
            terms = self._terms[i]
            if terms is None:
                out[i] = eval_genfun(self.laws[v], lambda y: z[self.index[y]])
                continue
            total = 0.0
            for p, cfg in terms:
                t = p
                for j, c in cfg:
                    t *= z[j] ** c
                total += t
            out[i] = total
        return out

    def vector(self, values, boundary=STRICT) -> ProbVector:
        return ProbVector(self.vertices, np.clip(values, 0.0, 1.0), boundary)


def classify_point(system, z, tol: float = FIXED_POINT_TOL) -> set:
    """Membership of ``z`` in the sub-solution, super-solution and fixed-point sets.

    Returns a subset of ``{"L", "U", "F"}``: ``L`` when ``G(z) >= z``, ``U`` when
    ``G(z) <= z`` and ``F`` when both hold, each up to ``tol``.  ``system`` is a
    :class:`FiniteModel` or anything with ``apply(values) -> values``.
    """
    zv = z.values if isinstance(z, ProbVector) else np.asarray(z, dtype=float)
    gz = system.apply(zv)
    out = set()
    if np.all(gz >= zv - tol):
        out.add("L")
    if np.all(gz <= zv + tol):
        out.add("U")
    if out == {"L", "U"}:
        out.add("F")
    return out


@dataclass
class IterationResult:
    values: np.ndarray
    iterations: int
    converged: bool
    last_step: float
    slack: float
    monotone_violation: float


def iterate_map(apply, z0, *, pin=None, direction=None, tol=1e-12, max_iter=200_000,
                exact=False) -> IterationResult:
    """Jacobi iteration ``z <- apply(z)`` with optional zero pinning.

    ``direction`` (``"down"`` or ``"up"``) records the largest step against the
    expected monotone direction.  Convergence means a sup-norm step below
    ``tol`` (or exactly zero when ``exact``).  ``slack`` estimates the distance
    to the limit from the last two steps as ``step * r / (1 - r)``.
    """
    z = np.array(z0, dtype=float)
    if pin is not None:
        z[pin] = 0.0
    prev_step = math.inf
    step = math.inf
    violation = 0.0
    converged = False
    it = 0
    while it < max_iter:
        new = apply(z)
        if pin is not None:
            new[pin] = 0.0
        diff = new - z
        it += 1
        prev_step, step = step, float(np.max(np.abs(diff))) if diff.size else 0.0
        if direction == "down" and diff.size:
            violation = max(violation, float(diff.max()))
        elif direction == "up" and diff.size:
            violation = max(violation, float(-diff.min()))
        z = new
        if step == 0.0 or (not exact and step < tol):
            converged = True
            break
    if step == 0.0:
        slack = 0.0
    else:
        r = step / prev_step if prev_step > 0 and math.isfinite(prev_step) else math.inf
        slack = step * r / (1.0 - r) if r < 1.0 else math.inf
    return IterationResult(z, it, converged, step, slack, violation)
