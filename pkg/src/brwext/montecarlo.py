"""Generation-by-generation simulation of the discrete-time process.

Each trial owns a Philox stream keyed by ``(seed, trial)``, so trials are
reproducible independently of each other and of execution order.  Within a
generation, vertices are processed in sorted order.  All particles at one
vertex are drawn together: ``c`` independent geometric counts sum to a
negative binomial and their placements to a multinomial, which is the same
joint law as drawing particle by particle.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .core import RateLaw

RNG_NAME = "numpy.random.Philox (4x64, keyed per trial)"


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    trials: int = 1000
    max_generations: int = 200
    particle_cap: int = 10_000
    radius_cap: int = 10_000

    def __post_init__(self):
        if min(self.trials, self.max_generations, self.particle_cap, self.radius_cap) <= 0:
            raise ValueError("caps and trial count must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, trial])
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Trajectory:
    trial_id: int
    generations: list = field(default_factory=list)  # list of tuples ((vertex, count), ...)
    outcome: str = "extinct"  # extinct | survived_horizon | censored
    hit_A: bool = False
    hit_generation: int | None = None

    @property
    def generations_run(self) -> int:
        return len(self.generations) - 1


class _LawCache:
    def __init__(self, graph):
        self.graph = graph
        self.cache = {}

    def get(self, v):
        entry = self.cache.get(v)
        if entry is None:
            law = self.graph.laws[v] if hasattr(self.graph, "laws") else self.graph.rate_law(v)
            if isinstance(law, RateLaw):
                ys = [y for y, r in law.rates]
                ks = np.array([r for _, r in law.rates], dtype=float)
                tot = ks.sum()
                entry = ("rate", ys, ks / tot if tot > 0 else ks, law.death_prob, tot)
            else:
                cdf = np.cumsum([p for _, p in law.configs])
                entry = ("explicit", law.configs, cdf)
            self.cache[v] = entry
        return entry


def sample_offspring(law, rng) -> tuple:
    """One offspring configuration as a sorted tuple of ``(vertex, count)``."""
    if isinstance(law, RateLaw):
        if law.lam == 0 or law.total_rate == 0:
            return ()
        n = int(rng.geometric(law.death_prob)) - 1
        if n == 0:
            return ()
        ks = np.array([r for _, r in law.rates], dtype=float)
        counts = rng.multinomial(n, ks / ks.sum())
        return tuple((y, int(c)) for (y, _), c in zip(law.rates, counts) if c)
    cdf = np.cumsum([p for _, p in law.configs])
    u = rng.random()
    idx = min(int(np.searchsorted(cdf, u, side="right")), len(law.configs) - 1)
    return law.configs[idx][0]


def sample_offspring_batch(law: RateLaw, samples: int, rng) -> np.ndarray:
    """``samples`` independent draws of the per-neighbor counts (rows) of a rate law."""
    n = rng.geometric(law.death_prob, size=samples) - 1
    ks = np.array([r for _, r in law.rates], dtype=float)
    return rng.multinomial(n, ks / ks.sum())


def _breed(cache, v, count, rng, out):
    entry = cache.get(v)
    if entry[0] == "rate":
        _, ys, probs, p_die, tot = entry
        if tot == 0:
            return
        total = int(rng.negative_binomial(count, p_die))
        if total == 0:
            return
        if len(ys) == 1:
            out[ys[0]] = out.get(ys[0], 0) + total
            return
        for y, c in zip(ys, rng.multinomial(total, probs)):
            if c:
                out[y] = out.get(y, 0) + int(c)
        return
    _, configs, cdf = entry
    for u in rng.random(count):
        idx = min(int(np.searchsorted(cdf, u, side="right")), len(configs) - 1)
        for y, c in configs[idx][0]:
            out[y] = out.get(y, 0) + c


def run_trial(x0, graph, cfg: SimConfig, trial: int = 0, target=None, horizon=None,
              stop_on_hit=False, record=True) -> Trajectory:
    """Simulate one trial from a single particle at ``x0``.

    Stops at extinction, at ``horizon`` (default ``cfg.max_generations``), when a
    cap is exceeded (censored) or, with ``stop_on_hit``, at the first visit to
    ``target``.
    """
    rng = trial_rng(cfg.seed, trial)
    cache = _LawCache(graph)
    horizon = cfg.max_generations if horizon is None else horizon
    key = getattr(graph, "sort_key", None) or (lambda v: v)
    depth = getattr(graph, "depth", None)
    traj = Trajectory(trial)
    pop = {x0: 1}
    member = (lambda v: target.contains(graph, v)) if target is not None else (lambda v: False)
    gen = 0
    while True:
        if record:
            traj.generations.append(tuple(sorted(pop.items(), key=lambda t: key(t[0]))))
        if not traj.hit_A and any(member(v) for v in pop):
            traj.hit_A = True
            traj.hit_generation = gen
            if stop_on_hit:
                traj.outcome = "survived_horizon" if pop else "extinct"
                break
        if not pop:
            traj.outcome = "extinct"
            break
        if gen == horizon:
            traj.outcome = "survived_horizon"
            break
        if sum(pop.values()) > cfg.particle_cap or (
                depth is not None and max(depth(v) for v in pop) > cfg.radius_cap):
            traj.outcome = "censored"
            break
        nxt = {}
        for v in sorted(pop, key=key):
            _breed(cache, v, pop[v], rng, nxt)
        pop = nxt
        gen += 1
    if not record:
        traj.generations = [()] * (gen + 1)
    return traj


@dataclass
class Estimate:
    """Frequency with both-sided handling of censored trials."""

    successes: int
    censored: int
    trials: int

    @property
    def low(self):
        return self.successes / self.trials

    @property
    def high(self):
        return (self.successes + self.censored) / self.trials

    @property
    def value(self):
        return 0.5 * (self.low + self.high)

    def stderr(self, p=None):
        p = self.value if p is None else p
        return math.sqrt(max(p * (1 - p), 1e-300) / self.trials)

    def consistent_with(self, p, sigmas=3.0):
        """``p`` lies within ``sigmas`` binomial standard errors of the censoring interval."""
        s = sigmas * self.stderr(p)
        return self.low - s <= p <= self.high + s

    def to_json(self):
        return {"successes": self.successes, "censored": self.censored, "trials": self.trials,
                "low": self.low, "high": self.high, "rng": RNG_NAME}


def estimate_no_hit(x0, target, horizon, graph, cfg: SimConfig, records=None) -> Estimate:
    """Fraction of trials with no particle in ``A`` during generations ``0..horizon``."""
    ok = cens = 0
    for t in range(cfg.trials):
        tr = run_trial(x0, graph, cfg, t, target=target, horizon=horizon, stop_on_hit=True,
                       record=False)
        if records is not None:
            records.append(tr)
        if tr.hit_A:
            continue
        if tr.outcome == "censored":
            cens += 1
        else:
            ok += 1
    return Estimate(ok, cens, cfg.trials)


def estimate_extinction(x0, graph, cfg: SimConfig, records=None) -> Estimate:
    """Fraction of trials extinct within ``cfg.max_generations``; censored counted both ways."""
    ext = cens = 0
    for t in range(cfg.trials):
        tr = run_trial(x0, graph, cfg, t, record=False)
        if records is not None:
            records.append(tr)
        if tr.outcome == "extinct":
            ext += 1
        elif tr.outcome == "censored":
            cens += 1
    return Estimate(ext, cens, cfg.trials)


def trajectories_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial_id", "outcome", "hit_A", "generations_run"])
    for tr in records:
        w.writerow([tr.trial_id, tr.outcome, int(tr.hit_A), tr.generations_run])
    return buf.getvalue()
