"""Critical breeding parameters for global and local survival."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PreconditionError
from .sets import Singleton


@dataclass(frozen=True)
class CriticalPair:
    family: str
    lambda_w: float | None
    lambda_s: float | None
    source: str = "closed-form"
    interval: tuple | None = None
    note: str | None = None

    def to_json(self):
        out = {"family": self.family, "lambda_w": self.lambda_w, "lambda_s": self.lambda_s,
               "source": self.source}
        if self.interval is not None:
            out["interval"] = list(self.interval)
        if self.note:
            out["note"] = self.note
        return out


def closed_form(family: str, param) -> CriticalPair:
    """``tree``: ``(1/m, 1/(2 sqrt(m-1)))``; ``comb``: ``(1/(alpha+2), 1/(2 sqrt(alpha+1)))``."""
    if family == "tree":
        m = int(param)
        if m < 3:
            raise PreconditionError("tree degree must be at least 3")
        return CriticalPair(f"tree({m})", 1.0 / m, 1.0 / (2.0 * math.sqrt(m - 1)))
    if family == "comb":
        a = float(param)
        return CriticalPair(f"comb({param})", 1.0 / (a + 2.0), 1.0 / (2.0 * math.sqrt(a + 1.0)))
    raise PreconditionError(f"no closed form for family {family!r}")


def locally_extinct(graph, radius, threshold=1e-4, **kw) -> bool:
    """Upper bracket of ``q(root, {root})`` within ``threshold`` of 1."""
    from .solver import compute_q

    br = compute_q(graph, Singleton(graph.root), radius, **kw)
    return br.at(graph.root)[1] >= 1.0 - threshold


def bisect_local_survival(graph, lam_lo: float, lam_hi: float, radius: int, tol: float = 0.02,
                          **kw) -> CriticalPair:
    """Bisect on local extinction at the root until the interval half-width is at most ``tol``.

    Truncation can only make local survival harder, so the interval is biased
    upward relative to the true threshold.
    """
    if not lam_lo < lam_hi:
        raise PreconditionError("need lam_lo < lam_hi")
    lo, hi = lam_lo, lam_hi
    ok_lo = locally_extinct(graph.with_lambda(lo), radius, **kw)
    ok_hi = locally_extinct(graph.with_lambda(hi), radius, **kw)
    family = graph.family
    if not ok_lo or ok_hi:
        return CriticalPair(family, None, None, "empirical-bisection", (lo, hi),
                            "inconclusive: predicate does not change sign on the interval")
    while (hi - lo) / 2.0 > tol:
        mid = 0.5 * (lo + hi)
        if locally_extinct(graph.with_lambda(mid), radius, **kw):
            lo = mid
        else:
            hi = mid
    return CriticalPair(family, None, 0.5 * (lo + hi), "empirical-bisection", (lo, hi),
                        "truncation biases the estimate upward")
