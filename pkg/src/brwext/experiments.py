"""Named experiments.

Each runner returns an :class:`ExperimentResult` holding a q-table with one
row per bracket and a list of tri-state verdicts; provenance rides along.  Brackets are compared only
through their endpoints: a strict inequality is reported only when brackets
are disjoint, and equality only when they overlap and are both narrow.
"""
from __future__ import annotations

import csv
import io
import platform
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__
from .errors import PreconditionError
from .geometry import CombGraph, TreeGraph
from .projection import check_q_transport, tree_to_comb
from .sets import Full, IndexUnion, Singleton, Subtree, Union
from .solver import MAX_ITER, TOL, compute_q, enumerate_fixed_points_finite

DEFAULT_SCHEDULE = (10, 20, 30, 40, 50)
EQUAL_WIDTH = 1e-6
CSV_COLUMNS = ["set_name", "n_or_index", "R", "lower", "upper", "width", "converged"]

DISTINCT = "certified-distinct"
EQUAL = "certified-equal-within"
UNRESOLVED = "unresolved"


@dataclass
class Row:
    set_name: str
    n_or_index: str
    radius: int
    lower: float
    upper: float
    converged: bool
    iterations: int = 0

    @property
    def width(self):
        return self.upper - self.lower

    def csv_row(self):
        return [self.set_name, self.n_or_index, self.radius, repr(self.lower), repr(self.upper),
                repr(self.width), int(self.converged)]

    def to_json(self):
        return {"set_name": self.set_name, "n_or_index": self.n_or_index, "R": self.radius,
                "lower": self.lower, "upper": self.upper, "width": self.width,
                "converged": self.converged, "iterations": self.iterations}


@dataclass
class ExperimentResult:
    name: str
    rows: list
    verdicts: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def unresolved(self) -> bool:
        return any(v["verdict"] == UNRESOLVED for v in self.verdicts)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_row())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"experiment": self.name, "rows": [r.to_json() for r in self.rows],
                "verdicts": self.verdicts, "extra": self.extra, "provenance": self.provenance,
                "status": UNRESOLVED if self.unresolved else "ok"}


def provenance(model: dict, schedule, **settings) -> dict:
    return {"model": model, "R_schedule": list(schedule), "tolerance": TOL,
            "max_iterations": MAX_ITER, "settings": settings,
            "versions": {"brwext": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "python": platform.python_version()},
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}


def _check_schedule(schedule):
    schedule = tuple(int(r) for r in schedule)
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise PreconditionError("R schedule must be nonempty and strictly increasing")
    return schedule


def _row(bracket, label, x):
    lo, hi = bracket.at(x)
    return Row(bracket.set_name, str(label), bracket.radius, lo, hi, bracket.converged,
               bracket.iterations)


def compare(a: Row, b: Row, equal_width=EQUAL_WIDTH) -> dict:
    """Tri-state comparison of two bracketed values."""
    both = a.converged and b.converged
    if both and a.upper < b.lower:
        verdict, order = DISTINCT, "<"
    elif both and b.upper < a.lower:
        verdict, order = DISTINCT, ">"
    elif max(a.lower, b.lower) <= min(a.upper, b.upper) and max(a.width, b.width) <= equal_width:
        verdict, order = EQUAL, "="
    else:
        verdict, order = UNRESOLVED, "?"
    return {"left": a.set_name, "right": b.set_name, "R": max(a.radius, b.radius),
            "verdict": verdict, "order": order}


def _escalate(graph, sets, schedule, x, pairs):
    """Solve ``sets`` at each radius until every pair in ``pairs`` is resolved."""
    rows, verdicts = [], []
    for radius in schedule:
        rows = [_row(compute_q(graph, s, radius), label, x) for label, s in sets]
        verdicts = [compare(rows[i], rows[j]) for i, j in pairs]
        if all(v["verdict"] != UNRESOLVED for v in verdicts):
            break
    for v in verdicts:
        if v["verdict"] == UNRESOLVED:
            v["hint"] = "raise the largest radius in the R schedule"
    return rows, verdicts


def spine_subtree(graph, n):
    if n == 0:
        return Full()
    top = (n, ()) if isinstance(graph, TreeGraph) else (n, 0)
    name = f"T(y{n})"
    return Subtree(top, name=name)


def exp_lemma_countable(lam=0.35, n_max=3, schedule=DEFAULT_SCHEDULE, m=3, loop_rate=0):
    schedule = _check_schedule(schedule)
    graph = TreeGraph(m, lam, loop_rate)
    sets = [(n, spine_subtree(graph, n)) for n in range(n_max + 1)]
    rows, verdicts = _escalate(graph, sets, schedule, graph.root,
                               [(i, i + 1) for i in range(n_max)])
    return ExperimentResult("lemma_countable", rows, verdicts,
                            provenance(graph.descriptor(), schedule, n_max=n_max))


def _index_union(indices, family):
    if isinstance(indices, int):
        return IndexUnion.from_bitmask(indices, family=family)
    if isinstance(indices, IndexUnion):
        return indices
    return IndexUnion(indices, family=family)


def _uncountable_core(graph, u1, u2, schedule, name, extra_sets=()):
    if u1.binary_value() == u2.binary_value():
        raise PreconditionError("index sets have equal binary values")
    sets = [("I1", u1), ("I2", u2)] + list(extra_sets)
    rows, verdicts = _escalate(graph, sets, schedule, graph.root, [(0, 1)])
    v = verdicts[0]
    v1, v2 = u1.binary_value(), u2.binary_value()
    v["binary_values"] = [str(v1), str(v2)]
    v["expected_order"] = "<" if v1 > v2 else ">"
    v["order_matches"] = v["order"] == v["expected_order"] if v["verdict"] == DISTINCT else None
    return rows, verdicts


def exp_uncountable(lam=0.35, I1=(1,), I2=(2,), schedule=DEFAULT_SCHEDULE, m=3):
    """Compare ``q(o, U_{i in I1} T(x_i))`` with the same for ``I2``; also the finite-union identity."""
    schedule = _check_schedule(schedule)
    graph = TreeGraph(m, lam)
    u1, u2 = _index_union(I1, "Tx"), _index_union(I2, "Tx")
    rows, verdicts = _uncountable_core(graph, u1, u2, schedule, "uncountable")
    radius = rows[0].radius
    ident = finite_union_identity(graph, radius)
    return ExperimentResult("uncountable", rows + ident["rows"], verdicts,
                            provenance(graph.descriptor(), schedule, I1=sorted(u1.indices),
                                       I2=sorted(u2.indices)),
                            {"finite_union_identity": ident["summary"],
                             "truncation": "index unions are solved with certified boundary bounds; "
                                           "dropping members beyond the radius could only raise q"})


def finite_union_identity(graph, radius):
    """``q(o, T(x_1))`` against ``q(o, U_{2<=i<=R} T(x_i))``: equal in theory."""
    a = _row(compute_q(graph, Subtree((0, (0,)), name="T(x1)"), radius), "x1", graph.root)
    b = _row(compute_q(graph, IndexUnion(range(2, radius + 1)), radius), f"2..{radius}", graph.root)
    mid_a, mid_b = 0.5 * (a.lower + a.upper), 0.5 * (b.lower + b.upper)
    gap = abs(mid_a - mid_b)
    return {"rows": [a, b], "summary": {"gap": gap, "width_sum": a.width + b.width,
                                        "holds": gap <= a.width + b.width}}


def exp_line_extinction(lam=0.35, n_max=6, radius=40, m=3):
    graph = TreeGraph(m, lam)
    qbar = _row(compute_q(graph, Full(), radius), 0, graph.root)
    rows = [qbar]
    for n in range(1, n_max + 1):
        rows.append(_row(compute_q(graph, spine_subtree(graph, n), radius), n, graph.root))
    lows = [r.lower for r in rows[1:]]
    nondecreasing = all(b >= a - 1e-12 for a, b in zip(lows, lows[1:]))
    above = [r.lower > qbar.upper for r in rows[1:]]
    return ExperimentResult(
        "line_extinction", rows, [],
        provenance(graph.descriptor(), (radius,), n_max=n_max),
        {"nondecreasing": nondecreasing, "gap_to_one": [1.0 - x for x in lows],
         "above_qbar": above})


def exp_loop(lam=0.35, loop_rate=3.0, schedule=DEFAULT_SCHEDULE, n_max=2, m=3):
    schedule = _check_schedule(schedule)
    res = exp_lemma_countable(lam, n_max, schedule, m=m, loop_rate=loop_rate)
    graph = TreeGraph(m, lam, loop_rate)
    radius = res.rows[0].radius
    local = _row(compute_q(graph, Singleton(graph.root, name="{o}"), radius), "o", graph.root)
    res.name = "loop"
    res.rows.append(local)
    res.extra["local_survival"] = local.upper < 1.0
    return res


def exp_comb(lam=0.35, alpha=1, I1=(1,), I2=(2,), schedule=DEFAULT_SCHEDULE, transport_radius=None):
    schedule = _check_schedule(schedule)
    comb = CombGraph(alpha, lam)
    u1, u2 = _index_union(I1, "V"), _index_union(I2, "V")
    rows, verdicts = _uncountable_core(comb, u1, u2, schedule, "comb")
    extra = {}
    if isinstance(comb.alpha, int):
        tree = TreeGraph(comb.alpha + 2, lam)
        radius = transport_radius or rows[0].radius
        extra["q_transport"] = check_q_transport(tree_to_comb(tree), u1, radius)
        if not extra["q_transport"]["overlap"]:
            verdicts.append({"left": "tree", "right": "comb", "R": radius,
                             "verdict": UNRESOLVED, "order": "?", "hint": "transport mismatch"})
    return ExperimentResult("comb", rows, verdicts,
                            provenance(comb.descriptor(), schedule, I1=sorted(u1.indices),
                                       I2=sorted(u2.indices)), extra)


def exp_boundary_counterexample(lam=0.35, schedule=DEFAULT_SCHEDULE, m=3):
    """Two sets with the same harmonic shadow but different extinction probabilities."""
    schedule = _check_schedule(schedule)
    graph = TreeGraph(m, lam)
    s, v = (0, (0, 0)), (0, (0, 1))
    x2 = (1, (0,))
    a = Union([Subtree(s, name="T(s)"), Subtree(v, name="T(v)")])
    b = Union([Subtree(v, name="T(v)"), Subtree(x2, name="T(x2)")])
    sets = [("A", a), ("B", b), ("X", Full())]
    rows, verdicts = _escalate(graph, sets, schedule, graph.root, [(0, 1)])
    qbar = rows[2]
    extra = {"at_most_one": all(r.upper <= 1.0 for r in rows[:2]),
             "at_least_qbar": all(r.lower >= qbar.lower - 1e-12 for r in rows[:2])}
    return ExperimentResult("boundary_counterexample", rows, verdicts,
                            provenance(graph.descriptor(), schedule), extra)


def exp_finite_two_points(model, starts=100, seed=0, model_doc=None):
    fps = enumerate_fixed_points_finite(model, starts=starts, seed=seed)
    rows = []
    for k, p in enumerate(fps.points):
        for v, val in zip(model.vertices, p):
            rows.append(Row(f"fixed_point_{k}", str(v), 0, float(val), float(val), True))
    extra = {"count": len(fps.points), "points": [[float(x) for x in p] for p in fps.points],
             "vertices": list(map(str, model.vertices))}
    verdict = {"left": "fixed points", "right": "two-point law", "R": 0,
               "verdict": EQUAL if len(fps.points) <= 2 else UNRESOLVED, "order": "="}
    return ExperimentResult("finite_two_points", rows, [verdict],
                            provenance(model_doc or {"family": "finite"}, (0,), starts=starts,
                                       seed=seed), extra)


EXPERIMENTS = {
    "lemma_countable": exp_lemma_countable,
    "uncountable": exp_uncountable,
    "line_extinction": exp_line_extinction,
    "loop": exp_loop,
    "comb": exp_comb,
    "boundary_counterexample": exp_boundary_counterexample,
    "finite_two_points": exp_finite_two_points,
}
