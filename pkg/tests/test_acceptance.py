"""Acceptance criteria, one test group per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints a PASS/FAIL line per criterion.
"""
import math
import random
import time

import numpy as np
import pytest

from brwext import experiments as ex
from brwext.critical import bisect_local_survival, closed_form
from brwext.geometry import CombGraph, TreeGraph
from brwext.model import load_model
from brwext.montecarlo import SimConfig, estimate_extinction, estimate_no_hit
from brwext.projection import (check_projection, check_q_transport, comb_to_singleton, fiber_law_tv,
                               gadget_to_tooth, tree_to_comb)
from brwext.sets import Explicit, Full, Singleton, Subtree, Union, parse_set
from brwext.solver import (check_qn_locality, clamped_iterate, compute_q, compute_qbar,
                           enumerate_fixed_points_finite)
from brwext.truncation import build_system

O = (0, ())
ONE_OVER_1_2 = 1 / 1.2


def test_criterion_01_closed_form_qbar():
    t0 = time.perf_counter()
    lo, hi = compute_qbar(TreeGraph(3, 0.4), 30).at(O)
    elapsed = time.perf_counter() - t0
    assert lo <= ONE_OVER_1_2 <= hi
    assert hi - lo < 1e-4
    assert elapsed < 30


def test_criterion_02_subcritical_bracket():
    assert compute_qbar(TreeGraph(3, 0.30), 30).at(O)[1] >= 1 - 1e-9


def test_criterion_02_subcritical_simulation():
    est = estimate_extinction(O, TreeGraph(3, 0.30), SimConfig(seed=2, trials=10_000))
    assert est.low >= 0.995


def test_criterion_03_local_extinction():
    assert compute_q(TreeGraph(3, 0.35), Singleton(O), 40).at(O)[0] > 0.999


def test_criterion_04_spine_subtree_ordering():
    t0 = time.perf_counter()
    res = ex.exp_lemma_countable(lam=0.35, n_max=2, schedule=(10, 20, 30, 40, 50))
    elapsed = time.perf_counter() - t0
    rows = res.rows
    assert rows[0].upper < rows[1].lower and rows[1].upper < rows[2].lower
    assert all(v["verdict"] == ex.DISTINCT for v in res.verdicts)
    assert elapsed < 600


def test_criterion_05_two_vector_regime():
    tree = TreeGraph(3, 0.40)
    brs = [compute_q(tree, ex.spine_subtree(tree, n), 40).at(O) for n in range(4)]
    for lo, hi in brs:
        assert lo <= 0.8333 + 1e-4 and hi >= 0.8333
        assert lo <= ONE_OVER_1_2 <= hi
    for a in brs:
        for b in brs:
            assert max(a[0], b[0]) <= min(a[1], b[1])


def test_criterion_06_finite_union_identity():
    tree = TreeGraph(3, 0.35)
    summary = ex.finite_union_identity(tree, 20)["summary"]
    assert summary["holds"], summary


@pytest.mark.parametrize("n", range(6))
@pytest.mark.parametrize("target", [Singleton(O), Subtree((1, ()))], ids=["point", "spine-subtree"])
def test_criterion_07_locality(target, n):
    rep = check_qn_locality(TreeGraph(3, 0.35), target, n, 14)
    assert rep.holds and rep.mismatches == 0 and rep.checked > 0


@pytest.mark.parametrize("make", [
    lambda: tree_to_comb(TreeGraph(3, 0.35)),
    lambda: comb_to_singleton(CombGraph(1, 0.35)),
    lambda: gadget_to_tooth(1, 0.35, 1),
    lambda: gadget_to_tooth(1, 0.35, 4),
], ids=["tree3-comb1", "comb1-singleton3", "B-V1", "B-V4"])
def test_criterion_08_projection_exact(make):
    rep = check_projection(make(), 20)
    assert rep.exact_pass, rep.witness


@pytest.mark.parametrize("make,x", [
    (lambda: tree_to_comb(TreeGraph(3, 0.35)), O),
    (lambda: comb_to_singleton(CombGraph(1, 0.35)), (0, 0)),
    (lambda: gadget_to_tooth(1, 0.35, 1), ("B", 1, 0)),
], ids=["tree3-comb1", "comb1-singleton3", "B-V1"])
def test_criterion_08_fiber_law(make, x):
    assert fiber_law_tv(make(), x, 100_000, np.random.default_rng(8)) < 0.01


def test_criterion_09_q_transport():
    rep = check_q_transport(tree_to_comb(TreeGraph(3, 0.4)), Full(), 30)
    for lo, hi in (rep["source"], rep["target"]):
        assert lo <= 0.8333 + 1e-4 and hi >= 0.8333
    assert rep["overlap"]


def test_criterion_10_closed_form():
    pair = closed_form("tree", 3)
    assert (round(pair.lambda_w, 6), round(pair.lambda_s, 6)) == (0.333333, 0.353553)
    assert pair.lambda_w == 1 / 3 and pair.lambda_s == 1 / (2 * math.sqrt(2))


def test_criterion_10_bisection():
    est = bisect_local_survival(TreeGraph(3, 0.35), 0.30, 0.45, 25, tol=0.02)
    lo, hi = est.interval
    assert lo <= 0.353553 <= hi and (hi - lo) / 2 <= 0.02


def test_criterion_11_finite_models():
    sup, _ = load_model("finite_supercritical")
    sub, _ = load_model("finite_subcritical")
    pts = sorted(p[0] for p in enumerate_fixed_points_finite(sup, starts=100).points)
    assert len(pts) == 2
    assert pts[0] == pytest.approx(1 / 3, abs=1e-8) and pts[1] == pytest.approx(1.0, abs=1e-8)
    pts = [p[0] for p in enumerate_fixed_points_finite(sub, starts=100).points]
    assert len(pts) == 1 and pts[0] == pytest.approx(1.0, abs=1e-8)


# criterion 12: property suites -------------------------------------------------

def test_criterion_12_map_monotone():
    rng = np.random.default_rng(12)
    system = build_system(TreeGraph(3, 0.35), Union([Subtree((1, ())), Singleton((-2, ()))]), 8)
    c = system.bounds["q_lo"]
    violations = 0
    for _ in range(1000):
        a, b = rng.random(system.n), rng.random(system.n)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        violations += int(np.any(system.apply(lo, c) > system.apply(hi, c)))
    assert violations == 0


@pytest.fixture(scope="module")
def experiment_results():
    model, doc = load_model("finite_two_site")
    return [
        ex.exp_lemma_countable(schedule=(20, 30)),
        ex.exp_uncountable(schedule=(20, 30)),
        ex.exp_line_extinction(radius=30),
        ex.exp_loop(schedule=(20, 30)),
        ex.exp_comb(schedule=(20, 30)),
        ex.exp_boundary_counterexample(schedule=(20, 30)),
        ex.exp_finite_two_points(model, starts=40, model_doc=doc),
    ]


def test_criterion_12_sandwich(experiment_results):
    bad = [(res.name, r.set_name) for res in experiment_results for r in res.rows if r.lower > r.upper]
    assert bad == []


def _random_tree_vertex(rng, tree, depth):
    v = tree.root
    for _ in range(depth):
        v = rng.choice(tree.children(v))
    return v


def test_criterion_12_set_monotone():
    rng = random.Random(120)
    tree = TreeGraph(3, 0.35)
    violations = 0
    for _ in range(20):
        small = [Subtree(_random_tree_vertex(rng, tree, rng.randrange(1, 4))) for _ in range(2)]
        big = small + [Subtree(_random_tree_vertex(rng, tree, rng.randrange(1, 4))),
                       Singleton(_random_tree_vertex(rng, tree, rng.randrange(0, 3)))]
        a, b = compute_q(tree, Union(small), 15), compute_q(tree, Union(big), 15)
        for v in tree.ball(2):
            violations += int(a.at(v)[1] < b.at(v)[0] - 1e-9)
    assert violations == 0


def test_criterion_12_finite_union_bound():
    rng = random.Random(121)
    tree = TreeGraph(3, 0.4)
    ball = tree.ball(3)
    singles = {y: compute_q(tree, Singleton(y), 20).at(O)[0] for y in ball}
    violations = 0
    for _ in range(20):
        pts = rng.sample(ball, rng.randrange(1, 6))
        upper = compute_q(tree, Explicit(pts), 20).at(O)[1]
        violations += int(upper < 1 - sum(1 - singles[y] for y in pts) - 1e-12)
    assert violations == 0


# criterion 13: simulation against the clamped iterate -------------------------

@pytest.mark.parametrize("model,set_text", [
    ("tree3", "T:y1"), ("tree3", "pt:y2"), ("tree4", "T:y1"), ("comb1", "V:1"), ("tree3_loop", "T:y2"),
])
def test_criterion_13_duality(model, set_text):
    graph, _ = load_model(model)
    target = parse_set(graph, set_text)
    exact = clamped_iterate(graph, target, 30).value(graph.root)
    est = estimate_no_hit(graph.root, target, 30, graph, SimConfig(seed=13, trials=10_000))
    assert est.censored == 0
    assert est.consistent_with(exact, sigmas=3)
