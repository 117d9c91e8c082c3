"""Certified extinction probabilities for branching random walks on infinite graphs."""

__version__ = "0.1.0"

from .core import (CLAMP_ONE, CLAMP_ZERO, Boundary, ExplicitLaw, FiniteModel, ProbVector, RateLaw,
                   classify_point, derive_mean, derive_offspring_law, eval_genfun, iterate_map)
from .geometry import (CombGraph, CombPrime, GadgetB, HalfLine, SingletonGraph, TreeGraph,
                       canonical_automorphism)
from .sets import (Empty, Explicit, Full, IndexUnion, Singleton, Spine, Subtree, Tooth, Union,
                   parse_set)
from .solver import (Bracket, check_qn_locality, compute_q, compute_q0, compute_qbar, distance_to,
                     enumerate_fixed_points_finite)


def make_tree(m: int, lam: float) -> TreeGraph:
    return TreeGraph(m, lam)


def make_comb(alpha, lam: float) -> CombGraph:
    return CombGraph(alpha, lam)


def add_loop(graph, v, rate):
    """Add ``rate`` to the self-loop at ``v``; only the tree root is supported."""
    if not isinstance(graph, TreeGraph) or v != graph.root:
        raise ValueError("loops are supported at the root of a tree")
    if rate < 0:
        raise ValueError("loop rate must be nonnegative")
    return TreeGraph(graph.m, graph.lam, graph.loop_rate + rate)
