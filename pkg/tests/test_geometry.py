import random

import pytest

from brwext import add_loop, make_comb, make_tree
from brwext.geometry import CombGraph, TreeGraph, canonical_automorphism
from brwext.sets import (IN, OUT, Empty, Full, IndexUnion, Singleton, Spine, Subtree, Tooth,
                         Union, parse_set)

T3 = TreeGraph(3, 0.35)
COMB = CombGraph(1, 0.35)
O = (0, ())


def random_tree_vertex(rng, tree, depth):
    v = tree.root
    for _ in range(depth):
        v = rng.choice(tree.children(v))
    return v


class TestTree:
    def test_root_degree_and_neighbors(self):
        assert len(T3.neighbors(O)) == 3
        assert {y for y, _ in T3.neighbors(O)} == {(1, ()), (-1, ()), T3.x(1)}

    def test_every_vertex_has_m_unit_neighbors(self):
        rng = random.Random(1)
        tree = TreeGraph(5, 0.2)
        for _ in range(200):
            v = random_tree_vertex(rng, tree, rng.randrange(8))
            nb = tree.neighbors(v)
            assert len(nb) == 5 and all(r == 1 for _, r in nb)

    @pytest.mark.parametrize("radius", range(0, 9))
    def test_ball_size(self, radius):
        assert len(T3.ball(radius)) == 3 * 2 ** radius - 2

    def test_depths(self):
        for n in range(-5, 6):
            assert T3.depth((n, ())) == abs(n)
        for n in range(1, 8):
            assert T3.depth(T3.x(n)) == n

    def test_make_tree_rejects_small_degree(self):
        with pytest.raises(ValueError):
            make_tree(2, 0.3)

    def test_adjacency_symmetric(self):
        rng = random.Random(5)
        for g in (T3, COMB):
            for _ in range(300):
                v = random_tree_vertex(rng, g, rng.randrange(10)) if g is T3 else (rng.randrange(-9, 9), rng.randrange(9))
                for y, r in g.neighbors(v):
                    assert r > 0
                    assert any(z == v and s > 0 for z, s in g.neighbors(y))

    def test_label_round_trip(self):
        rng = random.Random(7)
        tree = TreeGraph(4, 0.3)
        for _ in range(10_000):
            v = random_tree_vertex(rng, tree, rng.randrange(15))
            assert tree.parse_vertex(tree.format_vertex(v)) == v
            assert tree.from_address(tree.address(v)) == v
        for _ in range(1000):
            v = (rng.randrange(-50, 50), rng.randrange(50))
            assert COMB.parse_vertex(COMB.format_vertex(v)) == v

    def test_parse_aliases(self):
        assert T3.parse_vertex("o") == O
        assert T3.parse_vertex("x3") == (2, (0,))
        assert T3.parse_vertex("x3.1") == (2, (0, 1))


class TestComb:
    def test_rates(self):
        comb = make_comb(2, 0.3)
        assert comb.total_rate((4, 0)) == 1 + 1 + 2
        assert comb.total_rate((4, 3)) == 2 + 2
        assert dict(comb.neighbors((0, 0)))[(0, 1)] == 2
        assert dict(comb.neighbors((0, 1)))[(0, 2)] == 3
        assert dict(comb.neighbors((0, 1)))[(0, 0)] == 1

    def test_adjacency_rule(self):
        for v in [(0, 0), (3, 0), (-2, 4)]:
            for y, _ in COMB.neighbors(v):
                dx, dy = abs(y[0] - v[0]), abs(y[1] - v[1])
                assert (dx == 0 and dy == 1) or (dy == 0 and dx == 1 and y[1] == v[1] == 0)


class TestLoop:
    def test_add_loop(self):
        looped = add_loop(T3, O, 2.5)
        assert looped.total_rate(O) == 3 + 2.5
        assert looped.neighbors((1, ())) == T3.neighbors((1, ()))
        assert add_loop(T3, O, 0).neighbors(O) == T3.neighbors(O)


class TestSets:
    def test_basic_membership(self):
        assert not Subtree((1, ())).contains(T3, O)
        assert Subtree((1, ())).contains(T3, (2, ()))

    def test_union_over_index_set_count(self):
        # T(x1) has 1+2+4+8 vertices within radius 4, T(x2) has 1+2+4
        s = IndexUnion([1, 2])
        brute = [v for v in T3.ball(4) if s.contains(T3, v)]
        assert len(brute) == 22
        assert sorted(s.members(T3, 4)) == sorted(brute)

    def test_bitmask_and_binary_value(self):
        s = IndexUnion.from_bitmask(0b101)
        assert s.indices == {1, 3}
        from fractions import Fraction
        assert s.binary_value() == Fraction(5, 8)
        assert IndexUnion([], tail=3).binary_value() == Fraction(1, 4)
        with pytest.raises(ValueError):
            IndexUnion.from_bitmask(2 ** 64)

    def test_set_algebra_on_radius_12(self):
        ball = T3.ball(12)
        for n in range(0, 6):
            a, b = Subtree((n + 1, ())), Subtree((n, ()))
            assert all(b.contains(T3, v) for v in ball if a.contains(T3, v))
        for i in range(1, 6):
            for j in range(i + 1, 7):
                ti, tj = Subtree(T3.x(i)), Subtree(T3.x(j))
                assert not any(ti.contains(T3, v) and tj.contains(T3, v) for v in ball)
        cball = COMB.ball(12)
        for i in range(-4, 5):
            for j in range(i + 1, 6):
                assert not any(Tooth(i).contains(COMB, v) and Tooth(j).contains(COMB, v) for v in cball)
        for i in range(1, 6):
            ti = Subtree((i, 0))
            tnext = Subtree((i + 1, 0))
            for v in cball:
                assert Tooth(i).contains(COMB, v) == (ti.contains(COMB, v) and not tnext.contains(COMB, v))

    SETS = [
        Full(), Empty(), Singleton(O), Singleton((2, (0, 1))), Subtree((2, ())), Subtree((-1, (0, 1))),
        Spine(), Spine(-2, 3), Tooth(2), Tooth(-1), IndexUnion([1, 3]), IndexUnion([2], tail=4),
        IndexUnion([1, 2], family="V"), Union([Subtree((0, (0, 0))), Singleton((-2, ()))]),
    ]

    @pytest.mark.parametrize("target", SETS, ids=lambda s: s.name)
    def test_members_agree_with_predicate(self, target):
        for graph in (T3, TreeGraph(4, 0.3)):
            brute = sorted(v for v in graph.ball(7) if target.contains(graph, v))
            assert sorted(set(target.members(graph, 7))) == brute

    @pytest.mark.parametrize("target", SETS, ids=lambda s: s.name)
    def test_subtree_kind_is_sound(self, target):
        rng = random.Random(11)
        for _ in range(150):
            w = random_tree_vertex(rng, T3, rng.randrange(1, 6))
            kind = target.subtree_kind(T3, w)
            inside = [target.contains(T3, v) for v in _subtree(T3, w, 8)]
            if kind == IN:
                assert all(inside)
            elif kind == OUT:
                assert not any(inside)

    @pytest.mark.parametrize("target", [Tooth(2), Tooth(-3), Spine(), Subtree((2, 1)), Singleton((1, 4)),
                                        IndexUnion([1, 4], family="V")], ids=lambda s: s.name)
    def test_subtree_kind_sound_on_comb(self, target):
        for w in COMB.ball(6):
            if w == COMB.root:
                continue
            kind = target.subtree_kind(COMB, w)
            inside = [target.contains(COMB, v) for v in _subtree(COMB, w, 10)]
            if kind == IN:
                assert all(inside)
            elif kind == OUT:
                assert not any(inside)

    def test_parse_set(self):
        assert parse_set(T3, "T:y1").contains(T3, (3, ()))
        assert parse_set(T3, "pt:o").contains(T3, O)
        assert parse_set(T3, "tx:1,3").indices == {1, 3}
        assert parse_set(T3, "T:x1|T:x2").contains(T3, (1, (0, 1)))
        with pytest.raises(ValueError):
            parse_set(T3, "nonsense:3")


def _subtree(graph, w, radius):
    out, stack = [], [w]
    while stack:
        v = stack.pop()
        out.append(v)
        if graph.depth(v) < radius:
            stack.extend(graph.children(v))
    return out


class TestAutomorphism:
    def test_x1_to_y1(self):
        psi = canonical_automorphism(T3, T3.x(1), (1, ()))
        assert psi(O) == O
        assert psi(T3.x(1)) == (1, ())
        for v in _subtree(T3, T3.x(1), 7):
            assert Subtree((1, ())).contains(T3, psi(v))

    def test_identity(self):
        psi = canonical_automorphism(T3, (2, (0,)), (2, (0,)))
        assert all(psi(v) == v for v in T3.ball(6))

    def test_distance_mismatch(self):
        with pytest.raises(ValueError):
            canonical_automorphism(T3, (1, ()), (2, ()))

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_pushforward_and_adjacency(self, n):
        psi = canonical_automorphism(T3, T3.x(n), (n, ()))
        assert psi(T3.x(n)) == (n, ())
        rng = random.Random(n)
        tx, ty = Subtree(T3.x(n)), Subtree((n, ()))
        seen = set()
        for _ in range(2000):
            v = random_tree_vertex(rng, T3, rng.randrange(12))
            assert tx.contains(T3, v) == ty.contains(T3, psi(v))
            img = {psi(y) for y, _ in T3.neighbors(v)}
            assert img == {y for y, _ in T3.neighbors(psi(v))}
            seen.add(psi(v))
        ball = T3.ball(6)
        assert sorted(psi(v) for v in ball) == sorted(ball)
