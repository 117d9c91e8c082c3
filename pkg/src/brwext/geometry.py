"""Rate graphs, from homogeneous trees and combs down to the small projection targets.

Vertex labels
-------------
Tree ``T_m``: ``(s, word)``. ``word == ()`` is the spine vertex ``y_s``; otherwise
``word[0]`` in ``0..m-3`` picks an off-spine neighbour of ``y_s`` and the remaining
letters in ``0..m-2`` pick children.  ``x_i`` is ``(i - 1, (0,))``.

Comb: ``(x, h)``; the axis is ``h == 0`` and ``(0, 0)`` is the root.

Every tree-like graph exposes ``parent``/``depth``/``children`` relative to its
root, plus ``first_passage`` (expected first visits one step towards the root)
used by the certified tail bounds in :mod:`brwext.truncation`.
"""
from __future__ import annotations

import math
from collections import deque
from fractions import Fraction

Vertex = tuple


def _exact(r):
    if isinstance(r, (int, Fraction)):
        return r
    f = Fraction(r)
    return int(f) if f.denominator == 1 else f


def _sign(s: int) -> int:
    return (s > 0) - (s < 0)


def first_passage_factor(branching: float, lam: float) -> float | None:
    """Smallest root of ``F = lam + lam * branching * F**2``; ``None`` if complex."""
    disc = 1.0 - 4.0 * branching * lam * lam
    if disc < 0.0:
        return None
    return (1.0 - math.sqrt(disc)) / (2.0 * branching * lam)


def singleton_qbar_bounds(rate: float, lam: float) -> tuple[float, float]:
    """Float bounds on the extinction probability of the one-point process.

    The offspring law is geometric with mean ``lam * rate``, whose extinction
    probability is ``min(1, 1 / (lam * rate))``.  The closed form is nudged
    outward until the sub/super-solution inequalities hold in floating point.
    """
    mean = lam * rate
    if mean <= 1.0:
        return 1.0, 1.0

    def g(s):
        return 1.0 / (1.0 + mean * (1.0 - s))

    root = 1.0 / mean
    lo = hi = root
    while not g(lo) >= lo:
        lo = math.nextafter(lo, 0.0)
    while not g(hi) <= hi:
        hi = math.nextafter(hi, 1.0)
    return lo, hi


class RateGraph:
    """Base class: a locally finite graph with rates and a scale ``lam``."""

    family = "graph"
    tree_like = False
    lam: float
    root: Vertex

    def neighbors(self, v):
        raise NotImplementedError

    def rate_law(self, v):
        from .core import RateLaw

        return RateLaw(v, tuple((y, float(r)) for y, r in self.neighbors(v)), self.lam)

    def total_rate(self, v):
        return sum(r for _, r in self.neighbors(v))

    def sort_key(self, v):
        return v

    def format_vertex(self, v) -> str:
        return repr(v)

    def parse_vertex(self, text: str):
        raise NotImplementedError

    def descriptor(self) -> dict:
        return {"family": self.family, "lambda": self.lam}

    def with_lambda(self, lam: float):
        raise NotImplementedError

    # tree-like structure
    def parent(self, v):
        raise NotImplementedError

    def depth(self, v) -> int:
        d = 0
        while v != self.root:
            v = self.parent(v)
            d += 1
        return d

    def children(self, v):
        p = self.parent(v) if v != self.root else None
        return [y for y, _ in self.neighbors(v) if y != p and y != v]

    def in_subtree(self, v, w) -> bool:
        """True iff ``v`` lies in the subtree rooted at ``w`` (all descendants of ``w``)."""
        if w == self.root:
            return True
        dv, dw = self.depth(v), self.depth(w)
        while dv > dw:
            v = self.parent(v)
            dv -= 1
        return v == w

    @property
    def first_passage(self) -> float | None:
        return None

    def qbar_bounds(self, v) -> tuple[float, float]:
        return 0.0, 1.0

    # column structure (projection onto the comb)
    def column(self, v) -> tuple[int, int]:
        raise NotImplementedError

    def ball(self, radius: int) -> list:
        """Vertices within graph distance ``radius`` of the root, sorted."""
        seen = {self.root: 0}
        queue = deque([self.root])
        while queue:
            v = queue.popleft()
            d = seen[v]
            if d == radius:
                continue
            for y, _ in self.neighbors(v):
                if y not in seen:
                    seen[y] = d + 1
                    queue.append(y)
        return sorted(seen, key=self.sort_key)


class TreeGraph(RateGraph):
    """Homogeneous tree ``T_m`` with unit rates, optionally with a loop at the root."""

    family = "tree"
    tree_like = True

    def __init__(self, m: int, lam: float, loop_rate=0):
        if m < 3:
            raise ValueError("tree degree must be at least 3")
        self.m = int(m)
        self.lam = float(lam)
        self.loop_rate = _exact(loop_rate)
        self.root = (0, ())
        if self.loop_rate:
            self.family = "tree+loop"

    def with_lambda(self, lam):
        return TreeGraph(self.m, lam, self.loop_rate)

    def descriptor(self):
        d = {"family": self.family, "m": self.m, "lambda": self.lam}
        if self.loop_rate:
            d["loop_rate"] = float(self.loop_rate)
        return d

    def neighbors(self, v):
        s, w = v
        m = self.m
        if w:
            out = [((s, w[:-1]), 1)]
            out.extend(((s, w + (c,)), 1) for c in range(m - 1))
            return out
        if s == 0:
            out = [((1, ()), 1), ((-1, ()), 1)]
            out.extend(((0, (j,)), 1) for j in range(m - 2))
            if self.loop_rate:
                out.append((v, self.loop_rate))
            return out
        g = _sign(s)
        out = [((s - g, ()), 1), ((s + g, ()), 1)]
        out.extend(((s, (j,)), 1) for j in range(m - 2))
        return out

    def children(self, v):
        s, w = v
        if w:
            return [(s, w + (c,)) for c in range(self.m - 1)]
        if s == 0:
            return [(1, ()), (-1, ())] + [(0, (j,)) for j in range(self.m - 2)]
        return [(s + _sign(s), ())] + [(s, (j,)) for j in range(self.m - 2)]

    def parent(self, v):
        s, w = v
        if w:
            return (s, w[:-1])
        if s == 0:
            return None
        return (s - _sign(s), ())

    def depth(self, v):
        return abs(v[0]) + len(v[1])

    def in_subtree(self, v, w):
        if w == self.root:
            return True
        (sv, wv), (sw, ww) = v, w
        if ww:
            return sv == sw and wv[: len(ww)] == ww
        # spine vertex y_sw: everything beyond it along the spine
        return sv * sw > 0 and abs(sv) >= abs(sw)

    @property
    def first_passage(self):
        return first_passage_factor(self.m - 1, self.lam)

    def qbar_bounds(self, v):
        lo, hi = singleton_qbar_bounds(self.m, self.lam)
        if not self.loop_rate:
            return lo, hi
        # the loop only helps survival; a walk from v reaches the root w.p. <= F^d
        f = self.first_passage
        if f is None:
            return 0.0, hi
        return max(0.0, lo - f ** self.depth(v)), hi

    def column(self, v):
        return v[0], len(v[1])

    def sort_key(self, v):
        s, w = v
        return (abs(s) + len(w), s, w)

    def format_vertex(self, v):
        s, w = v
        if v == self.root:
            return "o"
        text = f"y{s}"
        if w:
            text += "." + ".".join(str(c) for c in w)
        return text

    def parse_vertex(self, text):
        text = text.strip()
        if text == "o":
            return self.root
        head, *rest = text.split(".")
        letters = tuple(int(c) for c in rest)
        if head[0] == "x":
            i = int(head[1:])
            return (i - 1, (0,) + letters)
        if head[0] == "y":
            return (int(head[1:]), letters)
        raise ValueError(f"cannot parse tree vertex {text!r}")

    @staticmethod
    def y(n: int):
        return (n, ())

    @staticmethod
    def x(i: int):
        return (i - 1, (0,))

    # rooted addresses: child indices read from the root
    def address(self, v) -> tuple:
        s, w = v
        if s == 0:
            return (2 + w[0],) + w[1:] if w else ()
        head = (0 if s > 0 else 1,) + (0,) * (abs(s) - 1)
        if w:
            return head + (1 + w[0],) + w[1:]
        return head

    def from_address(self, addr) -> Vertex:
        if not addr:
            return self.root
        first = addr[0]
        if first >= 2:
            return (0, (first - 2,) + tuple(addr[1:]))
        g = 1 if first == 0 else -1
        s, k = g, 1
        while k < len(addr) and addr[k] == 0:
            s += g
            k += 1
        if k == len(addr):
            return (s, ())
        return (s, (addr[k] - 1,) + tuple(addr[k + 1:]))


class CombGraph(RateGraph):
    """Comb with axis rates 1 and tooth rates ``alpha`` (up from the axis), ``alpha+1`` (up), 1 (down)."""

    family = "comb"
    tree_like = True

    def __init__(self, alpha, lam: float):
        self.alpha = _exact(alpha)
        self.lam = float(lam)
        self.root = (0, 0)

    def with_lambda(self, lam):
        return CombGraph(self.alpha, lam)

    def descriptor(self):
        return {"family": "comb", "alpha": float(self.alpha) if isinstance(self.alpha, Fraction) else self.alpha,
                "lambda": self.lam}

    def neighbors(self, v):
        x, h = v
        a = self.alpha
        if h == 0:
            return [((x - 1, 0), 1), ((x + 1, 0), 1), ((x, 1), a)]
        return [((x, h - 1), 1), ((x, h + 1), a + 1)]

    def children(self, v):
        x, h = v
        if h:
            return [(x, h + 1)]
        if x == 0:
            return [(1, 0), (-1, 0), (0, 1)]
        return [(x + _sign(x), 0), (x, 1)]

    def parent(self, v):
        x, h = v
        if h:
            return (x, h - 1)
        if x == 0:
            return None
        return (x - _sign(x), 0)

    def depth(self, v):
        return abs(v[0]) + v[1]

    def in_subtree(self, v, w):
        if w == self.root:
            return True
        (xv, hv), (xw, hw) = v, w
        if hw:
            return xv == xw and hv >= hw
        return xv * xw > 0 and abs(xv) >= abs(xw)

    @property
    def first_passage(self):
        return first_passage_factor(float(self.alpha) + 1.0, self.lam)

    def qbar_bounds(self, v):
        return singleton_qbar_bounds(float(self.alpha) + 2.0, self.lam)

    def column(self, v):
        return v

    def sort_key(self, v):
        return (abs(v[0]) + v[1], v[0], v[1])

    def format_vertex(self, v):
        return f"{v[0]},{v[1]}"

    def parse_vertex(self, text):
        text = text.strip()
        if text == "o":
            return self.root
        x, h = text.strip("()").split(",")
        return (int(x), int(h))


class HalfLine(RateGraph):
    """The comb tooth ``V_i`` on its own: base rate ``alpha`` up, then 1 down and ``alpha+1`` up."""

    family = "halfline"
    tree_like = True

    def __init__(self, alpha, lam: float, column: int = 0):
        self.alpha = _exact(alpha)
        self.lam = float(lam)
        self.col = int(column)
        self.root = (self.col, 0)

    def with_lambda(self, lam):
        return HalfLine(self.alpha, lam, self.col)

    def neighbors(self, v):
        i, h = v
        if h == 0:
            return [((i, 1), self.alpha)]
        return [((i, h - 1), 1), ((i, h + 1), self.alpha + 1)]

    def parent(self, v):
        return (v[0], v[1] - 1) if v[1] else None

    def depth(self, v):
        return v[1]

    def children(self, v):
        return [(v[0], v[1] + 1)]

    @property
    def first_passage(self):
        return first_passage_factor(float(self.alpha) + 1.0, self.lam)

    def column(self, v):
        return v

    def sort_key(self, v):
        return (v[1],)

    def format_vertex(self, v):
        return f"{v[0]},{v[1]}"


class GadgetB(RateGraph):
    """Tree whose root joins, at rate ``alpha``, a copy of the right half of the comb.

    Labels are ``("B", x, h)`` with the root at ``x == h == 0``; the copied
    comb column ``x >= 1`` sits at distance ``x`` from the root.
    """

    family = "gadgetB"
    tree_like = True

    def __init__(self, alpha, lam: float):
        self.alpha = _exact(alpha)
        self.lam = float(lam)
        self.root = ("B", 0, 0)

    def with_lambda(self, lam):
        return GadgetB(self.alpha, lam)

    def neighbors(self, v):
        _, x, h = v
        a = self.alpha
        if x == 0:
            return [(("B", 1, 0), a)]
        if h == 0:
            return [(("B", x - 1, 0), 1), (("B", x + 1, 0), 1), (("B", x, 1), a)]
        return [(("B", x, h - 1), 1), (("B", x, h + 1), a + 1)]

    def parent(self, v):
        _, x, h = v
        if h:
            return ("B", x, h - 1)
        return ("B", x - 1, 0) if x else None

    def depth(self, v):
        return v[1] + v[2]

    def children(self, v):
        _, x, h = v
        if h:
            return [("B", x, h + 1)]
        if x == 0:
            return [("B", 1, 0)]
        return [("B", x + 1, 0), ("B", x, 1)]

    @property
    def first_passage(self):
        return first_passage_factor(float(self.alpha) + 1.0, self.lam)

    def sort_key(self, v):
        return (v[1] + v[2], v[1], v[2])


class CombPrime(RateGraph):
    """Comb whose tooth at column ``i`` is replaced by a copy of :class:`GadgetB`."""

    family = "comb'"

    def __init__(self, alpha, lam: float, col: int):
        self.alpha = _exact(alpha)
        self.lam = float(lam)
        self.col = int(col)
        self.root = (0, 0)
        self._comb = CombGraph(alpha, lam)
        self._gadget = GadgetB(alpha, lam)

    def with_lambda(self, lam):
        return CombPrime(self.alpha, lam, self.col)

    def neighbors(self, v):
        if v[0] == "B":
            out = self._gadget.neighbors(v)
            return [(((self.col, 0) if y == self._gadget.root else y), r) for y, r in out]
        x, h = v
        if x == self.col:
            if h:
                raise KeyError(f"{v} is not a vertex of the modified comb")
            return [((x - 1, 0), 1), ((x + 1, 0), 1), (("B", 1, 0), self.alpha)]
        return self._comb.neighbors(v)

    def sort_key(self, v):
        if v[0] == "B":
            return (abs(self.col) + v[1] + v[2], 1, v[1], v[2])
        return (abs(v[0]) + v[1], 0, v[0], v[1])


class SingletonGraph(RateGraph):
    """One vertex with a loop of the given rate: a Galton-Watson process."""

    family = "singleton"
    tree_like = False

    def __init__(self, rate, lam: float):
        self.rate = _exact(rate)
        self.lam = float(lam)
        self.root = 0

    def with_lambda(self, lam):
        return SingletonGraph(self.rate, lam)

    def neighbors(self, v):
        return [(0, self.rate)]

    def qbar_bounds(self, v):
        return singleton_qbar_bounds(float(self.rate), self.lam)


def canonical_automorphism(tree: TreeGraph, a, b):
    """Automorphism of ``tree`` fixing the root and sending ``a`` to ``b``.

    Along the root-to-``a`` path the child index ``a_k`` is swapped with ``b_k``;
    everything off that path keeps its index.  Returns a callable on labels.
    """
    if tree.depth(a) != tree.depth(b):
        raise ValueError("automorphism needs equal distances from the root")
    pa, pb = tree.address(a), tree.address(b)

    def psi(v):
        addr = tree.address(v)
        out = []
        on_path = True
        for k, c in enumerate(addr):
            if on_path and k < len(pa):
                if c == pa[k]:
                    out.append(pb[k])
                elif c == pb[k]:
                    out.append(pa[k])
                    on_path = False
                else:
                    out.append(c)
                    on_path = False
            else:
                out.append(c)
                on_path = False
        return tree.from_address(tuple(out))

    return psi
