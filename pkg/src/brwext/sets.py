"""Named target sets.

Each set answers three questions about a tree-like graph:

* ``contains(graph, v)``: membership;
* ``subtree_kind(graph, w)``: whether the subtree below ``w`` (``w`` not the root)
  lies inside the set (``IN``), misses it (``OUT``) or neither (``MIXED``).
  The answer may be conservative: ``MIXED`` is always safe;
* ``members(graph, radius)``: the members within ``radius`` of the root,
  generated directly rather than by filtering the ball.
"""
from __future__ import annotations

from fractions import Fraction

IN, OUT, MIXED = "in", "out", "mixed"


def _combine(kinds):
    kinds = list(kinds)
    if IN in kinds:
        return IN
    if all(k == OUT for k in kinds):
        return OUT
    return MIXED


def _subtree_members(graph, w, radius):
    if graph.depth(w) > radius:
        return []
    out, stack = [], [w]
    while stack:
        v = stack.pop()
        out.append(v)
        if graph.depth(v) < radius:
            stack.extend(graph.children(v))
    return out


def _side_range(s):
    """Spine indices reached below spine vertex ``s`` (``s != 0``)."""
    return (s, None) if s > 0 else (None, s)


class TargetSet:
    name = "?"

    def contains(self, graph, v) -> bool:
        raise NotImplementedError

    def subtree_kind(self, graph, w) -> str:
        return MIXED

    def members(self, graph, radius):
        return [v for v in graph.ball(radius) if self.contains(graph, v)]

    def __or__(self, other):
        return Union((self, other))

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Full(TargetSet):
    name = "X"

    def contains(self, graph, v):
        return True

    def subtree_kind(self, graph, w):
        return IN

    def members(self, graph, radius):
        return graph.ball(radius)


class Empty(TargetSet):
    name = "{}"

    def contains(self, graph, v):
        return False

    def subtree_kind(self, graph, w):
        return OUT

    def members(self, graph, radius):
        return []


class Explicit(TargetSet):
    def __init__(self, vertices, name=None):
        self.vertices = frozenset(vertices)
        self.name = name or "{" + ",".join(sorted(map(str, self.vertices))) + "}"

    def contains(self, graph, v):
        return v in self.vertices

    def subtree_kind(self, graph, w):
        return MIXED if any(graph.in_subtree(a, w) for a in self.vertices) else OUT

    def members(self, graph, radius):
        return [v for v in self.vertices if graph.depth(v) <= radius]


def Singleton(v, name=None):
    return Explicit((v,), name=name or f"{{{v}}}")


class Subtree(TargetSet):
    """All descendants of ``top`` (``top`` included)."""

    def __init__(self, top, name=None):
        self.top = top
        self.name = name or f"T({top})"

    def contains(self, graph, v):
        return graph.in_subtree(v, self.top)

    def subtree_kind(self, graph, w):
        if self.top == graph.root or graph.in_subtree(w, self.top):
            return IN
        if graph.in_subtree(self.top, w):
            return MIXED
        return OUT

    def members(self, graph, radius):
        return _subtree_members(graph, self.top, radius)


class Spine(TargetSet):
    """Spine (tree) or axis (comb) vertices with index in ``[lo, hi]`` (``None`` = unbounded)."""

    def __init__(self, lo=None, hi=None, name=None):
        self.lo, self.hi = lo, hi
        self.name = name or ("spine" if lo is None and hi is None else f"spine[{lo},{hi}]")

    def _ok(self, s):
        return (self.lo is None or s >= self.lo) and (self.hi is None or s <= self.hi)

    def contains(self, graph, v):
        s, h = graph.column(v)
        return h == 0 and self._ok(s)

    def subtree_kind(self, graph, w):
        s, h = graph.column(w)
        if h:
            return OUT
        a, b = _side_range(s)
        a = self.lo if a is None else (a if self.lo is None else max(a, self.lo))
        b = self.hi if b is None else (b if self.hi is None else min(b, self.hi))
        if a is not None and b is not None and a > b:
            return OUT
        return MIXED

    def members(self, graph, radius):
        out = []
        for s in range(-radius, radius + 1):
            if self._ok(s):
                out.append(_spine_vertex(graph, s))
        return out


def _spine_vertex(graph, s):
    return (s, ()) if graph.family.startswith("tree") else (s, 0)


class Tooth(TargetSet):
    """Column ``i``: the comb tooth ``V_i``, or its preimage on the tree."""

    def __init__(self, i, name=None):
        self.i = int(i)
        self.name = name or f"V{self.i}"

    def contains(self, graph, v):
        return graph.column(v)[0] == self.i

    def subtree_kind(self, graph, w):
        s, h = graph.column(w)
        if h:
            return IN if s == self.i else OUT
        if (s > 0 and self.i >= s) or (s < 0 and self.i <= s):
            return MIXED
        return OUT

    def members(self, graph, radius):
        base = _spine_vertex(graph, self.i)
        if graph.depth(base) > radius:
            return []
        out = [base]
        for c in graph.children(base):
            if graph.column(c)[1] >= 1:
                out.extend(_subtree_members(graph, c, radius))
        return out


class IndexUnion(TargetSet):
    """Union of ``T(x_i)`` (family ``"Tx"``) or of teeth ``V_i`` (family ``"V"``).

    ``indices`` is a finite set of positive integers; ``tail`` adds every
    ``i >= tail``.
    """

    def __init__(self, indices, family="Tx", tail=None, name=None):
        self.indices = frozenset(int(i) for i in indices)
        if any(i < 1 for i in self.indices):
            raise ValueError("indices must be positive")
        if family not in ("Tx", "V"):
            raise ValueError(f"unknown family {family!r}")
        self.family = family
        self.tail = tail
        if name is None:
            parts = ",".join(str(i) for i in sorted(self.indices))
            if tail is not None:
                parts += f",{tail}+" if parts else f"{tail}+"
            name = f"U{family}[{parts}]"
        self.name = name

    @classmethod
    def from_bitmask(cls, mask: int, family="Tx", **kw):
        if not 0 <= mask < 2 ** 64:
            raise ValueError("bitmask must fit in 64 bits")
        return cls([k + 1 for k in range(64) if mask >> k & 1], family=family, **kw)

    def has(self, i):
        return i in self.indices or (self.tail is not None and i >= self.tail)

    def top_index(self):
        if self.tail is not None:
            return None
        return max(self.indices, default=0)

    def binary_value(self) -> Fraction:
        """Exact value of ``sum 2**-i`` over the index set."""
        finite = (i for i in self.indices if self.tail is None or i < self.tail)
        val = sum((Fraction(1, 2 ** i) for i in finite), Fraction(0))
        if self.tail is not None:
            val += Fraction(2, 2 ** self.tail)
        return val

    def contains(self, graph, v):
        s, word = v
        if self.family == "V":
            return self.has(graph.column(v)[0])
        return bool(word) and word[0] == 0 and s >= 0 and self.has(s + 1)

    def subtree_kind(self, graph, w):
        if self.family == "V":
            s, h = graph.column(w)
            if h:
                return IN if self.has(s) else OUT
            if s < 0:
                return OUT
            top = self.top_index()
            return MIXED if top is None or top >= s else OUT
        s, word = w
        if word:
            return IN if (word[0] == 0 and s >= 0 and self.has(s + 1)) else OUT
        if s < 0:
            return OUT
        top = self.top_index()
        return MIXED if top is None or top >= s + 1 else OUT

    def members(self, graph, radius):
        out = []
        hi = radius + 1
        for i in range(1, hi + 1):
            if not self.has(i):
                continue
            if self.family == "V":
                out.extend(Tooth(i).members(graph, radius))
            else:
                out.extend(_subtree_members(graph, (i - 1, (0,)), radius))
        return out


class Union(TargetSet):
    def __init__(self, parts, name=None):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, Union) else [p])
        self.parts = tuple(flat)
        self.name = name or "|".join(p.name for p in self.parts)

    def contains(self, graph, v):
        return any(p.contains(graph, v) for p in self.parts)

    def subtree_kind(self, graph, w):
        return _combine(p.subtree_kind(graph, w) for p in self.parts)

    def members(self, graph, radius):
        seen = {}
        for p in self.parts:
            for v in p.members(graph, radius):
                seen[v] = None
        return list(seen)


def parse_set(graph, text: str) -> TargetSet:
    """Parse a set expression such as ``"T:y3"``, ``"pt:o"``, ``"tx:1,2"``, ``"V:2"``,
    ``"X"``, ``"spine"`` or a ``|``-separated union of these."""
    text = text.strip()
    if "|" in text:
        return Union([parse_set(graph, t) for t in text.split("|")])
    if text in ("X", "full"):
        return Full()
    if text in ("empty", "{}"):
        return Empty()
    if text in ("spine", "axis"):
        return Spine()
    kind, _, arg = text.partition(":")
    kind = kind.lower()
    if kind == "t":
        v = graph.parse_vertex(arg)
        return Subtree(v, name=f"T({arg})")
    if kind == "pt":
        return Singleton(graph.parse_vertex(arg), name=f"{{{arg}}}")
    if kind == "pts":
        return Explicit([graph.parse_vertex(a) for a in arg.split(";")], name=f"{{{arg}}}")
    if kind == "v":
        return Tooth(int(arg))
    if kind in ("tx", "uv"):
        family = "Tx" if kind == "tx" else "V"
        idx, tail = [], None
        for tok in filter(None, arg.split(",")):
            if tok.endswith("+"):
                tail = int(tok[:-1])
            else:
                idx.append(int(tok))
        return IndexUnion(idx, family=family, tail=tail)
    if kind == "mask":
        return IndexUnion.from_bitmask(int(arg, 0))
    raise ValueError(f"cannot parse set expression {text!r}")
