"""Finite posets, pairs, and the combinatorial constructions built on them."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .homalg import ZZ, ChainComplex, SparseMatrix
from .verdict import Verdict, label


class PosetError(ValueError):
    pass


class CycleDetected(PosetError):
    pass


class DuplicateElement(PosetError):
    pass


class UnknownElement(PosetError, KeyError):
    pass


class FunctorialityViolation(PosetError):
    pass


class NotCylinderShaped(PosetError):
    pass


class NotAPoset(PosetError):
    pass


def _sorted(elements: Iterable[Hashable]) -> list:
    elements = list(elements)
    try:
        return sorted(elements)
    except TypeError:
        return sorted(elements, key=label)


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class Poset:
    """Finite poset with bitmask down/up sets over a sorted element list."""

    __slots__ = ("elements", "_index", "_down", "_up", "_covers", "_chains", "_by_top", "_topo")

    def __init__(self, elements: Sequence, down: Sequence[int]):
        self.elements = tuple(elements)
        self._index = {x: i for i, x in enumerate(self.elements)}
        if len(self._index) != len(self.elements):
            raise DuplicateElement("duplicate element identifiers")
        self._down = list(down)
        n = len(self.elements)
        up = [0] * n
        for i, m in enumerate(self._down):
            for j in _bits(m):
                up[j] |= 1 << i
        self._up = up
        self._covers = None
        self._chains = None
        self._by_top = None
        self._topo = None

    # construction -------------------------------------------------------

    @classmethod
    def from_covers(cls, elements: Iterable, covers: Iterable[tuple]) -> "Poset":
        """Build from a generating relation; it is closed and reduced."""
        elements = list(elements)
        seen = set()
        for x in elements:
            if x in seen:
                raise DuplicateElement(f"duplicate element {label(x)!r}")
            seen.add(x)
        elements = _sorted(elements)
        index = {x: i for i, x in enumerate(elements)}
        g = nx.DiGraph()
        g.add_nodes_from(range(len(elements)))
        for a, b in covers:
            for z in (a, b):
                if z not in index:
                    raise UnknownElement(f"unknown element {label(z)!r}")
            if a == b:
                continue
            g.add_edge(index[a], index[b])
        if not nx.is_directed_acyclic_graph(g):
            cyc = nx.find_cycle(g)
            raise CycleDetected("cycle through " + ", ".join(label(elements[u]) for u, _ in cyc))
        down = [1 << i for i in range(len(elements))]
        for v in nx.lexicographical_topological_sort(g):
            for u in g.predecessors(v):
                down[v] |= down[u]
        return cls(elements, down)

    @classmethod
    def from_leq(cls, elements: Iterable, leq: Callable[[object, object], bool]) -> "Poset":
        elements = _sorted(elements)
        n = len(elements)
        down = [0] * n
        for i, b in enumerate(elements):
            for j, a in enumerate(elements):
                if i == j or leq(a, b):
                    down[i] |= 1 << j
        for i in range(n):
            for j in _bits(down[i]):
                if j != i and (down[j] >> i) & 1:
                    raise CycleDetected(f"{label(elements[i])} and {label(elements[j])} are mutually related")
                if down[j] & ~down[i]:
                    raise NotAPoset("relation is not transitive")
        return cls(elements, down)

    @classmethod
    def discrete(cls, elements: Iterable) -> "Poset":
        elements = _sorted(elements)
        return cls(elements, [1 << i for i in range(len(elements))])

    @classmethod
    def chain(cls, n: int) -> "Poset":
        """The poset ``[n] = {0 < 1 < ... < n}``."""
        return cls(list(range(n + 1)), [(1 << (i + 1)) - 1 for i in range(n + 1)])

    # basic queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, x) -> bool:
        return x in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Poset) and self.elements == other.elements and self._down == other._down

    def __hash__(self) -> int:
        return hash((self.elements, tuple(self._down)))

    def __repr__(self) -> str:
        return f"Poset({len(self)} elements, {len(self.covers)} covers)"

    def idx(self, x) -> int:
        try:
            return self._index[x]
        except KeyError:
            raise UnknownElement(f"unknown element {label(x)!r}") from None

    def leq(self, a, b) -> bool:
        return bool((self._down[self.idx(b)] >> self.idx(a)) & 1)

    def lt(self, a, b) -> bool:
        return a != b and self.leq(a, b)

    def leq_idx(self, i: int, j: int) -> bool:
        return bool((self._down[j] >> i) & 1)

    def down_mask(self, i: int) -> int:
        return self._down[i]

    def up_mask(self, i: int) -> int:
        return self._up[i]

    def mask(self, subset: Iterable) -> int:
        m = 0
        for x in subset:
            m |= 1 << self.idx(x)
        return m

    def from_mask(self, m: int) -> list:
        return [self.elements[i] for i in _bits(m)]

    def down(self, x) -> list:
        return self.from_mask(self._down[self.idx(x)])

    def up(self, x) -> list:
        return self.from_mask(self._up[self.idx(x)])

    def strict_down(self, x) -> list:
        i = self.idx(x)
        return self.from_mask(self._down[i] & ~(1 << i))

    def strict_up(self, x) -> list:
        i = self.idx(x)
        return self.from_mask(self._up[i] & ~(1 << i))

    @property
    def cover_idx(self) -> list[tuple[int, int]]:
        if self._covers is None:
            out = []
            for j in range(len(self)):
                below = self._down[j] & ~(1 << j)
                for i in _bits(below):
                    between = self._up[i] & below & ~(1 << i)
                    if not between:
                        out.append((i, j))
            out.sort()
            self._covers = out
        return self._covers

    @property
    def covers(self) -> list[tuple]:
        e = self.elements
        return [(e[i], e[j]) for i, j in self.cover_idx]

    def relations(self) -> list[tuple]:
        """All strict comparable pairs ``(a, b)`` with ``a < b``."""
        e = self.elements
        return [(e[i], e[j]) for j in range(len(self)) for i in _bits(self._down[j] & ~(1 << j))]

    def topological_order(self) -> list[int]:
        if self._topo is None:
            self._topo = sorted(range(len(self)), key=lambda i: (bin(self._down[i]).count("1"), i))
        return self._topo

    def minimal(self) -> list:
        return [x for i, x in enumerate(self.elements) if self._down[i] == 1 << i]

    def maximal(self) -> list:
        return [x for i, x in enumerate(self.elements) if self._up[i] == 1 << i]

    def minimum(self):
        full = (1 << len(self)) - 1
        for i, x in enumerate(self.elements):
            if self._up[i] == full:
                return x
        return None

    def maximum(self):
        full = (1 << len(self)) - 1
        for i, x in enumerate(self.elements):
            if self._down[i] == full:
                return x
        return None

    # chains -------------------------------------------------------------

    def chains(self) -> list[tuple[int, ...]]:
        """Strictly ascending chains as index tuples (the nerve's simplices)."""
        if self._chains is None:
            out: list[tuple[int, ...]] = []
            up = [sorted(_bits(self._up[i] & ~(1 << i))) for i in range(len(self))]

            def grow(ch):
                out.append(ch)
                for j in up[ch[-1]]:
                    grow(ch + (j,))

            for i in range(len(self)):
                grow((i,))
            out.sort(key=lambda c: (len(c), c))
            self._chains = out
        return self._chains

    def chains_by_top(self) -> dict[int, list[tuple[int, ...]]]:
        if self._by_top is None:
            d: dict[int, list] = {i: [] for i in range(len(self))}
            for c in self.chains():
                d[c[-1]].append(c)
            self._by_top = d
        return self._by_top

    def count_chains(self) -> int:
        if self._chains is not None:
            return len(self._chains)
        ending = {}
        for i in self.topological_order():
            below = self._down[i] & ~(1 << i)
            ending[i] = 1 + sum(ending[j] for j in _bits(below))
        return sum(ending.values())

    def dimension(self) -> int:
        """Length of a longest chain (number of elements minus one)."""
        height = {}
        for i in self.topological_order():
            below = self._down[i] & ~(1 << i)
            height[i] = 1 + max((height[j] for j in _bits(below)), default=-1)
        return max(height.values(), default=-1)

    # derived posets -----------------------------------------------------

    def sub(self, subset: Iterable) -> "Poset":
        keep = sorted({self.idx(x) for x in subset})
        pos = {i: k for k, i in enumerate(keep)}
        down = []
        for i in keep:
            m = 0
            for j in _bits(self._down[i]):
                k = pos.get(j)
                if k is not None:
                    m |= 1 << k
            down.append(m)
        return Poset([self.elements[i] for i in keep], down)

    def op(self) -> "Poset":
        return Poset(self.elements, self._up)

    def relabel(self, mapping: Mapping) -> "Poset":
        new = [mapping[x] for x in self.elements]
        return Poset.from_covers(new, [(mapping[a], mapping[b]) for a, b in self.covers])

    def components(self) -> list[frozenset]:
        """Connected components of the comparability graph."""
        g = nx.Graph()
        g.add_nodes_from(range(len(self)))
        g.add_edges_from(self.cover_idx)
        comps = [frozenset(self.elements[i] for i in c) for c in nx.connected_components(g)]
        return sorted(comps, key=lambda c: min(self.idx(x) for x in c))

    def is_down_closed(self, subset: Iterable) -> bool:
        m = self.mask(subset)
        return all(self._down[i] & ~m == 0 for i in _bits(m))

    def is_up_closed(self, subset: Iterable) -> bool:
        m = self.mask(subset)
        return all(self._up[i] & ~m == 0 for i in _bits(m))

    def down_closure(self, subset: Iterable) -> frozenset:
        m = 0
        for x in subset:
            m |= self._down[self.idx(x)]
        return frozenset(self.from_mask(m))

    def up_closure(self, subset: Iterable) -> frozenset:
        m = 0
        for x in subset:
            m |= self._up[self.idx(x)]
        return frozenset(self.from_mask(m))

    def is_transitively_reduced(self, covers: Iterable[tuple]) -> bool:
        return sorted(self.idx(a) * len(self) + self.idx(b) for a, b in covers) == sorted(
            i * len(self) + j for i, j in self.cover_idx)

    def to_json(self) -> dict:
        return {"elements": [label(x) for x in self.elements],
                "covers": [[label(a), label(b)] for a, b in self.covers]}

    @classmethod
    def from_json(cls, data: Mapping) -> "Poset":
        return cls.from_covers(list(data["elements"]), [tuple(c) for c in data.get("covers", [])])

    def stringified(self) -> tuple["Poset", dict]:
        """Relabel every element by its string label."""
        mapping = {x: label(x) for x in self.elements}
        if len(set(mapping.values())) != len(mapping):
            raise DuplicateElement("labels collide")
        return self.relabel(mapping), mapping


# ---------------------------------------------------------------------------
# down-closed subsets


def is_left_closed(P: Poset, S: Iterable) -> bool:
    return P.is_down_closed(S)


def complement(P: Poset, S: Iterable) -> frozenset:
    S = set(S)
    for x in S:
        P.idx(x)
    return frozenset(x for x in P.elements if x not in S)


def union(*sets: Iterable) -> frozenset:
    return frozenset().union(*map(frozenset, sets))


def intersection(*sets: Iterable) -> frozenset:
    sets = [frozenset(s) for s in sets]
    return frozenset.intersection(*sets) if sets else frozenset()


def down_sets(P: Poset) -> list[frozenset]:
    """All down-closed subsets."""
    order = P.topological_order()
    masks = []

    def rec(k, mask):
        if k == len(order):
            masks.append(mask)
            return
        i = order[k]
        rec(k + 1, mask)
        if P.down_mask(i) & ~(1 << i) & ~mask == 0:
            rec(k + 1, mask | (1 << i))

    rec(0, 0)
    return sorted((frozenset(P.from_mask(m)) for m in masks), key=lambda s: (len(s), sorted(map(label, s))))


# ---------------------------------------------------------------------------
# maps and pairs


class PosetMap:
    """Order-preserving map given by an assignment on elements."""

    __slots__ = ("source", "target", "assignment", "_idx")

    def __init__(self, source: Poset, target: Poset, assignment: Mapping, check: bool = True):
        self.source = source
        self.target = target
        self.assignment = dict(assignment)
        for x in source:
            if x not in self.assignment:
                raise UnknownElement(f"map undefined at {label(x)!r}")
            if self.assignment[x] not in target:
                raise UnknownElement(f"image {label(self.assignment[x])!r} not in target")
        self._idx = [target.idx(self.assignment[x]) for x in source.elements]
        if check:
            for i, j in source.cover_idx:
                if not target.leq_idx(self._idx[i], self._idx[j]):
                    a, b = source.elements[i], source.elements[j]
                    raise PosetError(f"map is not order-preserving on {label(a)} < {label(b)}")

    def __call__(self, x):
        return self.assignment[x]

    def idx_map(self) -> list[int]:
        return self._idx

    def compose(self, other: "PosetMap") -> "PosetMap":
        """``self o other``."""
        return PosetMap(other.source, self.target, {x: self(other(x)) for x in other.source}, check=False)

    @classmethod
    def identity(cls, P: Poset) -> "PosetMap":
        return cls(P, P, {x: x for x in P}, check=False)

    @classmethod
    def inclusion(cls, P: Poset, S: Iterable) -> "PosetMap":
        Q = P.sub(S)
        return cls(Q, P, {x: x for x in Q}, check=False)

    def is_fully_faithful(self) -> bool:
        n = len(self.source)
        if len(set(self._idx)) != n:
            return False
        for i in range(n):
            for j in range(n):
                if self.source.leq_idx(i, j) != self.target.leq_idx(self._idx[i], self._idx[j]):
                    return False
        return True


@dataclass(frozen=True)
class PosetPair:
    """A poset with a down-closed boundary."""

    total: Poset
    boundary: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "boundary", frozenset(self.boundary))
        for x in self.boundary:
            self.total.idx(x)
        if not self.total.is_down_closed(self.boundary):
            raise PosetError("boundary is not down-closed")

    @property
    def interior(self) -> frozenset:
        return frozenset(x for x in self.total if x not in self.boundary)

    def boundary_poset(self) -> Poset:
        return self.total.sub(self.boundary)

    def interior_poset(self) -> Poset:
        return self.total.sub(self.interior)

    def boundary_mask(self) -> int:
        return self.total.mask(self.boundary)

    def is_absolute(self) -> bool:
        return not self.boundary

    def sub_pair(self, Y: Iterable, dY: Iterable) -> "PosetPair":
        Y = frozenset(Y)
        if not self.total.is_down_closed(Y):
            raise PosetError("sub-pair total is not down-closed")
        return PosetPair(self.total.sub(Y), frozenset(dY))

    def components(self) -> list["PosetPair"]:
        return [PosetPair(self.total.sub(c), self.boundary & c) for c in self.total.components()]

    def relabel(self, mapping: Mapping) -> "PosetPair":
        return PosetPair(self.total.relabel(mapping), frozenset(mapping[x] for x in self.boundary))

    def to_json(self) -> dict:
        return {"poset": self.total.to_json(), "boundary": sorted(label(x) for x in self.boundary)}

    @classmethod
    def from_json(cls, data: Mapping) -> "PosetPair":
        return cls(Poset.from_json(data["poset"]), frozenset(data.get("boundary", [])))


def cube(n: int) -> PosetPair:
    """``([1]^n, punctured cube)`` with elements as bit strings."""
    if n == 0:
        return PosetPair(Poset.discrete(["*"]), frozenset())
    elements = ["".join(b) for b in itertools.product("01", repeat=n)]
    P = Poset.from_leq(elements, lambda a, b: all(x <= y for x, y in zip(a, b)))
    top = "1" * n
    return PosetPair(P, frozenset(e for e in elements if e != top))


# ---------------------------------------------------------------------------
# twisted arrows, Grothendieck constructions, commas


@dataclass(frozen=True)
class TwistedArrow:
    poset: Poset
    base: Poset
    s: PosetMap  # into base.op()
    t: PosetMap


def twisted_arrow(P: Poset) -> TwistedArrow:
    """Comparable pairs ``(x, y)``; ``(x,y) <= (x',y')`` iff ``x' <= x`` and ``y <= y'``."""
    pairs = [(x, y) for y in P.elements for x in P.down(y)]
    covers = []
    for a, b in P.covers:
        for x in P.down(a):
            covers.append(((x, a), (x, b)))
        for y in P.up(b):
            covers.append(((b, y), (a, y)))
    T = Poset.from_covers(pairs, covers)
    s = PosetMap(T, P.op(), {p: p[0] for p in T}, check=False)
    t = PosetMap(T, P, {p: p[1] for p in T}, check=False)
    return TwistedArrow(T, P, s, t)


def _composites(I: Poset, values: Mapping, transitions: Mapping, covariant: bool) -> dict:
    """All composite transition maps, checking path independence."""
    comp: dict[tuple, dict] = {}
    for x in I:
        comp[(x, x)] = {v: v for v in values[x]}
    for (a, b), m in transitions.items():
        if not I.leq(a, b) or a == b:
            raise FunctorialityViolation(f"({label(a)}, {label(b)}) is not a cover")
        src, tgt = (a, b) if covariant else (b, a)
        if set(m) != set(values[src]):
            raise FunctorialityViolation(f"transition {label(a)}<{label(b)} is not total")
        Psrc, Ptgt = values[src], values[tgt]
        for y in m.values():
            if y not in Ptgt:
                raise UnknownElement(f"transition {label(a)}<{label(b)} hits {label(y)!r}")
        for u, v in Psrc.covers:
            if not Ptgt.leq(m[u], m[v]):
                raise FunctorialityViolation(f"transition {label(a)}<{label(b)} is not order-preserving")
    missing = [c for c in I.covers if c not in transitions]
    if missing:
        raise FunctorialityViolation(f"no transition on cover {label(missing[0])}")
    order = I.topological_order()
    rank = {i: k for k, i in enumerate(order)}
    for j in order:
        y = I.elements[j]
        below = sorted(_bits(I.down_mask(j) & ~(1 << j)), key=lambda i: -rank[i])
        for i in below:
            x = I.elements[i]
            result = None
            for (a, b), m in transitions.items():
                if a == x and I.leq(b, y):
                    rest = comp[(b, y)]
                    if covariant:
                        cand = {v: rest[m[v]] for v in values[x]}
                    else:
                        cand = {v: m[rest[v]] for v in values[y]}
                    if result is None:
                        result = cand
                    elif cand != result:
                        raise FunctorialityViolation(f"composites from {label(x)} to {label(y)} disagree")
            comp[(x, y)] = result
    return comp


def grothendieck(I: Poset, values: Mapping, transitions: Mapping, variance: str = "cocartesian"):
    """Total poset of a strict diagram ``I -> Posets`` and its projection.

    ``cocartesian``: transitions go ``X(i) -> X(j)`` for ``i < j`` and
    ``(i,x) <= (j,y)`` iff ``i <= j`` and ``X(i<j)(x) <= y``.
    ``cartesian``: transitions go ``X(j) -> X(i)`` and
    ``(i,x) <= (j,y)`` iff ``i <= j`` and ``x <= X(i<j)(y)``.
    """
    if variance not in ("cocartesian", "cartesian"):
        raise ValueError(variance)
    cov = variance == "cocartesian"
    comp = _composites(I, values, transitions, cov)
    elements = [(i, x) for i in I.elements for x in values[i].elements]
    rel = [((i, a), (i, b)) for i in I.elements for a, b in values[i].covers]
    for a, b in I.covers:
        m = comp[(a, b)]
        if cov:
            for x in values[a]:
                rel.append(((a, x), (b, m[x])))
        else:
            for y in values[b]:
                rel.append(((a, m[y]), (b, y)))
    P = Poset.from_covers(elements, rel)
    proj = PosetMap(P, I, {e: e[0] for e in P}, check=False)
    return P, proj


def comma_under(f: PosetMap, q) -> Poset:
    """``{p : q <= f(p)}``."""
    j = f.target.idx(q)
    up = f.target.up_mask(j)
    return f.source.sub([x for x, k in zip(f.source.elements, f.idx_map()) if (up >> k) & 1])


def comma_over(f: PosetMap, q) -> Poset:
    """``{p : f(p) <= q}``."""
    j = f.target.idx(q)
    down = f.target.down_mask(j)
    return f.source.sub([x for x, k in zip(f.source.elements, f.idx_map()) if (down >> k) & 1])


# ---------------------------------------------------------------------------
# order complexes, contractibility, finality


@dataclass(frozen=True)
class SimplicialComplex:
    """Simplices as ascending element tuples, grouped by dimension."""

    vertices: tuple
    simplices: dict

    def dim(self) -> int:
        return max(self.simplices, default=-1)

    def count(self, k: int) -> int:
        return len(self.simplices.get(k, ()))

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * len(v) for k, v in self.simplices.items())


def order_complex(P: Poset) -> SimplicialComplex:
    e = P.elements
    simp: dict[int, list] = {}
    for c in P.chains():
        simp.setdefault(len(c) - 1, []).append(tuple(e[i] for i in c))
    return SimplicialComplex(e, simp)


def chain_complex_of(P: Poset, reduced: bool = False, ring=ZZ) -> ChainComplex:
    """Simplicial chains of the order complex (augmented when ``reduced``)."""
    chains = P.chains()
    index: dict[tuple, int] = {}
    ranks: dict[int, int] = {}
    for c in chains:
        n = len(c) - 1
        index[c] = ranks.get(n, 0)
        ranks[n] = ranks.get(n, 0) + 1
    entries: dict[int, list] = {}
    for c in chains:
        n = len(c) - 1
        if n == 0:
            if reduced:
                entries.setdefault(0, []).append((0, index[c], 1))
            continue
        lst = entries.setdefault(n, [])
        for i in range(n + 1):
            face = c[:i] + c[i + 1:]
            lst.append((index[face], index[c], -1 if i % 2 else 1))
    if reduced and chains:
        ranks[-1] = 1
    d = {n: SparseMatrix.from_entries(ranks.get(n - 1, 0), ranks[n], lst) for n, lst in entries.items()}
    return ChainComplex(ring, ranks, d, check=False)


def _free_reduce(word: list[tuple[int, int]]) -> list[tuple[int, int]]:
    out: list[tuple[int, int]] = []
    for g in word:
        if out and out[-1][0] == g[0] and out[-1][1] == -g[1]:
            out.pop()
        else:
            out.append(g)
    while len(out) >= 2 and out[0][0] == out[-1][0] and out[0][1] == -out[-1][1]:
        out = out[1:-1]
    return out


def edge_path_group(P: Poset) -> tuple[int, list[list[tuple[int, int]]]] | None:
    """Tietze-simplified presentation of the fundamental group of a connected poset.

    Returns ``(number of generators, relators)`` after simplification.
    """
    n = len(P)
    if n == 0:
        return None
    g = nx.Graph()
    g.add_nodes_from(range(n))
    edges = []
    for j in range(n):
        for i in _bits(P.down_mask(j) & ~(1 << j)):
            edges.append((i, j))
            g.add_edge(i, j)
    if nx.number_connected_components(g) != 1:
        return None
    tree = set()
    for u, v in nx.bfs_edges(g, 0):
        tree.add((min(u, v), max(u, v)) if P.leq_idx(min(u, v), max(u, v)) else (max(u, v), min(u, v)))
    gen = {e: k for k, e in enumerate(e for e in edges if e not in tree)}
    rels = []
    for c in P.chains():
        if len(c) != 3:
            continue
        x, y, z = c
        word = []
        for e, s in (((x, y), 1), ((y, z), 1), ((x, z), -1)):
            if e in gen:
                word.append((gen[e], s))
        word = _free_reduce(word)
        if word:
            rels.append(word)
    alive = set(gen.values())
    changed = True
    while changed:
        changed = False
        rels = [r for r in (_free_reduce(r) for r in rels) if r]
        for r in rels:
            counts: dict[int, int] = {}
            for gg, _ in r:
                counts[gg] = counts.get(gg, 0) + 1
            once = [gg for gg, c in counts.items() if c == 1]
            if not once:
                continue
            victim = once[0]
            k = next(t for t, (gg, _) in enumerate(r) if gg == victim)
            s = r[k][1]
            rest = r[k + 1:] + r[:k]
            # victim^s * rest = 1, so victim = rest^{-1} when s = 1
            repl = [(gg, -e) for gg, e in reversed(rest)]
            if s == -1:
                repl = rest
            new = []
            for rr in rels:
                if rr is r:
                    continue
                w = []
                for gg, e in rr:
                    if gg == victim:
                        w.extend(repl if e == 1 else [(h, -f) for h, f in reversed(repl)])
                    else:
                        w.append((gg, e))
                new.append(w)
            rels = new
            alive.discard(victim)
            changed = True
            break
    return len(alive), rels


def is_weakly_contractible(P: Poset) -> Verdict:
    if len(P) == 0:
        return Verdict(False, "contractible", detail={"reason": "empty"})
    if P.minimum() is not None or P.maximum() is not None:
        return Verdict(True, "contractible", detail={"reason": "cone point"})
    H = chain_complex_of(P, reduced=True).homology()
    if not H.is_zero():
        return Verdict(False, "contractible", detail={"reason": "reduced homology", "homology": str(H)})
    pres = edge_path_group(P)
    if pres is None:
        return Verdict(False, "contractible", detail={"reason": "disconnected"})
    ngen, rels = pres
    if ngen == 0:
        return Verdict(True, "contractible", detail={"reason": "acyclic and simply connected"},
                       certification="homology + edge-path group")
    return Verdict(False, "contractible",
                   detail={"reason": "edge-path group not shown trivial", "generators": ngen,
                           "relators": len(rels)},
                   certification="homology + edge-path group")


def is_final_inclusion(P: Poset, S: Iterable) -> Verdict:
    """Quillen A: every ``{s in S : x <= s}`` must be weakly contractible."""
    smask = P.mask(S)
    for i, x in enumerate(P.elements):
        comma = P.from_mask(P.up_mask(i) & smask)
        if (smask >> i) & 1:
            continue  # x itself is a minimum of its comma
        v = is_weakly_contractible(P.sub(comma))
        if not v.ok:
            return Verdict(False, "final", witness=x, detail=v.detail)
    return Verdict(True, "final")


# ---------------------------------------------------------------------------
# complemented sub-pairs


def check_complemented(pair: PosetPair, Y: Iterable, dY: Iterable, Z: Iterable, dZ: Iterable) -> Verdict:
    P = pair.total
    Y, dY, Z, dZ = map(frozenset, (Y, dY, Z, dZ))
    dX = pair.boundary
    X = frozenset(P.elements)
    W = Y & Z
    problems = []
    for name, S in (("Y", Y), ("Z", Z)):
        if not P.is_down_closed(S):
            problems.append(f"{name} not down-closed")
    for name, S, T in (("dY", dY, Y), ("dZ", dZ, Z)):
        if not S <= T or not P.sub(T).is_down_closed(S):
            problems.append(f"{name} not a down-closed part of its total")
    if Y | Z != X:
        problems.append("Y and Z do not cover X")
    if dY != (dX & Y) | W:
        problems.append("dY != (dX & Y) | W")
    if dZ != (dX & Z) | W:
        problems.append("dZ != (dX & Z) | W")
    if problems:
        return Verdict(False, "complemented", detail={"failures": problems})
    dW = dX & W
    f1 = is_final_inclusion(P.sub(Z), Z - W)
    f2 = is_final_inclusion(P.sub(dZ), dZ - dW)
    if not f1.ok:
        return Verdict(False, "complemented", witness=f1.witness,
                       detail={"failures": ["Z - W not final in Z"], "finality": f1.detail})
    if not f2.ok:
        return Verdict(False, "complemented", witness=f2.witness,
                       detail={"failures": ["dZ - dW not final in dZ"], "finality": f2.detail})
    return Verdict(True, "complemented", detail={"W": sorted(map(label, W))})


def candidate_complements(pair: PosetPair, Y: Iterable, dY: Iterable, limit: int = 1 << 12):
    """Down-closed ``Z`` compatible with ``(Y, dY)``; yields ``(Z, dZ)``."""
    P = pair.total
    Y, dY = frozenset(Y), frozenset(dY)
    rest = frozenset(P.elements) - Y
    lower = P.down_closure(rest | (dY - pair.boundary))
    upper = rest | dY
    if not lower <= upper:
        return
    free = sorted(upper - lower, key=P.idx)
    if 1 << len(free) > limit:
        raise PosetError(f"too many complement candidates ({len(free)} free elements)")
    for r in range(len(free) + 1):
        for extra in itertools.combinations(free, r):
            Z = lower | frozenset(extra)
            if P.is_down_closed(Z):
                W = Y & Z
                yield Z, (pair.boundary & Z) | W


def find_complement(pair: PosetPair, Y: Iterable, dY: Iterable) -> Verdict:
    last = None
    for Z, dZ in candidate_complements(pair, Y, dY):
        v = check_complemented(pair, Y, dY, Z, dZ)
        if v.ok:
            v.detail["Z"] = sorted(map(label, Z))
            v.detail["dZ"] = sorted(map(label, dZ))
            v.witness = (Z, dZ)
            return v
        last = v
    out = Verdict(False, "complemented", detail={"reason": "no complement found"})
    if last is not None:
        out.detail["last_failure"] = last.detail
        out.witness = last.witness
    return out


def complemented_cover(pair: PosetPair, cover: Sequence[tuple[Iterable, Iterable]]) -> Verdict:
    union_ = frozenset().union(*(frozenset(Y) for Y, _ in cover)) if cover else frozenset()
    if union_ != frozenset(pair.total.elements):
        return Verdict(False, "complemented cover", detail={"reason": "members do not cover"})
    for k, (Y, dY) in enumerate(cover):
        v = find_complement(pair, Y, dY)
        if not v.ok:
            return Verdict(False, "complemented cover", witness=k, detail=v.detail)
    return Verdict(True, "complemented cover", detail={"members": len(cover)})


# ---------------------------------------------------------------------------
# gluing, doubling, products, cylinders


def _prime(x):
    return x + "'" if isinstance(x, str) else ("'", x)


def double(pair: PosetPair) -> tuple[Poset, frozenset, frozenset]:
    """``P`` glued to a copy of itself along the boundary; returns the two halves too."""
    P = pair.total
    dP = pair.boundary
    twin = {x: (x if x in dP else _prime(x)) for x in P}
    elements = list(P.elements) + [twin[x] for x in P if x not in dP]
    covers = list(P.covers) + [(twin[a], twin[b]) for a, b in P.covers]
    D = Poset.from_covers(elements, covers)
    return D, frozenset(P.elements), frozenset(twin.values())


def glue(p1: PosetPair, p2: PosetPair, common: Iterable) -> tuple[PosetPair, frozenset, frozenset]:
    """Pushout of two pairs along a shared down-closed part of both boundaries."""
    W = frozenset(common)
    if not (W <= p1.boundary and W <= p2.boundary):
        raise PosetError("glued part must lie in both boundaries")
    P1, P2 = p1.total, p2.total
    for a in W:
        for b in W:
            if P1.leq(a, b) != P2.leq(a, b):
                raise PosetError("the two copies of the glued part disagree")
    shared = (frozenset(P1.elements) & frozenset(P2.elements)) - W
    if shared:
        raise PosetError(f"elements outside the glued part collide: {sorted(map(label, shared))}")
    if not P1.is_down_closed(W) or not P2.is_down_closed(W):
        raise PosetError("glued part is not down-closed")
    elements = list(P1.elements) + [x for x in P2.elements if x not in W]
    covers = list(P1.covers) + [c for c in P2.covers if not (c[0] in W and c[1] in W)]
    X = Poset.from_covers(elements, covers)
    dX = X.down_closure((p1.boundary - W) | (p2.boundary - W))
    return PosetPair(X, dX), frozenset(P1.elements), frozenset(P2.elements)


def product(P: Poset, Q: Poset) -> Poset:
    elements = [(p, q) for p in P for q in Q]
    covers = [((a, q), (b, q)) for a, b in P.covers for q in Q]
    covers += [((p, a), (p, b)) for p in P for a, b in Q.covers]
    return Poset.from_covers(elements, covers)


def product_pair(A: PosetPair, B: PosetPair) -> PosetPair:
    E = product(A.total, B.total)
    dE = frozenset((a, b) for a, b in E if a in A.boundary or b in B.boundary)
    return PosetPair(E, dE)


def cylinder_map(pair: PosetPair) -> dict:
    """For a cylinder-shaped pair, the map sending a boundary element to the least
    interior element above it."""
    P = pair.total
    imask = P.mask(pair.interior)
    out = {}
    for x in pair.boundary:
        above = P.up_mask(P.idx(x)) & imask
        if not above:
            raise NotCylinderShaped(f"{label(x)} has no interior element above it")
        best = None
        for j in _bits(above):
            if P.down_mask(j) & above == 1 << j:
                if best is not None:
                    raise NotCylinderShaped(f"{label(x)} has no least interior element above it")
                best = j
        out[x] = P.elements[best]
    return out


def is_cylinder_shaped(pair: PosetPair) -> bool:
    try:
        cylinder_map(pair)
    except NotCylinderShaped:
        return False
    return True


def cylinder_pair(Y: Poset, Z: Poset, g: Mapping) -> PosetPair:
    """Pair ``(grothendieck over [1] of g: Y -> Z, fibre over 0)``."""
    I = Poset.chain(1)
    P, _ = grothendieck(I, {0: Y, 1: Z}, {(0, 1): dict(g)})
    return PosetPair(P, frozenset(e for e in P if e[0] == 0))


def mapping_cylinder(pair: PosetPair) -> PosetPair:
    """Cylinder of the boundary inclusion, a cylinder-shaped model of the same pair."""
    return cylinder_pair(pair.boundary_poset(), pair.total, {x: x for x in pair.boundary})
