"""Wall-style duality on order complexes: twisted simplicial chains, cap products, fundamental classes.

Conventions. A k-simplex is a strictly ascending chain ``(z_0 < ... < z_k)``.
Chains with coefficients in a presheaf carry their coefficient at the top
vertex ``z_k``; cochains carry theirs at the bottom vertex ``z_0``. This is
what makes the chain complex compute ``hocolim`` and the cochain complex
``holim``. Cohomological degree ``k`` sits in chain degree ``-k``.

The cap product evaluates the cochain on the back face and keeps the front
face:

    (z_0..z_d) cap phi = L(z_d -> z_m) * phi(z_m..z_d) . (z_0..z_m),   m = d - k,

with ``phi(z_m..z_d)`` living in ``Lambda(z_m)``, the top of the front face,
so no coefficient transport of ``Lambda`` is ever needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .diagrams import PRESHEAF, System, yoneda
from .homalg import (ZZ, ChainComplex, ChainMap, Ring, SparseMatrix, _nullspace_mod, is_quasi_iso)
from .posets import Poset, PosetPair, _bits, is_cylinder_shaped
from .verdict import Verdict, label

BATTERY_NOTE = "battery: all Yoneda systems and all rank-one systems"


class CocycleViolation(ValueError):
    pass


class DegreeMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# rank-one local systems


class RankOneLocalSystem:
    """Signs on the covers of a poset whose products agree along all saturated chains."""

    __slots__ = ("base", "sign", "_transport")

    def __init__(self, base: Poset, sign: Mapping[tuple, int] | None = None):
        self.base = base
        covers = base.covers
        sign = dict(sign or {})
        extra = set(sign) - set(covers)
        if extra:
            raise CocycleViolation(f"signs given on non-covers: {sorted(map(label, extra))}")
        for c in covers:
            s = sign.setdefault(c, 1)
            if s not in (1, -1):
                raise CocycleViolation(f"sign on {label(c)} is {s}, expected +-1")
        self.sign = sign
        self._transport = self._build()

    def _build(self) -> dict[tuple[int, int], int]:
        P = self.base
        e = P.elements
        up: dict[int, list[int]] = {}
        for a, b in P.cover_idx:
            up.setdefault(a, []).append(b)
        t: dict[tuple[int, int], int] = {}
        for i in reversed(P.topological_order()):
            t[(i, i)] = 1
            for c in up.get(i, []):
                s = self.sign[(e[i], e[c])]
                for j in _bits(P.up_mask(c)):
                    v = s * t[(c, j)]
                    old = t.setdefault((i, j), v)
                    if old != v:
                        raise CocycleViolation(f"signs disagree between {label(e[i])} and {label(e[j])}")
        return t

    def transport(self, a, b) -> int:
        """Sign along ``a <= b``."""
        P = self.base
        return self._transport[(P.idx(a), P.idx(b))]

    def transport_idx(self, i: int, j: int) -> int:
        return self._transport[(i, j)]

    @classmethod
    def trivial(cls, P: Poset) -> "RankOneLocalSystem":
        return cls(P, {})

    def is_trivial(self) -> bool:
        """Trivial up to coboundary (a consistent vertex gauge exists)."""
        g = nx.Graph()
        g.add_nodes_from(self.base.elements)
        g.add_edges_from(self.sign)
        pot = {}
        for comp in nx.connected_components(g):
            root = min(comp, key=self.base.idx)
            pot[root] = 1
            for u, v in nx.bfs_edges(g, root):
                pot[v] = pot[u] * self.sign[(u, v) if (u, v) in self.sign else (v, u)]
        return all(pot[a] * s == pot[b] for (a, b), s in self.sign.items())

    def as_system(self, ring: Ring = ZZ) -> System:
        R = ChainComplex.concentrated(ring, 0)
        maps = {c: ChainMap(R, R, {0: SparseMatrix(1, 1, {0: {0: s}})}, check=False) for c, s in self.sign.items()}
        return System(self.base, {x: R for x in self.base.elements}, maps, PRESHEAF, ring, check=False)

    def restrict(self, subset: Iterable) -> "RankOneLocalSystem":
        S = self.base.sub(subset)
        return RankOneLocalSystem(S, {(a, b): self.transport(a, b) for a, b in S.covers})

    def nontrivial_covers(self) -> list:
        return sorted((c for c, s in self.sign.items() if s == -1), key=lambda c: (self.base.idx(c[0]), self.base.idx(c[1])))

    def to_json(self) -> dict:
        return {"signs": [[label(a), label(b), s] for (a, b), s in
                          sorted(self.sign.items(), key=lambda kv: (self.base.idx(kv[0][0]), self.base.idx(kv[0][1])))]}

    @classmethod
    def from_json(cls, P: Poset, data: Mapping) -> "RankOneLocalSystem":
        lookup = {label(x): x for x in P.elements}
        return cls(P, {(lookup[a], lookup[b]): int(s) for a, b, s in data["signs"]})

    def __eq__(self, other):
        return isinstance(other, RankOneLocalSystem) and self.base == other.base and self.sign == other.sign

    def __hash__(self):
        return hash(tuple(sorted((label(a), label(b), s) for (a, b), s in self.sign.items())))

    def __repr__(self):
        return f"RankOneLocalSystem({len(self.nontrivial_covers())} negative covers)"


def _canonical_paths(P: Poset) -> dict[tuple[int, int], np.ndarray]:
    """F_2 indicator vector (over covers) of one saturated chain from i to j."""
    covers = P.cover_idx
    cidx = {c: k for k, c in enumerate(covers)}
    m = len(covers)
    up_covers: dict[int, list[int]] = {}
    for a, b in covers:
        up_covers.setdefault(a, []).append(b)
    path: dict[tuple[int, int], np.ndarray] = {}
    for i in reversed(P.topological_order()):
        path[(i, i)] = np.zeros(m, dtype=np.int64)
        for j in _bits(P.up_mask(i)):
            if j == i:
                continue
            c = next(c for c in sorted(up_covers.get(i, [])) if P.leq_idx(c, j))
            v = path[(c, j)].copy()
            v[cidx[(i, c)]] ^= 1
            path[(i, j)] = v
    return path


def enumerate_sign_systems(P: Poset, limit: int = 1 << 12) -> list[RankOneLocalSystem]:
    """Sign systems modulo coboundary, one representative per class (trivial first).

    Covers of a spanning forest of the Hasse diagram are fixed to +1, which
    kills the gauge freedom; the remaining signs solve the diamond equations
    over F_2.
    """
    covers = P.cover_idx
    m = len(covers)
    if m == 0:
        return [RankOneLocalSystem.trivial(P)]
    cidx = {c: k for k, c in enumerate(covers)}
    path = _canonical_paths(P)
    rows = []
    for i, j in path:
        if i == j:
            continue
        for c in _bits(P.up_mask(i)):
            if (i, c) in cidx and P.leq_idx(c, j):
                v = path[(c, j)].copy()
                v[cidx[(i, c)]] ^= 1
                v ^= path[(i, j)]
                if v.any():
                    rows.append(v)
    g = nx.Graph()
    g.add_nodes_from(range(len(P)))
    g.add_edges_from(covers)
    for u, v in nx.minimum_spanning_edges(g, algorithm="kruskal", data=False):
        row = np.zeros(m, dtype=np.int64)
        row[cidx[(u, v) if (u, v) in cidx else (v, u)]] = 1
        rows.append(row)
    A = np.array(rows, dtype=np.int64) if rows else np.zeros((0, m), dtype=np.int64)
    basis = _nullspace_mod(A, 2) if A.shape[0] else np.eye(m, dtype=np.int64)
    k = basis.shape[0]
    if 1 << k > limit:
        raise ValueError(f"{1 << k} sign classes exceed the enumeration limit")
    out = []
    e = P.elements
    for mask in range(1 << k):
        v = np.zeros(m, dtype=np.int64)
        for t in range(k):
            if (mask >> t) & 1:
                v ^= basis[t]
        out.append(RankOneLocalSystem(P, {(e[a], e[b]): (-1 if v[n] else 1) for n, (a, b) in enumerate(covers)}))
    return out


# ---------------------------------------------------------------------------
# coefficient data and twisted simplicial (co)chains


class Coefficients:
    """A presheaf of free modules in degree 0, optionally twisted by a sign system."""

    def __init__(self, xi: System, L: RankOneLocalSystem | None = None):
        if xi.variance != PRESHEAF:
            raise ValueError("coefficients must be a presheaf")
        for x, C in xi.items():
            if set(C.ranks) - {0}:
                raise DegreeMismatch(f"coefficient value at {label(x)} is not concentrated in degree 0")
        self.xi = xi
        self.L = L
        self.base = xi.base
        self.ring = xi.ring
        self._cache: dict[tuple[int, int], SparseMatrix] = {}

    def rank(self, i: int) -> int:
        return self.xi.value_idx(i).rank(0)

    def mat(self, i: int, j: int) -> SparseMatrix:
        """``Lambda(j) -> Lambda(i)`` for ``i <= j``."""
        key = (i, j)
        m = self._cache.get(key)
        if m is None:
            m = self.xi.map_idx(i, j).comp(0)
            if self.L is not None and self.L.transport_idx(i, j) == -1:
                m = m.scale(-1)
            self._cache[key] = m
        return m


@dataclass
class SimplicialBasis:
    chains: list[tuple[int, ...]]
    offset: dict[tuple[int, ...], int]
    ranks: dict[int, int]


def _basis(chains: Sequence[tuple[int, ...]], coeff: Coefficients, at_top: bool, sign: int) -> SimplicialBasis:
    offset, ranks = {}, {}
    for c in chains:
        n = sign * (len(c) - 1)
        r = coeff.rank(c[-1] if at_top else c[0])
        if r == 0:
            continue
        offset[c] = ranks.get(n, 0)
        ranks[n] = ranks.get(n, 0) + r
    return SimplicialBasis([c for c in chains if c in offset], offset, ranks)


def simplicial_chains(coeff: Coefficients, chains: Sequence[tuple[int, ...]]) -> tuple[ChainComplex, SimplicialBasis]:
    """Chains on the given (face-closed modulo a subcomplex) chain set; faces outside are dropped."""
    B = _basis(chains, coeff, True, 1)
    entries: dict[int, list] = {}
    for c in B.chains:
        n = len(c) - 1
        if n == 0:
            continue
        src = B.offset[c]
        lst = entries.setdefault(n, [])
        r = coeff.rank(c[-1])
        for i in range(n + 1):
            face = c[:i] + c[i + 1:]
            tgt = B.offset.get(face)
            if tgt is None:
                continue
            s = -1 if i % 2 else 1
            if i == n:
                for col, row, v in ((a, b, v) for a, colv in coeff.mat(face[-1], c[-1]).cols.items()
                                    for b, v in colv.items()):
                    lst.append((tgt + row, src + col, s * v))
            else:
                for a in range(r):
                    lst.append((tgt + a, src + a, s))
    d = {n: SparseMatrix.from_entries(B.ranks.get(n - 1, 0), B.ranks[n], lst) for n, lst in entries.items()
         if B.ranks.get(n - 1, 0)}
    return ChainComplex(coeff.ring, B.ranks, d, check=False), B


def simplicial_cochains(coeff: Coefficients, chains: Sequence[tuple[int, ...]]) -> tuple[ChainComplex, SimplicialBasis]:
    """Cochains supported on the chain set (those outside are treated as zero), degree ``-k``."""
    B = _basis(chains, coeff, False, -1)
    entries: dict[int, list] = {}
    for c in B.chains:  # c has length k+2, contributes to delta from degree -(k) to -(k+1)
        n = len(c) - 1
        if n == 0:
            continue
        row0 = B.offset[c]
        for i in range(n + 1):
            face = c[:i] + c[i + 1:]
            col0 = B.offset.get(face)
            if col0 is None:
                continue
            s = -1 if i % 2 else 1
            lst = entries.setdefault(-(n - 1), [])
            if i == 0:
                for a, colv in coeff.mat(c[0], c[1]).cols.items():
                    for b, v in colv.items():
                        lst.append((row0 + b, col0 + a, s * v))
            else:
                for a in range(coeff.rank(c[0])):
                    lst.append((row0 + a, col0 + a, s))
    d = {n: SparseMatrix.from_entries(B.ranks.get(n - 1, 0), B.ranks[n], lst) for n, lst in entries.items()
         if B.ranks.get(n - 1, 0) and B.ranks.get(n, 0)}
    return ChainComplex(coeff.ring, B.ranks, d, check=False), B


def _relative(pair: PosetPair) -> list[tuple[int, ...]]:
    bmask = pair.boundary_mask()
    return [c for c in pair.total.chains() if not (bmask >> c[-1]) & 1]


def _within(P: Poset, mask: int) -> list[tuple[int, ...]]:
    return [c for c in P.chains() if not any(not (mask >> i) & 1 for i in c)]


@dataclass
class LocalChainComplex:
    pair: PosetPair
    L: RankOneLocalSystem
    relative: ChainComplex
    relative_basis: SimplicialBasis
    absolute: ChainComplex
    absolute_basis: SimplicialBasis
    boundary: ChainComplex
    boundary_basis: SimplicialBasis

    def connecting(self, cycle: Mapping[tuple[int, ...], object]) -> dict:
        """Chain-level connecting map: boundary of a relative cycle, kept on boundary chains."""
        out: dict[tuple[int, ...], object] = {}
        for c, v in cycle.items():
            n = len(c) - 1
            for i in range(n + 1):
                face = c[:i] + c[i + 1:]
                if face not in self.boundary_basis.offset:
                    continue
                s = -1 if i % 2 else 1
                if i == n:
                    s *= self.L.transport_idx(face[-1], c[-1])
                out[face] = out.get(face, 0) + s * v
        ring = self.relative.ring
        return {k: ring.normalize(v) for k, v in out.items() if ring.normalize(v) != 0}


def local_chain_complex(pair: PosetPair, L: RankOneLocalSystem | None = None, ring: Ring = ZZ) -> LocalChainComplex:
    P = pair.total
    L = L or RankOneLocalSystem.trivial(P)
    if L.base != P:
        raise CocycleViolation("local system lives on a different poset")
    coeff = Coefficients(L.as_system(ring))
    rel, rb = simplicial_chains(coeff, _relative(pair))
    ab, abb = simplicial_chains(coeff, P.chains())
    bd, bdb = simplicial_chains(coeff, _within(P, pair.boundary_mask()))
    return LocalChainComplex(pair, L, rel, rb, ab, abb, bd, bdb)


# ---------------------------------------------------------------------------
# cap product


def cap_product(c: Mapping[tuple[int, ...], object], d: int, phi: Mapping[tuple[tuple[int, ...], int], object],
                k: int, L: RankOneLocalSystem, coeff: Coefficients) -> dict:
    """``c cap phi`` for a d-chain ``c`` (coefficients in ``L``) and a k-cochain ``phi``.

    ``phi`` maps ``(chain, basis index in Lambda(min chain))`` to scalars;
    the result maps ``(chain, basis index in Lambda(top chain))`` to scalars.
    """
    if k > d:
        raise DegreeMismatch(f"cannot cap a {d}-chain with a {k}-cochain")
    m = d - k
    eps = cap_sign(d, k)
    out: dict = {}
    for sigma, cv in c.items():
        if len(sigma) != d + 1:
            raise DegreeMismatch("chain has the wrong dimension")
        front, back = sigma[:m + 1], sigma[m:]
        t = L.transport_idx(sigma[m], sigma[-1])
        for a in range(coeff.rank(back[0])):
            v = phi.get((back, a))
            if v:
                key = (front, a)
                out[key] = out.get(key, 0) + eps * t * cv * v
    return {key: v for key, v in out.items() if coeff.ring.normalize(v) != 0}


def cap_sign(d: int, k: int) -> int:
    """Sign making capping with a cycle a chain map from cochains to shifted chains."""
    return -1 if (d * k + k * (k - 1) // 2) % 2 else 1


def cap_map(c: Mapping[tuple[int, ...], object], d: int, L: RankOneLocalSystem, xi: System,
            source_chains: Sequence[tuple[int, ...]], target_chains: Sequence[tuple[int, ...]]) -> ChainMap:
    """Cap with a d-chain as a map ``C^*(source; xi) -> C_{d+*}(target; L (x) xi)``.

    The target complex is reindexed without signs so that cochain degree
    ``-k`` maps to degree ``-k`` (chain dimension ``d - k``).
    """
    ring = xi.ring
    cco = Coefficients(xi)
    hco = Coefficients(xi, L)
    S, sb = simplicial_cochains(cco, source_chains)
    T0, tb = simplicial_chains(hco, target_chains)
    T = ChainComplex(ring, {n - d: r for n, r in T0.ranks.items()}, {n - d: m for n, m in T0.d.items()}, check=False)
    entries: dict[int, list] = {}
    for sigma, cv in c.items():
        if len(sigma) != d + 1:
            raise DegreeMismatch("fundamental chain has the wrong dimension")
        for m in range(d + 1):
            k = d - m
            front, back = sigma[:m + 1], sigma[m:]
            col0 = sb.offset.get(back)
            row0 = tb.offset.get(front)
            if col0 is None or row0 is None:
                continue
            s = cap_sign(d, k) * L.transport_idx(sigma[m], sigma[-1]) * cv
            lst = entries.setdefault(-k, [])
            for a in range(cco.rank(back[0])):
                lst.append((row0 + a, col0 + a, s))
    comps = {n: SparseMatrix.from_entries(T.rank(n), S.rank(n), lst) for n, lst in entries.items()
             if T.rank(n) and S.rank(n)}
    return ChainMap(S, T, comps, check=False)


# ---------------------------------------------------------------------------
# generators of rank-one homology


def _field_solve_kernel(M: list[list], n: int, ring: Ring) -> list[list]:
    """Kernel basis of a dense matrix over a field (rows of the result)."""
    rows = [list(r) for r in M]
    p = ring.p if ring.tag == "Fp" else None

    def norm(x):
        return x % p if p else x

    def inv(x):
        return pow(x, -1, p) if p else Fraction(1) / x

    pivots = []
    r = 0
    for col in range(n):
        k = next((i for i in range(r, len(rows)) if norm(rows[i][col]) != 0), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        iv = inv(rows[r][col])
        rows[r] = [norm(x * iv) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and norm(rows[i][col]) != 0:
                f = rows[i][col]
                rows[i] = [norm(a - f * b) for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(n) if c not in set(pivots)]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for row, pc in enumerate(pivots):
            v[pc] = norm(-rows[row][fc])
        basis.append(v)
    return basis


class _Echelon:
    """Incrementally reduced row echelon basis over a field."""

    def __init__(self, ring: Ring):
        self.p = ring.p if ring.tag == "Fp" else None
        self.rows: dict[int, list] = {}

    def _norm(self, x):
        return x % self.p if self.p else x

    def add(self, v) -> bool:
        """Insert ``v``; True when it was independent of the rows so far."""
        v = [self._norm(Fraction(x) if not self.p else x) for x in v]
        for piv, row in self.rows.items():
            f = v[piv]
            if f:
                v = [self._norm(a - f * b) for a, b in zip(v, row)]
        piv = next((i for i, x in enumerate(v) if x), None)
        if piv is None:
            return False
        iv = pow(v[piv], -1, self.p) if self.p else 1 / v[piv]
        v = [self._norm(x * iv) for x in v]
        for k, row in self.rows.items():
            if row[piv]:
                f = row[piv]
                self.rows[k] = [self._norm(a - f * b) for a, b in zip(row, v)]
        self.rows[piv] = v
        return True


def _int_column_hermite(A: list[list[int]], n: int):
    """Unimodular ``U`` (and its inverse) with ``A U`` in column echelon form; returns (rank, U, Uinv)."""
    m = len(A)
    A = [row[:] for row in A]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    Ui = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(j1, j2, a, b, c, d):
        # new col j1 = a*c1 + b*c2, new col j2 = c*c1 + d*c2 with ad - bc = +-1
        for M in (A, U):
            for row in M:
                x, y = row[j1], row[j2]
                row[j1], row[j2] = a * x + b * y, c * x + d * y
        det = a * d - b * c
        # inverse acts on rows of Ui: [r1; r2] -> inv([[a, c], [b, d]]) [r1; r2]
        ia, ib, ic, id_ = d * det, -c * det, -b * det, a * det
        r1, r2 = Ui[j1], Ui[j2]
        Ui[j1] = [ia * x + ib * y for x, y in zip(r1, r2)]
        Ui[j2] = [ic * x + id_ * y for x, y in zip(r1, r2)]

    rank = 0
    for i in range(m):
        if rank >= n:
            break
        while True:
            nz = [j for j in range(rank, n) if A[i][j] != 0]
            if not nz:
                break
            j0 = min(nz, key=lambda j: abs(A[i][j]))
            if j0 != rank:
                colop(rank, j0, 0, 1, 1, 0)
            done = True
            for j in range(rank + 1, n):
                if A[i][j]:
                    q = A[i][j] // A[i][rank]
                    colop(rank, j, 1, 0, -q, 1)
                    if A[i][j]:
                        done = False
            if done:
                rank += 1
                break
    return rank, U, Ui


def _int_snf_left(A: list[list[int]], r: int, m: int):
    """Diagonalise an r x m integer matrix; returns (diagonal, Pinv) with Pinv's columns the new row basis."""
    A = [row[:] for row in A]
    Pinv = [[int(i == j) for j in range(r)] for i in range(r)]

    def rowop(i1, i2, a, b, c, d):
        A[i1], A[i2] = ([a * x + b * y for x, y in zip(A[i1], A[i2])], [c * x + d * y for x, y in zip(A[i1], A[i2])])
        det = a * d - b * c
        # Pinv <- Pinv E^-1, with E^-1 = det * [[d, -b], [-c, a]]
        for row in Pinv:
            x, y = row[i1], row[i2]
            row[i1], row[i2] = det * (d * x - c * y), det * (a * y - b * x)

    def colop(j1, j2, a, b, c, d):
        for row in A:
            x, y = row[j1], row[j2]
            row[j1], row[j2] = a * x + b * y, c * x + d * y

    diag = []
    t = 0
    while t < min(r, m):
        nz = [(i, j) for i in range(t, r) for j in range(t, m) if A[i][j]]
        if not nz:
            break
        i0, j0 = min(nz, key=lambda ij: abs(A[ij[0]][ij[1]]))
        if i0 != t:
            rowop(t, i0, 0, 1, 1, 0)
        if j0 != t:
            colop(t, j0, 0, 1, 1, 0)
        clean = True
        for i in range(t + 1, r):
            if A[i][t]:
                q = A[i][t] // A[t][t]
                rowop(t, i, 1, 0, -q, 1)
                if A[i][t]:
                    clean = False
        for j in range(t + 1, m):
            if A[t][j]:
                q = A[t][j] // A[t][t]
                colop(t, j, 1, 0, -q, 1)
                if A[t][j]:
                    clean = False
        if clean:
            diag.append(abs(A[t][t]))
            t += 1
    return diag, Pinv


def homology_generator(C: ChainComplex, n: int) -> list | None:
    """A cycle generating ``H_n(C)`` when it is free of rank one, else None."""
    H = C.homology()
    g = dict((d, (f, t)) for d, f, t in H.groups).get(n)
    if g is None or g != (1, ()):
        return None
    ring = C.ring
    rn = C.rank(n)
    dn = C.diff(n).to_dense() if C.rank(n - 1) else []
    dn1 = C.diff(n + 1).to_dense() if C.rank(n + 1) else [[0] * 0 for _ in range(rn)]
    bcols = [list(col) for col in zip(*dn1)] if C.rank(n + 1) else []
    if ring.tag != "Z":
        dn = [[ring.normalize(x) for x in row] for row in dn]
        K = _field_solve_kernel(dn, rn, ring) if dn else [[int(i == j) for j in range(rn)] for i in range(rn)]
        ech = _Echelon(ring)
        for b in bcols:
            ech.add(b)
        for v in K:
            if ech.add(v):
                if ring.tag == "Q":
                    den = math.lcm(*(Fraction(x).denominator for x in v))
                    v = [int(Fraction(x) * den) for x in v]
                return v
        return None
    A = [[int(x) for x in row] for row in dn] if dn else [[0] * rn]
    rank, U, Ui = _int_column_hermite(A, rn)
    kernel = [[U[i][j] for i in range(rn)] for j in range(rank, rn)]  # columns of U as vectors
    r = len(kernel)
    coords = []
    for b in bcols:
        y = [sum(Ui[i][k] * int(b[k]) for k in range(rn)) for i in range(rn)]
        coords.append(y[rank:])
    Amat = [[coords[j][i] for j in range(len(coords))] for i in range(r)]
    diag, Pinv = _int_snf_left(Amat, r, len(coords)) if coords else ([], [[int(i == j) for j in range(r)]
                                                                        for i in range(r)])
    t = len(diag)
    y = [Pinv[i][t] for i in range(r)]
    return [sum(y[j] * kernel[j][i] for j in range(r)) for i in range(rn)]


# ---------------------------------------------------------------------------
# fundamental classes


@dataclass
class FundamentalClass:
    pair: PosetPair
    L: RankOneLocalSystem
    degree: int
    cycle: dict  # chain (index tuple) -> coefficient
    ring: Ring

    def to_json(self) -> dict:
        e = self.pair.total.elements
        return {
            "degree": self.degree,
            "ring": self.ring.to_json(),
            "orientation": self.L.to_json(),
            "cycle": [[[label(e[i]) for i in c], _num(v)] for c, v in
                      sorted(self.cycle.items())],
        }


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


def top_relative_degree(lc: LocalChainComplex) -> int | None:
    H = lc.relative.homology()
    return max(H.degrees()) if H.degrees() else None


def find_fundamental_class(pair: PosetPair, L: RankOneLocalSystem | None = None, ring: Ring = ZZ,
                           degree: int | None = None) -> FundamentalClass | None:
    """Generator of the top nonvanishing relative homology with coefficients in ``L``, if free of rank one."""
    lc = local_chain_complex(pair, L, ring)
    d = top_relative_degree(lc) if degree is None else degree
    if d is None:
        return None
    v = homology_generator(lc.relative, d)
    if v is None:
        return None
    inv = {off: c for c, off in lc.relative_basis.offset.items() if len(c) == d + 1}
    cycle = {inv[i]: ring.normalize(x) for i, x in enumerate(v) if ring.normalize(x) != 0}
    return FundamentalClass(pair, lc.L, d, cycle, ring)


# ---------------------------------------------------------------------------
# coefficient battery


def rank_one_battery(P: Poset, ring: Ring) -> list[System]:
    """For each component, each sign class on it, extended by zero elsewhere."""
    out = []
    for comp in P.components():
        Q = P.sub(comp)
        for L in enumerate_sign_systems(Q):
            if ring.tag == "Fp" and ring.p == 2 and not L.is_trivial():
                continue
            R = ChainComplex.concentrated(ring, 0)
            maps = {c: ChainMap(R, R, {0: SparseMatrix(1, 1, {0: {0: s}})}, check=False) for c, s in L.sign.items()}
            out.append(System(P, {x: R for x in comp}, maps, PRESHEAF, ring, check=False))
    return out


def battery(P: Poset, ring: Ring, kind: str = "all") -> list[System]:
    ys = [yoneda(P, x, ring) for x in P.elements] if kind in ("yoneda", "all") else []
    rs = rank_one_battery(P, ring) if kind in ("rank1", "all") else []
    return ys + rs


def _cap_quasi_isos(c: Mapping, d: int, L: RankOneLocalSystem, P: Poset, systems: Sequence[System],
                    source_chains, target_chains) -> tuple[bool, int | None]:
    for k, xi in enumerate(systems):
        f = cap_map(c, d, L, xi, source_chains, target_chains)
        if not is_quasi_iso(f):
            return False, k
    return True, None


def cap_conditions(fc: FundamentalClass, kind: str = "all") -> dict:
    """Wall's conditions for a candidate fundamental class.

    (1) relative cochains -> absolute chains of the total poset,
    (2) absolute cochains of the boundary -> chains of the boundary, capped with the boundary class,
    (2') absolute cochains -> relative chains (the dual form, for KQS).
    """
    pair, ring, L, d = fc.pair, fc.ring, fc.L, fc.degree
    P = pair.total
    rel = _relative(pair)
    allc = P.chains()
    b1 = battery(P, ring, kind)
    ok1, w1 = _cap_quasi_isos(fc.cycle, d, L, P, b1, rel, allc)
    ok3, w3 = _cap_quasi_isos(fc.cycle, d, L, P, b1, allc, rel)
    out = {"relative": ok1, "relative_witness": w1, "dual": ok3, "dual_witness": w3}
    if pair.boundary:
        lc = local_chain_complex(pair, L, ring)
        bcycle = lc.connecting(fc.cycle)
        Y = pair.boundary_poset()
        LY = L.restrict(pair.boundary)
        # re-index boundary chains into Y's own indices
        ymap = {P.idx(x): Y.idx(x) for x in Y.elements}
        yc = {tuple(ymap[i] for i in c): v for c, v in bcycle.items()}
        b2 = battery(Y, ring, kind)
        ok2, w2 = _cap_quasi_isos(yc, d - 1, LY, Y, b2, Y.chains(), Y.chains())
        out.update({"boundary": ok2, "boundary_witness": w2})
    else:
        out.update({"boundary": True, "boundary_witness": None})
    return out


# ---------------------------------------------------------------------------
# the routes


def _component_pairs(pair: PosetPair) -> list[PosetPair]:
    return [PosetPair(pair.total.sub(c), pair.boundary & c) for c in pair.total.components()]


def wall_check_pair(pair: PosetPair, ring: Ring = ZZ, kind: str = "all", require_cylinder: bool = False) -> Verdict:
    """Search sign systems and fundamental classes satisfying Wall's conditions, componentwise."""
    if require_cylinder and not is_cylinder_shaped(pair):
        from .posets import NotCylinderShaped
        raise NotCylinderShaped("pair is not cylinder-shaped")
    comps = []
    ok_all = True
    for cp in _component_pairs(pair):
        found = None
        tried = []
        for L in enumerate_sign_systems(cp.total):
            if ring.tag == "Fp" and ring.p == 2 and not L.is_trivial():
                continue
            fc = find_fundamental_class(cp, L, ring)
            if fc is None:
                tried.append({"orientation": L.to_json(), "class": None})
                continue
            cond = cap_conditions(fc, kind)
            tried.append({"orientation": L.to_json(), "degree": fc.degree,
                          "relative": cond["relative"], "boundary": cond["boundary"]})
            if cond["relative"] and cond["boundary"]:
                found = fc
                break
        entry = {"elements": sorted(map(label, cp.total.elements)), "poincare": found is not None}
        if found is not None:
            entry.update({"degree": found.degree, "orientation_trivial": found.L.is_trivial(),
                          "fundamental_class": found.to_json()})
        else:
            entry["attempts"] = tried
            ok_all = False
        comps.append(entry)
    witness = next((c["elements"] for c in comps if not c["poincare"]), None)
    return Verdict(ok_all, "classical (Wall)", witness=witness, detail={"components": comps},
                   certification=BATTERY_NOTE)


def spivak_check(pair: PosetPair, ring: Ring = ZZ, kind: str = "all") -> Verdict:
    """Search ``(zeta = L[-d], c)`` with cap by ``c`` an equivalence ``(X,dX)_* -> X_!(zeta (x) -)``."""
    comps = []
    ok_all = True
    for cp in _component_pairs(pair):
        hit = None
        for L in enumerate_sign_systems(cp.total):
            if ring.tag == "Fp" and ring.p == 2 and not L.is_trivial():
                continue
            fc = find_fundamental_class(cp, L, ring)
            if fc is None:
                continue
            ok, _ = _cap_quasi_isos(fc.cycle, fc.degree, L, cp.total, battery(cp.total, ring, kind),
                                    _relative(cp), cp.total.chains())
            if ok:
                hit = fc
                break
        comps.append({"elements": sorted(map(label, cp.total.elements)), "poincare": hit is not None,
                      "degree": hit.degree if hit else None,
                      "orientation": hit.L.to_json() if hit else None})
        ok_all = ok_all and hit is not None
    witness = next((c["elements"] for c in comps if not c["poincare"]), None)
    return Verdict(ok_all, "Spivak datum", witness=witness, detail={"components": comps}, certification=BATTERY_NOTE)


def neoclassical_check(pair: PosetPair, ring: Ring = ZZ) -> Verdict:
    """Interior restriction of omega and omega of the boundary are Pic-valued, and delta is an equivalence."""
    from .morita import classifying_system, connecting_map, invertibility
    from .diagrams import restrict_to
    K = classifying_system(pair, ring)
    interior = sorted(pair.interior, key=pair.total.idx)
    wi = restrict_to(K.system, interior)
    inv_i, _ = invertibility(wi)
    g_i = wi.is_groupoidal()
    detail = {"interior_groupoidal": g_i.ok, "interior_invertible": inv_i.ok}
    ok = g_i.ok and inv_i.ok
    if pair.boundary:
        dP = PosetPair(pair.boundary_poset(), frozenset())
        wd = classifying_system(dP, ring).system
        g_d = wd.is_groupoidal()
        inv_d, _ = invertibility(wd)
        cm = connecting_map(pair, ring)
        eq = cm.is_equivalence()
        detail.update({"boundary_groupoidal": g_d.ok, "boundary_invertible": inv_d.ok, "delta_equivalence": eq.ok})
        ok = ok and g_d.ok and inv_d.ok and eq.ok
        witness = eq.witness if not eq.ok else (g_d.witness or inv_d.witness)
    else:
        witness = None
    if not ok and witness is None:
        witness = g_i.witness or inv_i.witness
    return Verdict(ok, "neoclassical", witness=witness, detail=detail)


def kqs_check(pair: PosetPair, ring: Ring = ZZ, omega=None, kind: str = "rank1") -> Verdict:
    """For a Spivak datum built from omega, cap conditions (1) and (2) agree on local systems.

    Only dualisable coefficients are in scope, and those are groupoidal, so the
    default battery is the rank-one local systems; Yoneda systems are not
    dualisable and (2) can fail for them on pairs like an interval with a
    collapsed end. Also checks that scaling the class by a non-unit (or zero) breaks both
    conditions at once.
    """
    from .morita import classifying_system, poincare_verdict, rank_one_scalars
    omega = omega or classifying_system(pair, ring)
    pv = poincare_verdict(pair, ring, omega)
    cases = []
    if pv.poincare:
        for cp in _component_pairs(pair):
            comp_omega = classifying_system(cp, ring)
            degs, scalars = rank_one_scalars(comp_omega.system)
            L = RankOneLocalSystem(cp.total, {c: (1 if ring.normalize(s) == 1 else -1) for c, s in scalars.items()})
            d = -next(iter(degs.values()))
            fc = find_fundamental_class(cp, L, ring, degree=d)
            if fc is None:
                cases.append({"scale": 1, "one": False, "two": False, "note": "no class"})
                continue
            for scale in ([1, 2, 0] if ring.tag == "Z" else [1, 0]):
                cyc = {k: ring.normalize(v * scale) for k, v in fc.cycle.items() if ring.normalize(v * scale)}
                one, _ = _cap_quasi_isos(cyc, d, L, cp.total, battery(cp.total, ring, kind), _relative(cp),
                                         cp.total.chains())
                two, _ = _cap_quasi_isos(cyc, d, L, cp.total, battery(cp.total, ring, kind), cp.total.chains(),
                                         _relative(cp))
                cases.append({"scale": scale, "one": one, "two": two})
    ok = all(c["one"] == c["two"] for c in cases)
    if pv.poincare:
        ok = ok and all(c["one"] for c in cases if c["scale"] == 1)
    return Verdict(ok, "KQS", detail={"cases": cases, "poincare": pv.poincare, "battery": kind},
                   certification=BATTERY_NOTE)


def verify_seven(pair: PosetPair, ring: Ring = ZZ, kind: str = "all") -> dict:
    """Run the omega, neoclassical, classical and Spivak routes; they must agree."""
    from .morita import poincare_verdict
    if not is_cylinder_shaped(pair) and pair.boundary:
        from .posets import NotCylinderShaped
        raise NotCylinderShaped("verify_seven needs a pair from a diagram over [1]")
    pv = poincare_verdict(pair, ring)
    neo = neoclassical_check(pair, ring)
    wall = wall_check_pair(pair, ring, kind)
    spiv = spivak_check(pair, ring, kind)
    verdicts = {"omega": pv.poincare, "neoclassical": neo.ok, "classical": wall.ok, "spivak": spiv.ok}
    dims = {"omega": pv.formal_dimensions,
            "classical": [c.get("degree") for c in wall.detail["components"]],
            "spivak": [c.get("degree") for c in spiv.detail["components"]]}
    agree = len(set(verdicts.values())) == 1
    if agree and pv.poincare:
        agree = dims["omega"] == dims["classical"] == dims["spivak"]
    return {
        "agree": agree,
        "poincare": pv.poincare if agree else None,
        "verdicts": verdicts,
        "formal_dimensions": dims,
        "omega": pv,
        "neoclassical": neo,
        "classical": wall,
        "spivak": spiv,
        "certification": BATTERY_NOTE,
    }
