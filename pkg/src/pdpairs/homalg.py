"""Exact chain complexes of finitely generated free modules.

Entries are stored as integers or ``Fraction`` values that represent ring
elements; reduction modulo ``p`` happens when a prime field is asked to
compare, eliminate or validate. Every ring map used by the package is a
reduction of integer data, so this lazy normalisation is sound.

Sign conventions used everywhere else:

* ``shift(C, k)_n = C_{n-k}`` with differential ``(-1)^k d``; maps shift
  without signs. ``omega = shift(-1)`` and ``sigma = shift(+1)``.
* ``cone(f)_n = A_{n-1} + B_n`` with ``d(a, b) = (-da, f(a) + db)``.
* ``fib(f) = cone(f)[-1]``, so ``fib_n = A_n + B_{n+1}`` and
  ``d(a, b) = (da, -f(a) - db)``.
* ``tensor``: ``d(x (x) y) = dx (x) y + (-1)^|x| x (x) dy``.
* ``dual(C)_n = Hom(C_{-n}, R)`` with ``d_n = (-1)^(n+1) (d_{1-n})^T``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Mapping

import numpy as np


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


class RingMismatch(ValueError):
    pass


class NotAChainComplex(ValueError):
    pass


class NotAChainMap(ValueError):
    pass


@dataclass(frozen=True)
class Ring:
    """Coefficient ring: ``Z``, ``Q`` or ``F_p``."""

    tag: str
    p: int = 0

    def __post_init__(self):
        if self.tag not in ("Z", "Q", "Fp"):
            raise ValueError(f"unknown ring tag {self.tag!r}")
        if self.tag == "Fp" and not _is_prime(self.p):
            raise ValueError(f"F_p needs a prime, got {self.p}")

    @property
    def is_field(self) -> bool:
        return self.tag != "Z"

    def normalize(self, x):
        if self.tag == "Fp":
            if isinstance(x, Fraction):
                return x.numerator * pow(x.denominator, -1, self.p) % self.p
            return x % self.p
        if isinstance(x, Fraction) and x.denominator == 1:
            return x.numerator
        return x

    def is_unit(self, x) -> bool:
        x = self.normalize(x)
        if self.tag == "Z":
            return x in (1, -1)
        return x != 0

    def inverse(self, x):
        x = self.normalize(x)
        if self.tag == "Z":
            if x not in (1, -1):
                raise ZeroDivisionError(f"{x} is not a unit in Z")
            return x
        if self.tag == "Q":
            return Fraction(1) / x if not isinstance(x, Fraction) else 1 / x
        return pow(x, -1, self.p)

    def units(self) -> list:
        """Sign-like units used for rank-one systems."""
        if self.tag == "Fp":
            return [1] if self.p == 2 else [1, self.p - 1]
        return [1, -1]

    def to_json(self):
        return {"Fp": self.p} if self.tag == "Fp" else self.tag

    @staticmethod
    def parse(spec) -> "Ring":
        if isinstance(spec, Ring):
            return spec
        if isinstance(spec, dict) and set(spec) == {"Fp"}:
            return Ring("Fp", int(spec["Fp"]))
        if isinstance(spec, str):
            s = spec.strip()
            if s in ("Z", "Q"):
                return Ring(s)
            for prefix in ("Fp(", "F"):
                if s.startswith(prefix):
                    return Ring("Fp", int(s[len(prefix):].rstrip(")")))
        raise ValueError(f"cannot parse ring {spec!r}")

    def __str__(self):
        return f"F{self.p}" if self.tag == "Fp" else self.tag


ZZ = Ring("Z")
QQ = Ring("Q")


def Fp(p: int) -> Ring:
    return Ring("Fp", p)


# --------------------------------------------------------------------------
# sparse matrices


class SparseMatrix:
    """Column-major sparse matrix; ``cols[j]`` maps row index to entry."""

    __slots__ = ("nrows", "ncols", "cols")

    def __init__(self, nrows: int, ncols: int, cols: Mapping[int, Mapping[int, object]] | None = None):
        self.nrows = nrows
        self.ncols = ncols
        self.cols: dict[int, dict[int, object]] = {}
        if cols:
            for j, col in cols.items():
                c = {i: v for i, v in col.items() if v != 0}
                if c:
                    self.cols[j] = c

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "SparseMatrix":
        return cls(nrows, ncols)

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        m = cls(n, n)
        m.cols = {j: {j: 1} for j in range(n)}
        return m

    @classmethod
    def from_dense(cls, rows: list[list]) -> "SparseMatrix":
        nrows = len(rows)
        ncols = len(rows[0]) if rows else 0
        m = cls(nrows, ncols)
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise ValueError("ragged matrix")
            for j, v in enumerate(row):
                if v != 0:
                    m.cols.setdefault(j, {})[i] = v
        return m

    @classmethod
    def from_entries(cls, nrows: int, ncols: int, entries: Iterable[tuple[int, int, object]]) -> "SparseMatrix":
        m = cls(nrows, ncols)
        cols = m.cols
        for i, j, v in entries:
            if v == 0:
                continue
            col = cols.setdefault(j, {})
            w = col.get(i, 0) + v
            if w == 0:
                col.pop(i, None)
                if not col:
                    del cols[j]
            else:
                col[i] = w
        return m

    def to_dense(self) -> list[list]:
        out = [[0] * self.ncols for _ in range(self.nrows)]
        for j, col in self.cols.items():
            for i, v in col.items():
                out[i][j] = v
        return out

    def entries(self) -> Iterator[tuple[int, int, object]]:
        for j in sorted(self.cols):
            col = self.cols[j]
            for i in sorted(col):
                yield i, j, col[i]

    def get(self, i: int, j: int):
        return self.cols.get(j, {}).get(i, 0)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def nnz(self) -> int:
        return sum(len(c) for c in self.cols.values())

    def copy(self) -> "SparseMatrix":
        m = SparseMatrix(self.nrows, self.ncols)
        m.cols = {j: dict(c) for j, c in self.cols.items()}
        return m

    def reduced(self, ring: Ring) -> "SparseMatrix":
        m = SparseMatrix(self.nrows, self.ncols)
        for j, col in self.cols.items():
            c = {}
            for i, v in col.items():
                w = ring.normalize(v)
                if w != 0:
                    c[i] = w
            if c:
                m.cols[j] = c
        return m

    def is_zero(self, ring: Ring | None = None) -> bool:
        if ring is None or ring.tag != "Fp":
            return not self.cols
        return not self.reduced(ring).cols

    def equals(self, other: "SparseMatrix", ring: Ring | None = None) -> bool:
        if self.shape != other.shape:
            return False
        return (self - other).is_zero(ring)

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = SparseMatrix(self.nrows, other.ncols)
        mine = self.cols
        for j, bcol in other.cols.items():
            acc: dict[int, object] = {}
            for k, b in bcol.items():
                acol = mine.get(k)
                if acol is None:
                    continue
                for i, a in acol.items():
                    acc[i] = acc.get(i, 0) + a * b
            acc = {i: v for i, v in acc.items() if v != 0}
            if acc:
                out.cols[j] = acc
        return out

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        out = self.copy()
        for j, col in other.cols.items():
            c = out.cols.setdefault(j, {})
            for i, v in col.items():
                w = c.get(i, 0) + v
                if w == 0:
                    c.pop(i, None)
                else:
                    c[i] = w
            if not c:
                del out.cols[j]
        return out

    def __neg__(self) -> "SparseMatrix":
        return self.scale(-1)

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        return self + (-other)

    def scale(self, s) -> "SparseMatrix":
        out = SparseMatrix(self.nrows, self.ncols)
        if s == 0:
            return out
        out.cols = {j: {i: v * s for i, v in c.items()} for j, c in self.cols.items()}
        return out

    def transpose(self) -> "SparseMatrix":
        out = SparseMatrix(self.ncols, self.nrows)
        for j, col in self.cols.items():
            for i, v in col.items():
                out.cols.setdefault(i, {})[j] = v
        return out

    T = property(transpose)

    def kron(self, other: "SparseMatrix") -> "SparseMatrix":
        """Kronecker product; index ``(i, k)`` becomes ``i * other.nrows + k``."""
        out = SparseMatrix(self.nrows * other.nrows, self.ncols * other.ncols)
        for j, col in self.cols.items():
            for l, ocol in other.cols.items():
                c = {}
                for i, a in col.items():
                    base = i * other.nrows
                    for k, b in ocol.items():
                        c[base + k] = a * b
                out.cols[j * other.ncols + l] = c
        return out

    def apply(self, vec: Mapping[int, object]) -> dict[int, object]:
        acc: dict[int, object] = {}
        for k, b in vec.items():
            for i, a in self.cols.get(k, {}).items():
                acc[i] = acc.get(i, 0) + a * b
        return {i: v for i, v in acc.items() if v != 0}

    @staticmethod
    def block(blocks: list[list["SparseMatrix | None"]], row_sizes: list[int], col_sizes: list[int]) -> "SparseMatrix":
        out = SparseMatrix(sum(row_sizes), sum(col_sizes))
        roff = [0]
        for r in row_sizes:
            roff.append(roff[-1] + r)
        coff = [0]
        for c in col_sizes:
            coff.append(coff[-1] + c)
        for bi, row in enumerate(blocks):
            for bj, b in enumerate(row):
                if b is None:
                    continue
                if b.shape != (row_sizes[bi], col_sizes[bj]):
                    raise ValueError("block shape mismatch")
                for j, col in b.cols.items():
                    c = out.cols.setdefault(coff[bj] + j, {})
                    for i, v in col.items():
                        c[roff[bi] + i] = v
        out.cols = {j: c for j, c in out.cols.items() if c}
        return out

    def __repr__(self):
        return f"SparseMatrix({self.nrows}x{self.ncols}, nnz={self.nnz()})"


# --------------------------------------------------------------------------
# elimination and Smith normal form


def _dense_snf_diagonal(a: list[list[int]]) -> list[int]:
    """Diagonal of the Smith form of an integer matrix, divisibility chain."""
    a = [row[:] for row in a]
    m = len(a)
    n = len(a[0]) if m else 0
    diag = []
    t = 0
    while t < m and t < n:
        best = None
        for i in range(t, m):
            row = a[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        a[t], a[i] = a[i], a[t]
        for row in a:
            row[t], row[j] = row[j], row[t]
        while True:
            piv = a[t][t]
            moved = False
            for i in range(t + 1, m):
                if a[i][t]:
                    q = a[i][t] // piv
                    if q:
                        ri, rt = a[i], a[t]
                        for k in range(t, n):
                            ri[k] -= q * rt[k]
                    if a[i][t]:
                        a[t], a[i] = a[i], a[t]
                        moved = True
                        break
            if moved:
                continue
            rt = a[t]
            for j in range(t + 1, n):
                if rt[j]:
                    q = rt[j] // piv
                    if q:
                        for row in a[t:]:
                            row[j] -= q * row[t]
                    if rt[j]:
                        for row in a:
                            row[t], row[j] = row[j], row[t]
                        moved = True
                        break
            if moved:
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if a[i][j] % piv:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            rt, rb = a[t], a[bad]
            for k in range(t, n):
                rt[k] += rb[k]
        diag.append(abs(a[t][t]))
        t += 1
    return diag


def _to_integer_columns(M: SparseMatrix) -> SparseMatrix:
    """Scale columns to clear denominators; preserves rank over Q."""
    out = SparseMatrix(M.nrows, M.ncols)
    for j, col in M.cols.items():
        den = 1
        for v in col.values():
            if isinstance(v, Fraction):
                den = den * v.denominator // gcd(den, v.denominator)
        out.cols[j] = {i: int(v * den) for i, v in col.items()}
    return out


def _eliminate(M: SparseMatrix, ring: Ring) -> tuple[int, dict[int, dict[int, object]]]:
    """Pivot on units until none remain.

    Returns the number of unit pivots and the leftover matrix in row-major
    form. Over a field the leftover is empty.
    """
    mod = ring.p if ring.tag == "Fp" else 0
    rows: dict[int, dict[int, object]] = {}
    cols: dict[int, dict[int, object]] = {}
    for j, col in M.cols.items():
        c = {}
        for i, v in col.items():
            if mod:
                v %= mod
            if v != 0:
                c[i] = v
                rows.setdefault(i, {})[j] = v
        if c:
            cols[j] = c

    def unit(v):
        return v == 1 or v == -1 if ring.tag == "Z" else True

    rank = 0
    progress = True
    while progress and cols:
        progress = False
        for j in sorted(cols, key=lambda c: len(cols[c])):
            col = cols.get(j)
            if not col:
                continue
            best = None
            for i, v in col.items():
                if unit(v):
                    ln = len(rows[i])
                    if best is None or ln < best[0]:
                        best = (ln, i, v)
                        if ln == 1:
                            break
            if best is None:
                continue
            _, r, u = best
            progress = True
            rank += 1
            if ring.tag == "Z":
                uinv = u
            elif ring.tag == "Q":
                uinv = Fraction(1) / u if not isinstance(u, Fraction) else 1 / u
            else:
                uinv = pow(u, -1, mod)
            prow = rows.pop(r)
            pcol = cols.pop(j)
            del prow[j]
            del pcol[r]
            for k in prow:
                del cols[k][r]
            for i in pcol:
                del rows[i][j]
            for i, a in pcol.items():
                f = a * uinv
                if ring.tag == "Q" and isinstance(f, Fraction) and f.denominator == 1:
                    f = f.numerator
                rrow = rows[i]
                for k, b in prow.items():
                    w = rrow.get(k, 0) - f * b
                    if mod:
                        w %= mod
                    if w == 0:
                        if k in rrow:
                            del rrow[k]
                            del cols[k][i]
                    else:
                        rrow[k] = w
                        cols[k][i] = w
            for k in prow:
                if not cols[k]:
                    del cols[k]
            for i in pcol:
                if not rows[i]:
                    del rows[i]
    return rank, {i: r for i, r in rows.items() if r}


def smith_normal_form(M, ring: Ring = ZZ) -> tuple[tuple, int]:
    """Nonzero invariant factors (unit ones included) and the rank.

    ``M`` may be a ``SparseMatrix`` or a list of rows. Over a field every
    nonzero invariant factor is reported as 1.
    """
    if not isinstance(M, SparseMatrix):
        M = SparseMatrix.from_dense(M) if M else SparseMatrix(0, 0)
    if ring.tag == "Q":
        M = _to_integer_columns(M)
        inv, rank = smith_normal_form(M, ZZ)
        return (1,) * rank, rank
    rank, rest = _eliminate(M, ring)
    if ring.tag == "Fp" or not rest:
        return (1,) * rank, rank
    rix = sorted(rest)
    cix = sorted({j for r in rest.values() for j in r})
    cpos = {j: k for k, j in enumerate(cix)}
    dense = []
    for i in rix:
        row = [0] * len(cix)
        for j, v in rest[i].items():
            row[cpos[j]] = int(v)
        dense.append(row)
    diag = [d for d in _dense_snf_diagonal(dense) if d]
    return tuple([1] * rank + diag), rank + len(diag)


def rank_and_torsion(M: SparseMatrix, ring: Ring) -> tuple[int, tuple[int, ...]]:
    inv, rank = smith_normal_form(M, ring)
    return rank, tuple(d for d in inv if d > 1)


# --------------------------------------------------------------------------
# chain complexes


@dataclass(frozen=True)
class GradedGroup:
    """Per-degree ``(free rank, invariant factors > 1)``; zero degrees omitted."""

    groups: tuple[tuple[int, int, tuple[int, ...]], ...] = ()

    @classmethod
    def from_dict(cls, d: Mapping[int, tuple[int, tuple[int, ...]]]) -> "GradedGroup":
        items = []
        for n in sorted(d):
            free, tors = d[n]
            tors = tuple(sorted(t for t in tors if t > 1))
            if free or tors:
                items.append((n, free, tors))
        return cls(tuple(items))

    def as_dict(self) -> dict[int, tuple[int, tuple[int, ...]]]:
        return {n: (f, t) for n, f, t in self.groups}

    def __getitem__(self, n: int) -> tuple[int, tuple[int, ...]]:
        return self.as_dict().get(n, (0, ()))

    def is_zero(self) -> bool:
        return not self.groups

    def degrees(self) -> list[int]:
        return [n for n, _, _ in self.groups]

    def shift(self, k: int) -> "GradedGroup":
        return GradedGroup(tuple((n + k, f, t) for n, f, t in self.groups))

    def total_rank(self) -> int:
        return sum(f for _, f, _ in self.groups)

    def to_json(self) -> dict:
        return {str(n): {"free": f, "torsion": list(t)} for n, f, t in self.groups}

    def __str__(self):
        if not self.groups:
            return "0"
        parts = []
        for n, f, t in self.groups:
            summands = []
            if f:
                summands.append("R" if f == 1 else f"R^{f}")
            summands.extend(f"Z/{q}" for q in t)
            parts.append(f"H{n}=" + "+".join(summands))
        return ", ".join(parts)


class ChainComplex:
    """Bounded complex: ``ranks[n]`` and ``d[n]: C_n -> C_{n-1}``.

    ``labels`` optionally names the basis in each degree.
    """

    __slots__ = ("ring", "ranks", "d", "labels", "_homology")

    def __init__(self, ring: Ring, ranks: Mapping[int, int], d: Mapping[int, SparseMatrix] | None = None,
                 labels: Mapping[int, list] | None = None, check: bool = True):
        self.ring = ring
        self.ranks = {n: r for n, r in ranks.items() if r}
        self.d: dict[int, SparseMatrix] = {}
        for n, m in (d or {}).items():
            if self.rank(n) == 0 or self.rank(n - 1) == 0:
                continue
            if m.shape != (self.rank(n - 1), self.rank(n)):
                raise NotAChainComplex(f"d[{n}] has shape {m.shape}, expected {(self.rank(n - 1), self.rank(n))}")
            if m.cols:
                self.d[n] = m
        self.labels = dict(labels) if labels else None
        self._homology = None
        if check:
            self.validate()

    @classmethod
    def zero(cls, ring: Ring) -> "ChainComplex":
        return cls(ring, {})

    @classmethod
    def concentrated(cls, ring: Ring, degree: int, rank: int = 1) -> "ChainComplex":
        return cls(ring, {degree: rank})

    def rank(self, n: int) -> int:
        return self.ranks.get(n, 0)

    def diff(self, n: int) -> SparseMatrix:
        m = self.d.get(n)
        return m if m is not None else SparseMatrix(self.rank(n - 1), self.rank(n))

    def degrees(self) -> list[int]:
        return sorted(self.ranks)

    @property
    def lo(self) -> int | None:
        return min(self.ranks) if self.ranks else None

    @property
    def hi(self) -> int | None:
        return max(self.ranks) if self.ranks else None

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def is_zero_object(self) -> bool:
        return not self.ranks

    def validate(self):
        for n in self.d:
            if n - 1 in self.d:
                if not (self.d[n - 1] @ self.d[n]).is_zero(self.ring):
                    raise NotAChainComplex(f"d[{n - 1}] o d[{n}] != 0")

    def homology(self) -> GradedGroup:
        if self._homology is None:
            self._homology = homology(self)
        return self._homology

    def __repr__(self):
        return f"ChainComplex({self.ring}, ranks={dict(sorted(self.ranks.items()))})"


def homology(C: ChainComplex) -> GradedGroup:
    rk: dict[int, int] = {}
    tor: dict[int, tuple[int, ...]] = {}
    for n, m in C.d.items():
        rk[n], t = rank_and_torsion(m, C.ring)
        tor[n - 1] = t
    out = {}
    for n in C.ranks:
        free = C.rank(n) - rk.get(n, 0) - rk.get(n + 1, 0)
        out[n] = (free, tor.get(n, ()))
    return GradedGroup.from_dict(out)


class ChainMap:
    """Degree-zero map; ``comps[n]: source_n -> target_n``."""

    __slots__ = ("source", "target", "comps")

    def __init__(self, source: ChainComplex, target: ChainComplex, comps: Mapping[int, SparseMatrix] | None = None,
                 check: bool = True):
        if source.ring != target.ring:
            raise RingMismatch(f"{source.ring} vs {target.ring}")
        self.source = source
        self.target = target
        self.comps: dict[int, SparseMatrix] = {}
        for n, m in (comps or {}).items():
            if source.rank(n) == 0 or target.rank(n) == 0:
                continue
            if m.shape != (target.rank(n), source.rank(n)):
                raise NotAChainMap(f"component {n} has shape {m.shape}")
            if m.cols:
                self.comps[n] = m
        if check:
            self.validate()

    @property
    def ring(self) -> Ring:
        return self.source.ring

    def comp(self, n: int) -> SparseMatrix:
        m = self.comps.get(n)
        return m if m is not None else SparseMatrix(self.target.rank(n), self.source.rank(n))

    def validate(self):
        degs = set(self.source.ranks) | set(self.target.ranks)
        for n in degs:
            lhs = self.target.diff(n) @ self.comp(n)
            rhs = self.comp(n - 1) @ self.source.diff(n)
            if not lhs.equals(rhs, self.ring):
                raise NotAChainMap(f"square at degree {n} does not commute")

    @classmethod
    def identity(cls, C: ChainComplex) -> "ChainMap":
        return cls(C, C, {n: SparseMatrix.identity(r) for n, r in C.ranks.items()}, check=False)

    @classmethod
    def zero(cls, A: ChainComplex, B: ChainComplex) -> "ChainMap":
        return cls(A, B, {}, check=False)

    def __matmul__(self, other: "ChainMap") -> "ChainMap":
        """Composite ``self o other``."""
        comps = {n: self.comp(n) @ m for n, m in other.comps.items()}
        return ChainMap(other.source, self.target, comps, check=False)

    def __add__(self, other: "ChainMap") -> "ChainMap":
        degs = set(self.comps) | set(other.comps)
        return ChainMap(self.source, self.target, {n: self.comp(n) + other.comp(n) for n in degs}, check=False)

    def __neg__(self) -> "ChainMap":
        return ChainMap(self.source, self.target, {n: -m for n, m in self.comps.items()}, check=False)

    def scale(self, s) -> "ChainMap":
        return ChainMap(self.source, self.target, {n: m.scale(s) for n, m in self.comps.items()}, check=False)

    def equals(self, other: "ChainMap") -> bool:
        degs = set(self.comps) | set(other.comps)
        return all(self.comp(n).equals(other.comp(n), self.ring) for n in degs)

    def __repr__(self):
        return f"ChainMap({self.source!r} -> {self.target!r})"


# --------------------------------------------------------------------------
# constructions


def _check_ring(*cs: ChainComplex) -> Ring:
    rings = {c.ring for c in cs}
    if len(rings) > 1:
        raise RingMismatch(", ".join(map(str, rings)))
    return cs[0].ring


def shift(C: ChainComplex, k: int) -> ChainComplex:
    s = -1 if k % 2 else 1
    return ChainComplex(C.ring, {n + k: r for n, r in C.ranks.items()},
                        {n + k: (m if s == 1 else -m) for n, m in C.d.items()},
                        labels={n + k: l for n, l in C.labels.items()} if C.labels else None, check=False)


def shift_map(f: ChainMap, k: int, source: ChainComplex | None = None, target: ChainComplex | None = None) -> ChainMap:
    return ChainMap(source or shift(f.source, k), target or shift(f.target, k),
                    {n + k: m for n, m in f.comps.items()}, check=False)


def loop(C: ChainComplex) -> ChainComplex:
    return shift(C, -1)


def suspension(C: ChainComplex) -> ChainComplex:
    return shift(C, 1)


def direct_sum(*cs: ChainComplex) -> ChainComplex:
    ring = _check_ring(*cs)
    degs = sorted(set().union(*(c.ranks for c in cs)))
    ranks = {n: sum(c.rank(n) for c in cs) for n in degs}
    d = {}
    for n in degs:
        blocks = [[None] * len(cs) for _ in cs]
        for k, c in enumerate(cs):
            blocks[k][k] = c.diff(n)
        d[n] = SparseMatrix.block(blocks, [c.rank(n - 1) for c in cs], [c.rank(n) for c in cs])
    return ChainComplex(ring, ranks, d, check=False)


def cone(f: ChainMap) -> ChainComplex:
    A, B = f.source, f.target
    degs = sorted({n + 1 for n in A.ranks} | set(B.ranks))
    ranks = {n: A.rank(n - 1) + B.rank(n) for n in degs}
    d = {}
    for n in degs:
        d[n] = SparseMatrix.block(
            [[-A.diff(n - 1), None], [f.comp(n - 1), B.diff(n)]],
            [A.rank(n - 2), B.rank(n - 1)], [A.rank(n - 1), B.rank(n)])
    return ChainComplex(f.ring, ranks, d, check=False)


def fib(f: ChainMap) -> ChainComplex:
    A, B = f.source, f.target
    degs = sorted(set(A.ranks) | {n - 1 for n in B.ranks})
    ranks = {n: A.rank(n) + B.rank(n + 1) for n in degs}
    d = {}
    for n in degs:
        d[n] = SparseMatrix.block(
            [[A.diff(n), None], [-f.comp(n), -B.diff(n + 1)]],
            [A.rank(n - 1), B.rank(n)], [A.rank(n), B.rank(n + 1)])
    return ChainComplex(f.ring, ranks, d, check=False)


def fib_inclusion(f: ChainMap, fibre: ChainComplex | None = None) -> ChainMap:
    """The projection ``fib(f) -> A``, ``(a, b) -> a``."""
    F = fibre or fib(f)
    A = f.source
    comps = {}
    for n in F.ranks:
        r = A.rank(n)
        if r:
            comps[n] = SparseMatrix(r, F.rank(n), {j: {j: 1} for j in range(r)})
    return ChainMap(F, A, comps, check=False)


def loop_to_fib(f: ChainMap, fibre: ChainComplex | None = None) -> ChainMap:
    """The inclusion ``Omega B -> fib(f)``, ``b -> (0, b)``."""
    F = fibre or fib(f)
    B = f.target
    OB = loop(B)
    comps = {}
    for n in OB.ranks:
        a = f.source.rank(n)
        r = B.rank(n + 1)
        comps[n] = SparseMatrix(F.rank(n), r, {j: {a + j: 1} for j in range(r)})
    return ChainMap(OB, F, comps, check=False)


def fib_functor(u: ChainMap, v: ChainMap, f: ChainMap, g: ChainMap,
                source: ChainComplex | None = None, target: ChainComplex | None = None) -> ChainMap:
    """Map ``fib(f) -> fib(g)`` induced by a square ``g u = v f``."""
    S = source or fib(f)
    T = target or fib(g)
    comps = {}
    for n in S.ranks:
        comps[n] = SparseMatrix.block(
            [[u.comp(n), None], [None, v.comp(n + 1)]],
            [g.source.rank(n), g.target.rank(n + 1)], [f.source.rank(n), f.target.rank(n + 1)])
    return ChainMap(S, T, comps, check=False)


def cone_functor(u: ChainMap, v: ChainMap, f: ChainMap, g: ChainMap,
                 source: ChainComplex | None = None, target: ChainComplex | None = None) -> ChainMap:
    S = source or cone(f)
    T = target or cone(g)
    comps = {}
    for n in S.ranks:
        comps[n] = SparseMatrix.block(
            [[u.comp(n - 1), None], [None, v.comp(n)]],
            [g.source.rank(n - 1), g.target.rank(n)], [f.source.rank(n - 1), f.target.rank(n)])
    return ChainMap(S, T, comps, check=False)


def _tensor_index(C: ChainComplex, D: ChainComplex):
    """Offsets of ``C_p (x) D_q`` inside ``(C (x) D)_{p+q}``."""
    offs: dict[tuple[int, int], int] = {}
    ranks: dict[int, int] = {}
    for p in sorted(C.ranks):
        for q in sorted(D.ranks):
            n = p + q
            offs[(p, q)] = ranks.get(n, 0)
            ranks[n] = ranks.get(n, 0) + C.rank(p) * D.rank(q)
    return offs, ranks


def tensor(C: ChainComplex, D: ChainComplex) -> ChainComplex:
    ring = _check_ring(C, D)
    offs, ranks = _tensor_index(C, D)
    entries: dict[int, list] = {}
    for (p, q), off in offs.items():
        n = p + q
        dq = D.rank(q)
        lst = entries.setdefault(n, [])
        dc = C.d.get(p)
        if dc is not None:
            toff = offs[(p - 1, q)]
            for j, col in dc.cols.items():
                for i, v in col.items():
                    for k in range(dq):
                        lst.append((toff + i * dq + k, off + j * dq + k, v))
        dd = D.d.get(q)
        if dd is not None:
            toff = offs[(p, q - 1)]
            s = -1 if p % 2 else 1
            dq1 = D.rank(q - 1)
            for a in range(C.rank(p)):
                for j, col in dd.cols.items():
                    for i, v in col.items():
                        lst.append((toff + a * dq1 + i, off + a * dq + j, s * v))
    d = {n: SparseMatrix.from_entries(ranks.get(n - 1, 0), ranks[n], lst) for n, lst in entries.items()}
    return ChainComplex(ring, ranks, d, check=False)


def tensor_map(f: ChainMap, g: ChainMap, source: ChainComplex | None = None,
               target: ChainComplex | None = None) -> ChainMap:
    S = source or tensor(f.source, g.source)
    T = target or tensor(f.target, g.target)
    soffs, _ = _tensor_index(f.source, g.source)
    toffs, _ = _tensor_index(f.target, g.target)
    entries: dict[int, list] = {}
    for (p, q), off in soffs.items():
        if (p, q) not in toffs:
            continue
        fm, gm = f.comps.get(p), g.comps.get(q)
        if fm is None or gm is None:
            continue
        toff = toffs[(p, q)]
        k = fm.kron(gm)
        lst = entries.setdefault(p + q, [])
        for j, col in k.cols.items():
            for i, v in col.items():
                lst.append((toff + i, off + j, v))
    comps = {n: SparseMatrix.from_entries(T.rank(n), S.rank(n), lst) for n, lst in entries.items()}
    return ChainMap(S, T, comps, check=False)


def dual(C: ChainComplex) -> ChainComplex:
    ranks = {-n: r for n, r in C.ranks.items()}
    d = {}
    for n in ranks:
        m = C.d.get(1 - n)
        if m is not None:
            d[n] = m.T if (n + 1) % 2 == 0 else -m.T
    return ChainComplex(C.ring, ranks, d, check=False)


def dual_map(f: ChainMap, source: ChainComplex | None = None, target: ChainComplex | None = None) -> ChainMap:
    """``f^v: B^v -> A^v``."""
    return ChainMap(source or dual(f.target), target or dual(f.source),
                    {-n: m.T for n, m in f.comps.items()}, check=False)


def is_acyclic(C: ChainComplex) -> bool:
    return C.homology().is_zero()


def is_quasi_iso(f: ChainMap) -> bool:
    return is_acyclic(cone(f))


def is_invertible_object(C: ChainComplex) -> int | None:
    """Degree ``n`` when the homology is free of rank one in degree ``n``."""
    H = C.homology()
    if len(H.groups) != 1:
        return None
    n, free, tors = H.groups[0]
    return n if free == 1 and not tors else None


# --------------------------------------------------------------------------
# rank-one homology classes, computed modulo a prime with numpy

_BIG_PRIME = 2147483629  # largest prime below 2**31


def _nullspace_mod(a: np.ndarray, p: int) -> np.ndarray:
    """Rows spanning the right nullspace of ``a`` over F_p."""
    a = a.copy() % p
    m, n = a.shape
    pivots = []
    r = 0
    for c in range(n):
        if r >= m:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            a[[r, k]] = a[[k, r]]
        inv = pow(int(a[r, c]), -1, p)
        a[r] = (a[r] * inv) % p
        col = a[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            a[nzr] = (a[nzr] - (col[nzr, None] * a[r][None, :]) % p) % p
        pivots.append(c)
        r += 1
    pivset = set(pivots)
    free = [c for c in range(n) if c not in pivset]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for t, fc in enumerate(free):
        basis[t, fc] = 1
        for row, pc in enumerate(pivots):
            basis[t, pc] = (-a[row, fc]) % p
    return basis


def _dense_mod(M: SparseMatrix, p: int) -> np.ndarray:
    a = np.zeros((M.nrows, M.ncols), dtype=np.int64)
    for i, j, v in M.entries():
        a[i, j] = _norm_p(v, p)
    return a


def working_prime(ring: Ring) -> int:
    return ring.p if ring.tag == "Fp" else _BIG_PRIME


@dataclass
class RankOneClass:
    """A cycle ``z`` and a cocycle ``lam`` with ``lam(z) = 1`` in degree ``n`` (mod ``p``)."""

    degree: int
    cycle: np.ndarray
    functional: np.ndarray
    p: int


def rank_one_class(C: ChainComplex, n: int | None = None) -> RankOneClass:
    """Generator data for a complex whose homology is one-dimensional.

    Computation happens over F_p with ``p`` the ring's characteristic, or a
    large prime for Z and Q.
    """
    if n is None:
        n = is_invertible_object(C)
        if n is None:
            raise ValueError("complex is not invertible")
    p = working_prime(C.ring)
    dn = _dense_mod(C.diff(n), p)
    dn1 = _dense_mod(C.diff(n + 1), p)
    cycles = _nullspace_mod(dn, p) if dn.shape[0] else np.eye(C.rank(n), dtype=np.int64)
    cocycles = _nullspace_mod(dn1.T, p) if dn1.shape[1] else np.eye(C.rank(n), dtype=np.int64)
    pairing = (cocycles @ cycles.T) % p if cycles.size and cocycles.size else np.zeros((0, 0), dtype=np.int64)
    nz = np.argwhere(pairing)
    if nz.size == 0:
        raise ValueError(f"no homology in degree {n}")
    a, b = nz[0]
    lam = cocycles[a]
    z = cycles[b]
    inv = pow(int(pairing[a, b]), -1, p)
    return RankOneClass(n, z % p, (lam * inv) % p, p)


def induced_scalar(f: ChainMap, src: RankOneClass, tgt: RankOneClass) -> int:
    """Scalar of ``f`` on one-dimensional homology, as an element of F_p."""
    if src.degree != tgt.degree:
        return 0
    p = src.p
    m = f.comp(src.degree)
    img = np.zeros(f.target.rank(src.degree), dtype=object)
    for j, col in m.cols.items():
        zj = int(src.cycle[j])
        if zj:
            for i, v in col.items():
                img[i] = (img[i] + _norm_p(v, p) * zj) % p
    return int(sum(int(a) * int(b) for a, b in zip(tgt.functional, img)) % p)


def _norm_p(v, p: int) -> int:
    if isinstance(v, Fraction):
        return v.numerator * pow(v.denominator, -1, p) % p
    return v % p


def lift_unit(x: int, p: int, ring: Ring):
    """Interpret an F_p scalar as a unit of ``ring`` when it is +-1 (or any unit of F_p)."""
    if ring.tag == "Fp":
        return x % ring.p
    if x % p == 1:
        return 1
    if x % p == p - 1:
        return -1
    return None
