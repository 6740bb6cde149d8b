"""Independent reference computations used by the tests.

Nothing here imports the package's linear algebra: homology goes through
sympy's Smith normal form and combinatorics are brute force.
"""
from __future__ import annotations

import itertools

import sympy
from sympy.matrices.normalforms import smith_normal_form as sympy_snf
from sympy.polys.domains import ZZ as SZZ


def invariant_factors(rows: list[list[int]]) -> list[int]:
    """Nonzero diagonal of the Smith form, absolute values, sorted."""
    if not rows or not rows[0]:
        return []
    M = sympy.Matrix(rows)
    D = sympy_snf(M, domain=SZZ)
    out = [abs(int(D[i, i])) for i in range(min(D.shape)) if D[i, i] != 0]
    return sorted(out)


def rank_q(rows: list[list]) -> int:
    if not rows or not rows[0]:
        return 0
    return sympy.Matrix(rows).rank()


def rank_mod_p(rows: list[list[int]], p: int) -> int:
    if not rows or not rows[0]:
        return 0
    M = [[x % p for x in r] for r in rows]
    rank, col = 0, 0
    ncols = len(M[0])
    for col in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][col]), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][col], -1, p)
        M[rank] = [x * inv % p for x in M[rank]]
        for i in range(len(M)):
            if i != rank and M[i][col]:
                f = M[i][col]
                M[i] = [(a - f * b) % p for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def homology_from_dense(ranks: dict[int, int], d: dict[int, list[list[int]]], field: str | int = "Z") -> dict:
    """``{n: (free rank, torsion)}`` of a complex with ``d[n]: C_n -> C_{n-1}`` given densely."""
    out = {}
    for n, r in ranks.items():
        if not r:
            continue
        dn = d.get(n, [])
        dn1 = d.get(n + 1, [])
        if field == "Z":
            rk_n = len(invariant_factors(dn))
            inv = invariant_factors(dn1)
            rk_n1 = len(inv)
            tors = tuple(sorted(x for x in inv if x > 1))
        elif field == "Q":
            rk_n, rk_n1, tors = rank_q(dn), rank_q(dn1), ()
        else:
            rk_n, rk_n1, tors = rank_mod_p(dn, field), rank_mod_p(dn1, field), ()
        free = r - rk_n - rk_n1
        if free or tors:
            out[n] = (free, tors)
    return out


def package_homology_dict(G) -> dict:
    return {n: (f, tuple(t)) for n, f, t in G.groups}


def complex_dense(C) -> tuple[dict, dict]:
    ranks = dict(C.ranks)
    d = {}
    for n in ranks:
        if C.rank(n - 1):
            d[n] = [[int(x) for x in row] for row in C.diff(n).to_dense()]
    return ranks, d


# ---------------------------------------------------------------------------
# brute-force posets


def brute_leq(elements, covers):
    """Reflexive-transitive closure as a set of pairs."""
    rel = {(x, x) for x in elements} | set(covers)
    changed = True
    while changed:
        changed = False
        for (a, b), (c, e) in itertools.product(list(rel), list(rel)):
            if b == c and (a, e) not in rel:
                rel.add((a, e))
                changed = True
    return rel


def brute_chains(elements, leq) -> list[tuple]:
    """All nonempty strictly increasing chains."""
    out = []
    els = list(elements)
    for r in range(1, len(els) + 1):
        for combo in itertools.permutations(els, r):
            if all((combo[i], combo[i + 1]) in leq and combo[i] != combo[i + 1] for i in range(r - 1)):
                out.append(combo)
    return out


def brute_down_sets(elements, leq) -> set[frozenset]:
    out = set()
    els = list(elements)
    for r in range(len(els) + 1):
        for S in itertools.combinations(els, r):
            S = frozenset(S)
            if all(a in S for (a, b) in leq if b in S):
                out.add(S)
    return out


def simplicial_homology(chains: list[tuple], sub: set | None = None, field="Z", cohomology=False) -> dict:
    """Homology (or cohomology, in nonnegative degrees) of the order complex relative to the
    subcomplex of chains inside ``sub``."""
    sub = sub or set()
    simplices = [c for c in chains if not set(c) <= sub]
    by_dim: dict[int, list] = {}
    for c in simplices:
        by_dim.setdefault(len(c) - 1, []).append(tuple(c))
    index = {k: {s: i for i, s in enumerate(v)} for k, v in by_dim.items()}
    ranks = {k: len(v) for k, v in by_dim.items()}
    d = {}
    for k, simp in by_dim.items():
        if k == 0 or k - 1 not in index:
            continue
        M = [[0] * len(simp) for _ in range(ranks[k - 1])]
        for j, s in enumerate(simp):
            for i in range(len(s)):
                face = s[:i] + s[i + 1:]
                if face in index[k - 1]:
                    M[index[k - 1][face]][j] += (-1) ** i
        d[k] = M
    if cohomology:
        # cochain complex reindexed as a chain complex in degrees -k
        ranks_c = {-k: r for k, r in ranks.items()}
        dc = {}
        for k, M in d.items():
            dc[-(k - 1)] = [list(r) for r in zip(*M)]
        return homology_from_dense(ranks_c, dc, field)
    return homology_from_dense(ranks, d, field)
