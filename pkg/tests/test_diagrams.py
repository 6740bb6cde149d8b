import random

from pdpairs.diagrams import (Fibration, System, beck_chevalley_check, constant, extension_by_zero_check, hocolim,
                              holim, lan, projection_formula_check, random_pair, random_poset, random_presheaf,
                              recollement_check, relative_cohomology, relative_homology, restrict_to, vanishing_check,
                              yoneda)
from pdpairs.geom import circle_poset, interval_pair, polygon
from pdpairs.homalg import ZZ, ChainComplex
from pdpairs.posets import Poset, PosetMap, PosetPair

from oracles import brute_chains, brute_leq, homology_from_dense, package_homology_dict, simplicial_homology


def _dense(f, deg):
    return [[int(x) for x in row] for row in f.comps[deg].to_dense()] if deg in f.comps else None


def _degree(xi):
    degs = {n for x in xi.base for n in xi.value(x).degrees()}
    assert len(degs) <= 1
    return degs.pop() if degs else 0


def _brute_totalization(xi: System, cohomology: bool):
    """Cobar (coefficients at the bottom vertex) or bar (top vertex) for presheaves concentrated in one degree."""
    P = xi.base
    deg = _degree(xi)
    leq = brute_leq(P.elements, P.covers)
    chains = brute_chains(P.elements, leq)
    rk = {x: xi.value(x).rank(deg) for x in P}
    chains = [c for c in chains if rk[c[0] if cohomology else c[-1]]]
    by_dim = {}
    for c in chains:
        by_dim.setdefault(len(c) - 1, []).append(c)
    off = {}
    ranks = {}
    for k, cs in by_dim.items():
        o = 0
        for c in cs:
            off[c] = o
            o += rk[c[0] if cohomology else c[-1]]
        ranks[k] = o

    def mat(lo, hi):  # presheaf map xi(hi) -> xi(lo) as dense rows
        if lo == hi:
            return [[int(i == j) for j in range(rk[lo])] for i in range(rk[lo])]
        f = xi.map(lo, hi)
        d = _dense(f, deg)
        return d if d is not None else [[0] * rk[hi] for _ in range(rk[lo])]

    d = {}
    for k, cs in by_dim.items():
        if k == 0:
            continue
        if cohomology:
            # delta: C^{k-1} -> C^k; stored as d[-(k-1)] : C_{-(k-1)} -> C_{-k}
            M = [[0] * ranks.get(k - 1, 0) for _ in range(ranks[k])]
            for c in cs:
                for i in range(k + 1):
                    face = c[:i] + c[i + 1:]
                    if face not in off:
                        continue
                    sign = (-1) ** i
                    A = mat(c[0], c[1]) if i == 0 else mat(c[0], c[0])
                    for r in range(rk[c[0]]):
                        for s in range(rk[face[0]]):
                            M[off[c] + r][off[face] + s] += sign * A[r][s]
            d[-(k - 1)] = M
        else:
            M = [[0] * ranks[k] for _ in range(ranks.get(k - 1, 0))]
            for c in cs:
                for i in range(k + 1):
                    face = c[:i] + c[i + 1:]
                    if face not in off:
                        continue
                    sign = (-1) ** i
                    A = mat(c[-2], c[-1]) if i == k else mat(c[-1], c[-1])
                    for r in range(rk[face[-1]]):
                        for s in range(rk[c[-1]]):
                            M[off[face] + r][off[c] + s] += sign * A[r][s]
            d[k] = M
    if cohomology:
        H = homology_from_dense({-k: r for k, r in ranks.items()}, {n: m for n, m in d.items()
                                                                  if ranks.get(-n + 1, 0) and ranks.get(-n, 0)})
    else:
        H = homology_from_dense(ranks, {n: m for n, m in d.items() if ranks.get(n - 1, 0)})
    return {n + deg: v for n, v in H.items()}


def _cases(seed, count=20, max_n=5):
    rng = random.Random(seed)
    for _ in range(count):
        P = random_poset(rng, rng.randint(1, max_n))
        yield rng, P


def test_holim_and_hocolim_against_brute_force():
    for rng, P in _cases(0, 25):
        xi = random_presheaf(rng, P)
        assert package_homology_dict(holim(xi).homology()) == _brute_totalization(xi, True)
        assert package_homology_dict(hocolim(xi).homology()) == _brute_totalization(xi, False)


def test_constant_coefficients_give_order_complex_cohomology():
    for rng, P in _cases(1, 20):
        pair = random_pair(rng, P)
        R = ChainComplex.concentrated(ZZ, 0)
        leq = brute_leq(P.elements, P.covers)
        chains = brute_chains(P.elements, leq)
        sub = set(pair.boundary)
        rel = relative_cohomology(pair, constant(P, R)).homology()
        want = simplicial_homology(chains, sub, cohomology=True)
        assert package_homology_dict(rel) == want
        relh = relative_homology(pair, constant(P, R)).homology()
        assert package_homology_dict(relh) == simplicial_homology(chains, sub)


def test_kernel_and_fibre_models_agree():
    for rng, P in _cases(2, 15):
        pair = random_pair(rng, P)
        xi = random_presheaf(rng, P)
        a = relative_cohomology(pair, xi, model="kernel").homology()
        b = relative_cohomology(pair, xi, model="fib")[0].homology()
        assert a == b
        c = relative_homology(pair, xi, model="quotient").homology()
        assert c == relative_homology(pair, xi, model="cone")[0].homology()


def test_representables_have_unit_hocolim():
    for rng, P in _cases(3, 10):
        for x in P:
            H = hocolim(yoneda(P, x)).homology()
            assert package_homology_dict(H) == {0: (1, ())}


def test_lan_along_identity_and_to_a_point():
    for rng, P in _cases(4, 10):
        xi = random_presheaf(rng, P)
        L = lan(PosetMap.identity(P), xi)
        for x in P:
            assert L.value(x).homology() == xi.value(x).homology()
        pt = Poset.discrete(["*"])
        collapse = PosetMap(P, pt, {x: "*" for x in P})
        assert lan(collapse, xi).value("*").homology() == hocolim(xi).homology()


def test_restriction_is_functorial():
    for rng, P in _cases(5, 10):
        xi = random_presheaf(rng, P)
        sub = [x for x in P if rng.random() < 0.6] or [P.elements[0]]
        r = restrict_to(xi, sub)
        for a, b in r.base.covers:
            assert r.map(a, b).equals(xi.map(a, b))


def test_recollement_on_fixtures_and_random():
    fixtures = [interval_pair(), PosetPair(circle_poset(), frozenset({"a"})), PosetPair(polygon(4), frozenset())]
    for pair in fixtures:
        rng = random.Random(len(pair.total))
        xi = random_presheaf(rng, pair.total)
        assert recollement_check(pair, xi).ok
        if pair.boundary:
            eta = restrict_to(random_presheaf(rng, pair.total), pair.boundary)
            assert extension_by_zero_check(pair, eta).ok
            assert vanishing_check(pair, eta).ok
    for rng, P in _cases(6, 20):
        pair = random_pair(rng, P)
        assert recollement_check(pair, random_presheaf(rng, P)).ok


def test_vanishing_reports_inapplicable_pairs():
    P = Poset.from_covers(["a", "b"], [("a", "b")])
    pair = PosetPair(P, frozenset({"a"}))
    eta = restrict_to(random_presheaf(random.Random(0), P), {"a"})
    v = vanishing_check(pair, eta)
    assert v.ok and v.detail["applicable"] in (True, False)


def _fibration(values_by_index, I, trans, variance="cocartesian"):
    return Fibration.build(I, values_by_index, trans, variance)


def test_beck_chevalley_for_a_cocartesian_fibration():
    I = Poset.from_covers(["i", "j", "k"], [("i", "j"), ("i", "k")])
    F = Poset.from_covers(["0", "1"], [("0", "1")])
    const = {"0": "0", "1": "0"}
    ident = {"0": "0", "1": "1"}
    fib = _fibration({x: F for x in I}, I, {("i", "j"): const, ("i", "k"): ident})
    rng = random.Random(3)
    for keep in (["i", "j"], ["j", "k"], ["k"], ["i", "j", "k"]):
        g = PosetMap.inclusion(I, keep)
        xi = random_presheaf(rng, fib.total.op()).as_presheaf()
        assert beck_chevalley_check(fib, g, xi).ok


def test_projection_formula_for_a_cartesian_fibration():
    I = Poset.from_covers(["i", "j"], [("i", "j")])
    F = Poset.discrete(["p", "q"])
    fib = _fibration({x: F for x in I}, I, {("i", "j"): {"p": "p", "q": "p"}}, "cartesian")
    rng = random.Random(5)
    for _ in range(5):
        xi = random_presheaf(rng, fib.total)
        zeta = random_presheaf(rng, I)
        assert projection_formula_check(fib.projection, xi, zeta).ok
