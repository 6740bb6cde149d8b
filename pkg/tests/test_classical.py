import json
import random

import pytest

from pdpairs.classical import (RankOneLocalSystem, cap_map, enumerate_sign_systems, find_fundamental_class,
                               homology_generator, local_chain_complex, spivak_check, verify_seven, wall_check_pair)
from pdpairs.diagrams import direct_sum_systems, random_poset, yoneda
from pdpairs.geom import circle_poset, interval_pair, polygon, rp2, rp2_cone_pair, s0_to_point_pair, sphere_poset
from pdpairs.homalg import QQ, ZZ, ChainComplex, Fp
from pdpairs.posets import Poset, PosetPair, chain_complex_of, cylinder_pair
from pdpairs.serialize import dumps, fundamental_class_from_json, fundamental_class_to_json

from oracles import brute_chains, brute_leq, invariant_factors, rank_mod_p, simplicial_homology


def _absolute(P):
    return PosetPair(P, frozenset())


def test_sign_system_count_is_mod_two_first_cohomology():
    rng = random.Random(0)
    for P in [random_poset(rng, rng.randint(1, 6)) for _ in range(20)] + [circle_poset()]:
        chains = brute_chains(P.elements, brute_leq(P.elements, P.covers))
        h1 = simplicial_homology(chains, field=2, cohomology=True).get(-1, (0, ()))[0]
        assert len(enumerate_sign_systems(P)) == 2 ** h1
    # larger spaces: H^1(-; F_2) is one-dimensional for both
    assert len(enumerate_sign_systems(polygon(5))) == len(enumerate_sign_systems(rp2())) == 2


def test_sign_systems_are_pairwise_inequivalent():
    systems = enumerate_sign_systems(polygon(4))
    assert len(set(systems)) == len(systems) == 2
    assert sum(L.is_trivial() for L in systems) == 1


@pytest.mark.parametrize("ring", [ZZ, QQ, Fp(3)])
def test_homology_generator_spans_homology(ring):
    rng = random.Random(4)
    seen = 0
    for _ in range(40):
        P = random_poset(rng, rng.randint(2, 6))
        C = chain_complex_of(P)
        C = ChainComplex(ring, C.ranks, C.d)
        for n in C.ranks:
            v = homology_generator(C, n)
            if v is None:
                continue
            seen += 1
            if C.rank(n - 1):
                assert all(ring.normalize(x) == 0 for x in C.diff(n).apply(dict(enumerate(v))).values())
            B = [list(col) for col in zip(*C.diff(n + 1).to_dense())] if C.rank(n + 1) else []
            cols = B + [list(v)]
            M = [[int(c[i]) for c in cols] for i in range(C.rank(n))]
            if ring is ZZ:
                inv = invariant_factors(M)
                assert len(inv) == len(invariant_factors([[int(c[i]) for c in B] for i in range(C.rank(n))]) if B
                                       else []) + 1
                assert all(x == 1 for x in inv)
            elif ring is QQ:
                assert rank_mod_p(M, 10007) == (rank_mod_p([[int(c[i]) for c in B] for i in range(C.rank(n))], 10007)
                                                if B else 0) + 1
    assert seen > 10


def test_cap_with_a_fundamental_class_is_a_chain_map():
    rng = random.Random(1)
    fixtures = [(interval_pair(), ZZ), (_absolute(circle_poset()), ZZ), (_absolute(rp2()), ZZ),
                (_absolute(sphere_poset(2)), QQ)]
    for pair, ring in fixtures:
        fc = None
        for L in enumerate_sign_systems(pair.total):
            fc = find_fundamental_class(pair, L, ring)
            if fc is not None:
                break
        assert fc is not None
        P = pair.total
        rel = [c for c in P.chains() if not (pair.boundary_mask() >> c[-1]) & 1]
        mixed = direct_sum_systems(*(yoneda(P, x, ring) for x in rng.sample(P.elements, 2)))
        for xi in [yoneda(P, x, ring) for x in P.elements[:4]] + [mixed]:
            cap_map(fc.cycle, fc.degree, fc.L, xi, rel, P.chains()).validate()


def test_fundamental_class_is_a_relative_cycle():
    pair = interval_pair()
    fc = find_fundamental_class(pair, RankOneLocalSystem.trivial(pair.total), ZZ)
    lc = local_chain_complex(pair, fc.L, ZZ)
    assert fc.degree == 1
    bc = lc.connecting(fc.cycle)
    assert bc and all(len(c) == 1 for c in bc)


def _cylinders():
    C = circle_poset()
    return [
        ("interval", interval_pair(), ZZ, True, [1]),
        ("circle", _absolute(C), ZZ, True, [1]),
        ("sphere", _absolute(sphere_poset(2)), QQ, True, [2]),
        ("rp2-z", _absolute(rp2()), ZZ, True, [2]),
        ("rp2-f2", _absolute(rp2()), Fp(2), True, [2]),
        ("s0-cone", s0_to_point_pair(), ZZ, True, [1]),
        ("circle-cone", cylinder_pair(C, Poset.discrete(["*"]), {x: "*" for x in C}), QQ, True, [2]),
        ("interval-on-a-point", PosetPair(Poset.from_covers(["a", "*"], [("a", "*")]), frozenset({"a"})), ZZ,
         False, None),
    ]


@pytest.mark.parametrize("name,pair,ring,poincare,dims", _cylinders(), ids=[c[0] for c in _cylinders()])
def test_routes_agree_on_cylinders(name, pair, ring, poincare, dims):
    res = verify_seven(pair, ring)
    assert res["agree"], res["verdicts"]
    assert res["poincare"] is poincare
    if dims:
        assert res["formal_dimensions"]["omega"] == dims


def test_rp2_cone_routes_agree_negatively():
    res = verify_seven(rp2_cone_pair(), QQ)
    assert res["agree"] and res["poincare"] is False


def test_rp2_needs_a_twisted_orientation_over_z():
    P = rp2()
    wall = wall_check_pair(_absolute(P), ZZ)
    comp = wall.detail["components"][0]
    assert wall.ok and comp["degree"] == 2 and not comp["orientation_trivial"]
    assert find_fundamental_class(_absolute(P), RankOneLocalSystem.trivial(P), ZZ) is None


def test_spivak_finds_the_orientation():
    v = spivak_check(_absolute(rp2()), ZZ)
    assert v.ok and v.detail["components"][0]["degree"] == 2


def test_fundamental_class_round_trip():
    P = rp2()
    wall = wall_check_pair(_absolute(P), ZZ)
    data = wall.detail["components"][0]["fundamental_class"]
    for L in enumerate_sign_systems(P):
        fc = find_fundamental_class(_absolute(P), L, ZZ)
        if fc is None:
            continue
        text = dumps(fundamental_class_to_json(fc))
        back = fundamental_class_from_json(json.loads(text))
        assert dumps(fundamental_class_to_json(back)) == text
        assert back.cycle == fc.cycle and back.L == fc.L
    assert data["degree"] == 2
