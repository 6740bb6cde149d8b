import random

import pytest

from pdpairs.classical import kqs_check
from pdpairs.diagrams import PRESHEAF, System, random_complex, random_pair, random_poset, random_presheaf
from pdpairs.geom import (circle_poset, interval_pair, k_maximal, polygon, rp2, rp2_cone_pair, sphere_poset,
                          wedge_of_circles)
from pdpairs.homalg import QQ, ZZ, ChainMap, Fp
from pdpairs.morita import (NotGroupoidal, NotTame, boundary_restriction_check, classifying_system, coend_reconstruct,
                            compare_models, connecting_map, dbar_d_shadow, dualising_system, local_to_global,
                            poincare_verdict, rank_one_scalars, rigidity_checks, verify_boundary_principle,
                            verify_complementation, verify_groupoidal_formula, verify_mayer_vietoris_lefschetz,
                            verify_morita)
from pdpairs.posets import Poset, PosetPair, cylinder_pair

from oracles import package_homology_dict

Z_SHIFTED = {-1: (1, ())}


def test_interval_pair_omega():
    pair = interval_pair()
    omega = classifying_system(pair)
    for x in pair.total:
        assert package_homology_dict(omega.value(x).homology()) == Z_SHIFTED
    pv = poincare_verdict(pair, omega=omega)
    assert pv.groupoidal and pv.poincare and pv.formal_dimensions == [1]


def test_morita_on_random_pairs():
    rng = random.Random(0)
    for _ in range(25):
        P = random_poset(rng, rng.randint(1, 5))
        pair = random_pair(rng, P)
        ring = rng.choice([ZZ, QQ, Fp(3)])
        extra = [random_presheaf(rng, P, ring) for _ in range(2)]
        assert verify_morita(pair, ring=ring).ok
        assert verify_morita(pair, extra, ring=ring).ok


def _interval_system(rng, ring):
    I = Poset.chain(1)
    lo, hi = I.elements
    top = random_complex(rng, ring)
    if rng.random() < 0.5:
        bottom, m = top, ChainMap.identity(top)
    else:
        bottom = random_complex(rng, ring)
        m = ChainMap.zero(top, bottom)
    return I, System(I, {lo: bottom, hi: top}, {(lo, hi): m}, PRESHEAF, ring)


def test_interval_reconstruction_is_evaluation_at_the_top():
    rng = random.Random(7)
    I = Poset.chain(1)
    pair = PosetPair(I, frozenset())
    omega = classifying_system(pair)
    lo, hi = I.elements
    assert omega.value(lo).homology().is_zero()
    assert package_homology_dict(omega.value(hi).homology()) == {0: (1, ())}
    for k in range(20):
        if k % 2:
            xi = random_presheaf(rng, I)
        else:
            _, xi = _interval_system(rng, ZZ)
        assert coend_reconstruct(omega, xi).homology() == xi.value(hi).homology()


def test_non_groupoidal_witness_on_a_collapsed_interval():
    P = Poset.from_covers(["a", "*"], [("a", "*")])
    pv = poincare_verdict(PosetPair(P, frozenset()))
    assert not pv.groupoidal
    assert pv.witnesses["non_groupoidal_cover"] == ("a", "*")


def test_rp2_cone_formula_refuses():
    pair = rp2_cone_pair()
    with pytest.raises(NotGroupoidal):
        verify_groupoidal_formula(pair, QQ)


def test_groupoidal_formula_on_fixtures():
    for pair in (interval_pair(), PosetPair(circle_poset(), frozenset()), PosetPair(sphere_poset(2), frozenset())):
        v = verify_groupoidal_formula(pair)
        assert v.ok, v.detail["failures"]


def test_boundary_principle_and_connecting_map():
    pair = interval_pair()
    assert verify_boundary_principle(pair).ok
    assert connecting_map(pair).is_equivalence().ok
    assert boundary_restriction_check(pair).ok
    cyl = cylinder_pair(circle_poset(), Poset.discrete(["*"]), {x: "*" for x in circle_poset()})
    assert connecting_map(cyl, QQ).is_equivalence().ok is poincare_verdict(cyl, QQ).poincare


def test_boundary_principle_requires_tameness():
    P = Poset.from_covers(["p0", "p1", "p2", "p3"], [("p0", "p2"), ("p0", "p3"), ("p1", "p2")])
    pair = PosetPair(P, frozenset({"p0", "p1", "p3"}))
    with pytest.raises(NotTame):
        verify_boundary_principle(pair)


def test_kernel_and_fib_models_agree():
    rng = random.Random(2)
    for _ in range(15):
        P = random_poset(rng, rng.randint(1, 5))
        assert compare_models(random_pair(rng, P)).ok


def test_local_to_global_on_a_polygon():
    P = polygon(6)
    pair = PosetPair(P, frozenset())
    cover = [(P.down(e), P.strict_down(e)) for e in P.maximal()]
    glob = local_to_global(pair, cover)
    rep = glob.cover_report
    assert glob.poincare and rep["biconditional"] and rep["restrictions_ok"]
    assert all(m["poincare"] for m in rep["members"])


def test_complementation_on_a_circle():
    P = circle_poset()
    pair = PosetPair(P, frozenset())
    X1 = {"a", "b", "c"}
    X2 = {"a", "b", "d"}
    assert verify_complementation(pair, X1, X2).ok


def test_mayer_vietoris_lefschetz():
    assert verify_mayer_vietoris_lefschetz(circle_poset(), {"a", "b", "c"}, {"a", "b", "d"}).ok
    P = polygon(4)
    half = {"v0", "v1", "v2", "e0", "e1"}
    rest = {"v2", "v3", "v0", "e2", "e3"}
    assert verify_mayer_vietoris_lefschetz(P, half, rest, QQ).ok


def test_dualising_system_coend_matches_rank_one():
    for P in (circle_poset(), polygon(4)):
        omega = classifying_system(PosetPair(P, frozenset()))
        a = dualising_system(omega, "coend")
        b = dualising_system(omega, "rank-one")
        for x in P:
            assert a.system.value(x).homology() == b.system.value(x).homology()
        assert dbar_d_shadow(omega, a).ok and dbar_d_shadow(omega, b).ok


def test_rp2_orientation_is_twisted_over_z():
    omega = classifying_system(PosetPair(rp2(), frozenset()), ZZ)
    pv = poincare_verdict(PosetPair(rp2(), frozenset()), ZZ, omega)
    assert pv.poincare and pv.formal_dimensions == [2]
    _, scalars = rank_one_scalars(omega.system)
    assert any(s != 1 for s in scalars.values())


def test_rigidity_fixtures():
    assert poincare_verdict(k_maximal(2)).poincare
    for k in (3, 4):
        assert not poincare_verdict(k_maximal(k)).poincare
    assert not poincare_verdict(PosetPair(wedge_of_circles(2), frozenset())).groupoidal
    for pair in (interval_pair(), k_maximal(2), k_maximal(3), PosetPair(rp2(), frozenset()),
                 PosetPair(wedge_of_circles(2), frozenset())):
        assert rigidity_checks(pair).ok


def test_kqs_uses_dualisable_coefficients():
    P = Poset.from_covers(["p0", "p1", "p2", "p3"], [("p0", "p2"), ("p0", "p3"), ("p1", "p2")])
    pair = PosetPair(P, frozenset({"p0", "p1", "p3"}))
    v = kqs_check(pair)
    assert v.ok and v.detail["poincare"]
    unit = [c for c in v.detail["cases"] if c["scale"] == 1]
    assert unit and all(c["one"] and c["two"] for c in unit)
    # non-unit multiples of the class fail both conditions together
    assert all(not c["one"] and not c["two"] for c in v.detail["cases"] if c["scale"] != 1)


def test_tame_groupoidal_pairs_are_poincare():
    rng = random.Random(11)
    for _ in range(60):
        P = random_poset(rng, rng.randint(1, 5))
        pair = random_pair(rng, P)
        for ring in (ZZ, QQ):
            assert rigidity_checks(pair, ring).ok
