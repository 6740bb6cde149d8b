import pytest

from pdpairs.geom import (AdDiagram, BoundaryMismatch, NotCombinatorialManifold, UnknownSpace, ad_pair, builtin_ads,
                          builtin_spaces, check_ad, circle_ad, circle_poset, cobordism_chain, comb_manifold_check,
                          constant_diagram, dimension_rank, double_check, get_ad, get_manifold, get_space, glue_check,
                          interval_block, interval_pair, k_maximal, manifold_local_to_global, planted_rp2, polygon,
                          product_check, random_products, realization_check, rp2, s0_cone_ad, subdivided_interval,
                          wedge_of_circles)
from pdpairs.homalg import QQ, ZZ
from pdpairs.morita import poincare_verdict
from pdpairs.posets import Poset, PosetPair, cube


def _rank_cube(n):
    c = cube(n)
    return c.total, c.boundary, {x: x.count("1") for x in c.total.elements}


@pytest.mark.parametrize("k", range(3, 9))
def test_polygons_are_combinatorial_manifolds(k):
    P = polygon(k)
    v = comb_manifold_check(P, (), dimension_rank(P))
    assert v.ok and v.detail["dimension"] == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cube_pairs_are_combinatorial_manifolds(n):
    I, dI, rho = _rank_cube(n)
    assert comb_manifold_check(I, dI, rho).ok


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_subdivided_intervals(k):
    pair = subdivided_interval(k)
    assert comb_manifold_check(pair.total, pair.boundary, dimension_rank(pair.total)).ok
    assert poincare_verdict(pair).formal_dimensions == [1]


def test_non_manifolds_are_rejected():
    W = wedge_of_circles(2)
    v = comb_manifold_check(W, (), dimension_rank(W))
    assert not v.ok and v.witness is not None
    with pytest.raises(NotCombinatorialManifold):
        manifold_local_to_global(W, (), dimension_rank(W), *constant_diagram(W))


@pytest.mark.parametrize("k", [4, 6])
def test_polygon_local_to_global(k):
    rep = get_manifold(f"polygon({k})").check(ZZ)
    assert rep["restriction_identity"] and rep["equivalent"]
    assert rep["global_poincare"] and rep["all_local_poincare"]
    assert all(rep["local"][f"e{i}"]["formal_dimensions"] == [1] for i in range(k))
    assert rep["realization"]["consistent"]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cube_local_to_global(n):
    rep = get_manifold(f"cube({n})").check(ZZ, realize=False)
    assert rep["restriction_identity"] and rep["equivalent"]


def test_planted_rp2_fails_with_its_witness():
    rep = planted_rp2().check(QQ)
    assert rep["restriction_identity"]
    assert not rep["global_poincare"] and not rep["all_local_poincare"] and not rep["maximal_local_poincare"]
    assert rep["equivalent"]
    assert rep["witness_index"] == "v0"
    assert set(rep["failing_indices"]) >= {"e0", "e3"}
    assert "e1" not in rep["failing_indices"] and "e2" not in rep["failing_indices"]


def test_ads():
    for name in builtin_ads():
        rep = check_ad(get_ad(name))
        assert rep["agree"], name
        assert rep["poincare"], name
    assert len(ad_pair(get_ad("s0-cone-square")).total) == 9


def test_ad_with_a_bad_face():
    X = AdDiagram(1, {"0": Poset.discrete(["p", "q", "r"]), "1": Poset.discrete(["*"])},
                  {("0", "1"): {"p": "*", "q": "*", "r": "*"}})
    rep = check_ad(X)
    assert rep["agree"] and not rep["poincare"] and rep["failing_faces"]


def test_gluing_two_intervals_gives_a_circle():
    a = interval_pair()
    b = a.relabel({"a": "a", "b": "b", "*": "**"})
    glued, v = glue_check(a, b, a.boundary)
    assert v.ok and v.detail["glued_poincare"] and v.detail["formal_dimensions"] == [1]
    assert not glued.boundary
    with pytest.raises(BoundaryMismatch):
        glue_check(a, a, a.boundary)


def test_doubling():
    assert double_check(interval_pair()).ok
    bad = PosetPair(Poset.from_covers(["0", "1"], [("0", "1")]), frozenset({"0"}))
    v = double_check(bad)
    assert v.ok and not v.detail["pair_poincare"]


def test_cobordism_chain():
    pair, v = cobordism_chain([interval_block(i) for i in range(3)])
    assert v.ok and v.detail["composite_poincare"] and v.detail["formal_dimensions"] == [1]
    assert pair.boundary == frozenset({"p0", "p3"})
    with pytest.raises(BoundaryMismatch):
        cobordism_chain([interval_block(0), interval_block(2)])


def test_realization_of_rp2():
    rep = realization_check(PosetPair(rp2(), frozenset()), ZZ)
    assert rep["poincare"] and rep["consistent"]
    assert rep["total_homology"].as_dict()[1] == (0, (2,))


def test_circle_times_interval_pair():
    rep = product_check(circle_ad(), s0_cone_ad())
    assert rep["ok"] and rep["product_poincare"]
    assert rep["formal_dimensions"]["product"] == [2]
    assert rep["factorisation_degrees"] and rep["factorisation_monodromy"] and rep["dimensions_add"]


def test_random_products():
    for nb, nf, b, f in random_products(0, 5):
        rep = product_check(b, f)
        assert rep["ok"], (nb, nf)


def test_empty_fibre_disables_the_converse():
    empty = PosetPair(Poset.discrete([]), frozenset())
    rep = product_check(PosetPair(circle_poset(), frozenset()), empty)
    assert not rep["converse_enabled"] and "notice" in rep and rep["ok"]


def test_non_poincare_factor():
    rep = product_check(k_maximal(3), PosetPair(circle_poset(), frozenset()))
    assert rep["ok"] and not rep["product_poincare"]


def test_space_registry():
    names = builtin_spaces()
    assert "polygon(k)" in names and "rp2-cone-pair" in names
    assert len(get_space("polygon(5)").total) == 10
    assert len(get_space(" sphere( 1 ) ").total) == 6
    for bad in ("nope", "polygon", "rp2(3)"):
        with pytest.raises(UnknownSpace):
            get_space(bad)
