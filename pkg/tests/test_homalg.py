import random

import pytest
from hypothesis import given, settings, strategies as st

from pdpairs.diagrams import random_poset
from pdpairs.homalg import (QQ, ZZ, ChainComplex, ChainMap, Fp, GradedGroup, Ring, SparseMatrix, cone, dual, fib,
                            is_acyclic, is_invertible_object, is_quasi_iso, loop, loop_to_fib, shift, smith_normal_form,
                            suspension, tensor)
from pdpairs.posets import chain_complex_of

from oracles import complex_dense, homology_from_dense, invariant_factors, package_homology_dict

matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 5).flatmap(
        lambda c: st.lists(st.lists(st.integers(-6, 6), min_size=c, max_size=c), min_size=r, max_size=r)))


@settings(max_examples=80, deadline=None)
@given(matrices)
def test_snf_matches_sympy(rows):
    inv, rank = smith_normal_form(rows, ZZ)
    assert sorted(inv) == invariant_factors(rows)
    assert rank == len(invariant_factors(rows))


def _complexes(seed, count=25):
    rng = random.Random(seed)
    for _ in range(count):
        P = random_poset(rng, rng.randint(1, 6))
        yield chain_complex_of(P, reduced=rng.random() < 0.5)


@pytest.mark.parametrize("field", ["Z", "Q", 2, 3])
def test_order_complex_homology_against_oracle(field):
    ring = {"Z": ZZ, "Q": QQ}.get(field) or Fp(field)
    for C in _complexes(1):
        C = ChainComplex(ring, C.ranks, C.d)
        ranks, d = complex_dense(C)
        assert package_homology_dict(C.homology()) == homology_from_dense(ranks, d, field)


def test_torsion_is_detected():
    # Z --2--> Z has H_0 = Z/2
    C = ChainComplex(ZZ, {0: 1, 1: 1}, {1: SparseMatrix.from_dense([[2]])})
    assert C.homology() == GradedGroup(((0, 0, (2,)),))
    assert ChainComplex(QQ, {0: 1, 1: 1}, {1: SparseMatrix.from_dense([[2]])}).homology().is_zero()
    assert ChainComplex(Fp(2), {0: 1, 1: 1}, {1: SparseMatrix.from_dense([[2]])}).homology().total_rank() == 2


def test_constructions_square_to_zero():
    for C in _complexes(2, 12):
        for D in (shift(C, 3), shift(C, -1), loop(C), suspension(C), dual(C), tensor(C, C), cone(ChainMap.identity(C)),
                  fib(ChainMap.identity(C))):
            D.validate()


def test_shift_moves_homology():
    for C in _complexes(3, 8):
        assert shift(C, 2).homology() == C.homology().shift(2)
        assert loop(C).homology() == C.homology().shift(-1)


def test_identity_cone_and_fibre_are_acyclic():
    for C in _complexes(4, 8):
        f = ChainMap.identity(C)
        assert is_quasi_iso(f)
        assert is_acyclic(cone(f))
        assert is_acyclic(fib(f))


def test_loop_to_fib_of_zero_map_is_quasi_iso():
    for C in _complexes(5, 6):
        Z = ChainComplex.zero(ZZ)
        f = ChainMap.zero(C, Z)
        assert is_quasi_iso(loop_to_fib(ChainMap.zero(Z, C)))
        assert fib(f).homology() == C.homology()


def test_kunneth_over_q():
    cs = list(_complexes(6, 6))
    for A, B in zip(cs, cs[1:]):
        A, B = ChainComplex(QQ, A.ranks, A.d), ChainComplex(QQ, B.ranks, B.d)
        ha, hb = A.homology().as_dict(), B.homology().as_dict()
        want = {}
        for m, (fa, _) in ha.items():
            for n, (fb, _) in hb.items():
                want[m + n] = want.get(m + n, 0) + fa * fb
        got = {n: f for n, (f, _) in tensor(A, B).homology().as_dict().items()}
        assert got == {n: f for n, f in want.items() if f}


def test_dual_reflects_degrees_over_q():
    for C in _complexes(7, 8):
        C = ChainComplex(QQ, C.ranks, C.d)
        h = {n: f for n, (f, _) in C.homology().as_dict().items()}
        hd = {n: f for n, (f, _) in dual(C).homology().as_dict().items()}
        assert hd == {-n: f for n, f in h.items()}


def test_invertible_objects():
    assert is_invertible_object(ChainComplex.concentrated(ZZ, -2)) == -2
    assert is_invertible_object(ChainComplex.concentrated(ZZ, 0, rank=2)) is None
    C = ChainComplex(ZZ, {0: 1, 1: 1}, {1: SparseMatrix.from_dense([[2]])})
    assert is_invertible_object(C) is None


def test_ring_parsing():
    assert Ring.parse("Z") == ZZ and Ring.parse({"Fp": 5}) == Fp(5) and Ring.parse("Fp(7)") == Fp(7)
    with pytest.raises(ValueError):
        Fp(6)
    with pytest.raises(ValueError):
        Ring.parse("R")
