"""Geometric fixtures and checks: built-in spaces, ads, combinatorial manifolds, gluing, products."""
from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .classical import wall_check_pair
from .homalg import ZZ, GradedGroup, Ring, is_quasi_iso
from .morita import classifying_system, dualising_system, poincare_verdict, rank_one_scalars, _is_coboundary, _mul
from .posets import (Poset, PosetError, PosetPair, _bits, chain_complex_of, cube, double, glue, edge_path_group,
                     grothendieck, is_final_inclusion, is_weakly_contractible, product_pair)
from .diagrams import inclusion_map
from .verdict import Verdict, label

CERT_MANIFOLD = "combinatorial manifold (homology-certified)"


class NotCombinatorialManifold(ValueError):
    pass


class BoundaryMismatch(ValueError):
    pass


class EmptyFiber(ValueError):
    pass


class UnknownSpace(KeyError):
    pass


# ---------------------------------------------------------------------------
# built-in spaces


def face_poset(facets: Iterable[Iterable]) -> Poset:
    """Face poset of the simplicial complex generated by ``facets``; faces named by their sorted vertices."""
    faces = set()
    for f in facets:
        f = sorted(f)
        for r in range(1, len(f) + 1):
            faces.update(itertools.combinations(f, r))
    order = sorted(faces, key=lambda s: (len(s), s))

    def name(s):
        return "".join(map(str, s)) if all(isinstance(v, int) and v < 10 for v in s) else "-".join(map(str, s))

    covers = []
    for t in order:
        for i in range(len(t)):
            if len(t) > 1:
                covers.append((name(t[:i] + t[i + 1:]), name(t)))
    return Poset.from_covers([name(s) for s in order], covers)


def point() -> Poset:
    return Poset.discrete(["*"])


def interval_pair() -> PosetPair:
    """(D^1, S^0): two endpoints below one open cell."""
    P = Poset.from_covers(["a", "b", "*"], [("a", "*"), ("b", "*")])
    return PosetPair(P, frozenset({"a", "b"}))


def circle_poset() -> Poset:
    """Two minima below two maxima."""
    return Poset.from_covers(["a", "b", "c", "d"], [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])


def sphere_poset(n: int) -> Poset:
    """Face poset of the boundary of the (n+1)-simplex."""
    if n < 0:
        return Poset.discrete([])
    return face_poset(itertools.combinations(range(n + 2), n + 1))


def polygon(k: int) -> Poset:
    if k < 2:
        raise ValueError("a polygon needs at least 2 vertices")
    vs = [f"v{i}" for i in range(k)]
    es = [f"e{i}" for i in range(k)]
    covers = [(vs[i], es[i]) for i in range(k)] + [(vs[(i + 1) % k], es[i]) for i in range(k)]
    return Poset.from_covers(vs + es, covers)


RP2_FACETS = [(1, 2, 3), (1, 3, 4), (1, 4, 5), (1, 5, 6), (1, 6, 2), (2, 3, 5), (3, 4, 6), (4, 5, 2), (5, 6, 3),
              (6, 2, 4)]


def rp2() -> Poset:
    """Face poset of the 6-vertex real projective plane."""
    return face_poset(RP2_FACETS)


def subdivided_interval(k: int) -> PosetPair:
    """Vertices j0..jk and edges e1..ek, with boundary the two end vertices."""
    js = [f"j{i}" for i in range(k + 1)]
    es = [f"e{i}" for i in range(1, k + 1)]
    covers = [(js[i - 1], es[i - 1]) for i in range(1, k + 1)] + [(js[i], es[i - 1]) for i in range(1, k + 1)]
    return PosetPair(Poset.from_covers(js + es, covers), frozenset({js[0], js[-1]}))


def wedge_of_circles(g: int) -> Poset:
    """``g`` circle posets sharing one minimal point ``v``."""
    elements = ["v"]
    covers = []
    for i in range(g):
        a, c, d = f"a{i}", f"c{i}", f"d{i}"
        elements += [a, c, d]
        covers += [("v", c), ("v", d), (a, c), (a, d)]
    return Poset.from_covers(elements, covers)


def k_maximal(k: int, fibre: Poset | None = None) -> PosetPair:
    """Grothendieck pair over ``j < i_1..i_k`` with ``X(j) = fibre`` (default two points) and ``X(i) = pt``."""
    fibre = fibre if fibre is not None else Poset.discrete(["p", "q"])
    I = Poset.from_covers(["j"] + [f"i{m}" for m in range(1, k + 1)], [("j", f"i{m}") for m in range(1, k + 1)])
    values = {"j": fibre, **{f"i{m}": point() for m in range(1, k + 1)}}
    trans = {("j", f"i{m}"): {x: "*" for x in fibre.elements} for m in range(1, k + 1)}
    P, _ = grothendieck(I, values, trans)
    return PosetPair(P, frozenset())


def cylinder(Y: Poset, Z: Poset, g: Mapping) -> PosetPair:
    from .posets import cylinder_pair
    return cylinder_pair(Y, Z, g)


def disjoint_union(*posets: Poset, tags: Sequence | None = None) -> Poset:
    tags = tags or list(range(len(posets)))
    elements, covers = [], []
    for t, P in zip(tags, posets):
        elements += [(t, x) for x in P.elements]
        covers += [((t, a), (t, b)) for a, b in P.covers]
    return Poset.from_covers(elements, covers)


def rp2_cone_pair() -> PosetPair:
    """``RP^2 + RP^2 -> pt`` as a cylinder pair."""
    R = rp2()
    Y = Poset.from_covers([f"{x}{t}" for t in "AB" for x in R.elements],
                          [(f"{a}{t}", f"{b}{t}") for t in "AB" for a, b in R.covers])
    return cylinder(Y, point(), {y: "*" for y in Y.elements})


def s0_to_point_pair() -> PosetPair:
    return cylinder(Poset.discrete(["p", "q"]), point(), {"p": "*", "q": "*"})


_BUILTINS: dict[str, tuple[Callable, str]] = {
    "point": (lambda: PosetPair(point(), frozenset()), "one point, no boundary"),
    "two-points": (lambda: PosetPair(Poset.discrete(["p", "q"]), frozenset()), "two points, no boundary"),
    "interval-pair": (interval_pair, "(D^1, S^0)"),
    "circle": (lambda: PosetPair(circle_poset(), frozenset()), "four-element circle"),
    "sphere(n)": (lambda n: PosetPair(sphere_poset(n), frozenset()), "face poset of the boundary of the (n+1)-simplex"),
    "polygon(k)": (lambda k: PosetPair(polygon(k), frozenset()), "k-gon face poset"),
    "rp2": (lambda: PosetPair(rp2(), frozenset()), "6-vertex RP^2, 31 faces"),
    "rp2-cone-pair": (rp2_cone_pair, "RP^2 + RP^2 -> pt cylinder pair"),
    "subdivided-interval(k)": (subdivided_interval, "interval with k edges, boundary the endpoints"),
    "wedge-of-circles(g)": (lambda g: PosetPair(wedge_of_circles(g), frozenset()), "g circles at one point"),
    "k-maximal(k)": (k_maximal, "k maxima over one fibre of two points"),
    "s0-cone-pair": (s0_to_point_pair, "S^0 -> pt cylinder pair, a model of (D^1, S^0)"),
    "cube-pair(n)": (cube, "([1]^n, punctured cube)"),
}


def builtin_spaces() -> dict[str, str]:
    """Names (with parameter placeholders) and descriptions."""
    return {name: desc for name, (_, desc) in _BUILTINS.items()}


def get_space(spec: str) -> PosetPair:
    """Resolve ``"polygon(5)"``, ``"rp2"`` and friends."""
    m = re.fullmatch(r"\s*([a-z0-9-]+)\s*(?:\(\s*(-?\d+)\s*\))?\s*", spec)
    if not m:
        raise UnknownSpace(spec)
    base, arg = m.group(1), m.group(2)
    for name, (fn, _) in _BUILTINS.items():
        stem = name.split("(")[0]
        if stem == base and (("(" in name) == (arg is not None)):
            return fn(int(arg)) if arg is not None else fn()
    raise UnknownSpace(spec)


# ---------------------------------------------------------------------------
# ads


@dataclass
class AdDiagram:
    """A strict diagram over the n-cube: ``values[vertex]`` posets, ``maps[(v, w)]`` along cube covers."""

    n: int
    values: dict
    maps: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = cube(self.n).total
        missing = [v for v in idx.elements if v not in self.values]
        if missing:
            raise PosetError(f"ad has no value at {missing[0]}")
        self.index = idx
        self.pair()  # validates functoriality

    def pair(self) -> PosetPair:
        return ad_pair(self)


def ad_pair(X: AdDiagram) -> PosetPair:
    """Grothendieck pair over ``(cube, punctured cube)``."""
    C = cube(X.n)
    P, _ = grothendieck(C.total, X.values, X.maps)
    return PosetPair(P, frozenset(e for e in P.elements if e[0] in C.boundary))


def face_pair(X: AdDiagram, s) -> PosetPair:
    """``(int_{<=s} X, int_{<s} X)``: the cylinder pair of ``colim_{<s} X -> X(s)``."""
    C = cube(X.n).total
    below = frozenset(C.down(s))
    P, _ = grothendieck(C.sub(below), {t: X.values[t] for t in below},
                        {(a, b): m for (a, b), m in X.maps.items() if a in below and b in below})
    return PosetPair(P, frozenset(e for e in P.elements if e[0] != s))


def check_ad(X: AdDiagram, ring: Ring = ZZ) -> dict:
    """Global verdict against the face-by-face classical criterion."""
    pair = ad_pair(X)
    pv = poincare_verdict(pair, ring)
    faces = {}
    for s in X.index.elements:
        fp = face_pair(X, s)
        faces[s] = wall_check_pair(fp, ring)
    faces_ok = all(v.ok for v in faces.values())
    return {
        "poincare": pv.poincare,
        "faces_classical": faces_ok,
        "agree": pv.poincare == faces_ok,
        "verdict": pv,
        "faces": {label(s): v for s, v in faces.items()},
        "failing_faces": [label(s) for s, v in faces.items() if not v.ok],
    }


# ---------------------------------------------------------------------------
# combinatorial manifolds


def _is_sphere(Q: Poset, m: int) -> tuple[bool, str]:
    """Homology sphere of dimension m (and simply connected when m >= 2)."""
    if m < -1:
        return False, "negative dimension"
    if m == -1:
        return len(Q) == 0, "S^-1 is empty"
    if len(Q) == 0:
        return False, "empty"
    H = chain_complex_of(Q, reduced=True).homology()
    want = GradedGroup(((m, 1, ()),))
    if H != want:
        return False, f"reduced homology {H}"
    if m >= 2:
        pres = edge_path_group(Q)
        if pres is None or pres[0] != 0:
            return False, "edge-path group not shown trivial"
    return True, "ok"


def _is_disc_pair(Q: Poset, B: frozenset, m: int) -> tuple[bool, str]:
    """(|Q|, |B|) looks like (D^m, S^{m-1})."""
    if m < 0:
        return False, "negative dimension"
    if len(Q) == 0:
        return False, "empty"
    c = is_weakly_contractible(Q)
    if not c.ok:
        return False, "total not contractible"
    ok, why = _is_sphere(Q.sub(B), m - 1)
    if not ok:
        return False, f"boundary: {why}"
    return True, "ok"


def comb_manifold_check(I: Poset, dI: Iterable, rho: Mapping, d: int | None = None) -> Verdict:
    dI = frozenset(dI)
    if not I.is_down_closed(dI):
        return Verdict(False, "combinatorial manifold", detail={"reason": "boundary not down-closed"})
    for a, b in I.covers:
        if rho[a] >= rho[b]:
            return Verdict(False, "combinatorial manifold", witness=(a, b), detail={"reason": "rank not increasing"})
    maxima = I.maximal()
    if d is None:
        d = max((rho[x] for x in I.elements), default=0)
    for i in maxima:
        if i in dI or rho[i] != d:
            return Verdict(False, "combinatorial manifold", witness=i,
                           detail={"reason": "maximal element in boundary or of the wrong rank"})
    for j in I.elements:
        jdx = I.idx(j)
        for i in I.elements:
            if i == j or not I.leq(j, i):
                continue
            between = I.from_mask(I.up_mask(jdx) & I.down_mask(I.idx(i)) & ~(1 << jdx) & ~(1 << I.idx(i)))
            ok, why = _is_sphere(I.sub(between), rho[i] - rho[j] - 2)
            if not ok:
                return Verdict(False, "combinatorial manifold", witness=(j, i),
                               detail={"reason": f"interval is not a sphere: {why}"})
        above = I.strict_up(j)
        if j not in dI:
            ok, why = _is_sphere(I.sub(above), d - rho[j] - 1)
            if not ok:
                return Verdict(False, "combinatorial manifold", witness=j,
                               detail={"reason": f"upper link is not a sphere: {why}"})
        else:
            ok, why = _is_disc_pair(I.sub(above), frozenset(above) & dI, d - rho[j] - 1)
            if not ok:
                return Verdict(False, "combinatorial manifold", witness=j,
                               detail={"reason": f"upper link is not a disc pair: {why}"})
    return Verdict(True, "combinatorial manifold", detail={"dimension": d}, certification=CERT_MANIFOLD)


def dimension_rank(P: Poset) -> dict:
    """Length of the longest chain ending at each element."""
    out = {}
    for i in P.topological_order():
        below = [out[P.elements[k]] for k in _bits(P.down_mask(i) & ~(1 << i))]
        out[P.elements[i]] = 1 + max(below) if below else 0
    return out


def constant_diagram(I: Poset, value: Poset | None = None) -> tuple[dict, dict]:
    value = value or point()
    vals = {j: value for j in I.elements}
    maps = {(a, b): {x: x for x in value.elements} for a, b in I.covers}
    return vals, maps


def manifold_local_to_global(I: Poset, dI: Iterable, rho: Mapping, values: Mapping, maps: Mapping,
                             ring: Ring = ZZ, realize: bool = True) -> dict:
    """Restriction identity at every index and the equivalence of the three global criteria."""
    dI = frozenset(dI)
    cm = comb_manifold_check(I, dI, rho)
    if not cm.ok:
        raise NotCombinatorialManifold(f"not a combinatorial manifold: {cm.detail.get('reason')} at {cm.witness}")
    d = cm.detail["dimension"]
    P, proj = grothendieck(I, values, maps)
    pair = PosetPair(P, frozenset(e for e in P.elements if e[0] in dI))
    omega = classifying_system(pair, ring)
    glob = poincare_verdict(pair, ring, omega)
    local = {}
    identity_failures = []
    maxima = set(I.maximal())
    for j in I.elements:
        below = frozenset(I.down(j))
        Xj = frozenset(e for e in P.elements if e[0] in below)
        dXj = frozenset(e for e in Xj if e[0] != j)
        lp = PosetPair(P.sub(Xj), dXj)
        lw = classifying_system(lp, ring)
        lv = poincare_verdict(lp, ring, lw)
        shift = d - rho[j]
        strict = j in maxima and not (j in dI)
        for e in sorted(Xj, key=P.idx):
            if strict:
                f = inclusion_map(lw.value(e), lw.bases[e], omega.value(e), omega.bases[e])
                good = is_quasi_iso(f)
            else:
                good = omega.value(e).homology() == lw.value(e).homology().shift(-shift)
            if not good:
                identity_failures.append((j, e))
        local[j] = {"poincare": lv.poincare, "formal_dimensions": lv.formal_dimensions, "shift": shift,
                    "comparison": "strict inclusion" if strict else "graded homology"}
    c1 = glob.poincare
    c2 = all(v["poincare"] for v in local.values())
    c3 = all(local[i]["poincare"] for i in maxima)
    failing = [j for j in I.elements if not local[j]["poincare"]]
    witness = None
    if not c1:
        w = glob.witnesses.get("non_groupoidal_cover") or glob.witnesses.get("non_invertible_element")
        if isinstance(w, tuple) and len(w) == 2 and isinstance(w[0], tuple):
            witness = w[0][0]
        elif isinstance(w, tuple):
            witness = w[0]
    report = {
        "dimension": d,
        "certification": CERT_MANIFOLD,
        "restriction_identity": not identity_failures,
        "identity_failures": [(label(j), label(e)) for j, e in identity_failures],
        "global_poincare": c1,
        "all_local_poincare": c2,
        "maximal_local_poincare": c3,
        "equivalent": c1 == c2 == c3,
        "failing_indices": [label(j) for j in failing],
        "witness_index": label(witness) if witness is not None else None,
        "verdict": glob,
        "local": {label(j): v for j, v in local.items()},
        "pair": pair,
    }
    if c1 and realize:
        report["realization"] = realization_check(pair, ring)
    return report


# ---------------------------------------------------------------------------
# gluing, doubling, cobordisms


def _tame(pair: PosetPair) -> bool:
    return not pair.boundary or is_final_inclusion(pair.total, pair.interior).ok


def glue_check(p1: PosetPair, p2: PosetPair, common: Iterable, ring: Ring = ZZ) -> tuple[PosetPair, Verdict]:
    common = frozenset(common)
    try:
        glued, X1, X2 = glue(p1, p2, common)
    except PosetError as e:
        raise BoundaryMismatch(str(e)) from e
    pieces = [poincare_verdict(p1, ring), poincare_verdict(p2, ring)]
    g = poincare_verdict(glued, ring)
    both = all(v.poincare for v in pieces)
    H = chain_complex_of(glued.total).homology()
    return glued, Verdict(g.poincare == both, "gluing", detail={
        "glued_poincare": g.poincare, "pieces_poincare": [v.poincare for v in pieces],
        "tame_pieces": [_tame(p1), _tame(p2)], "realization_homology": str(H),
        "formal_dimensions": g.formal_dimensions})


def double_check(pair: PosetPair, ring: Ring = ZZ) -> Verdict:
    D, _, _ = double(pair)
    dv = poincare_verdict(PosetPair(D, frozenset()), ring)
    pv = poincare_verdict(pair, ring)
    return Verdict(dv.poincare == pv.poincare, "doubling", detail={
        "double_poincare": dv.poincare, "pair_poincare": pv.poincare, "tame": _tame(pair),
        "formal_dimensions": dv.formal_dimensions,
        "realization_homology": str(chain_complex_of(D).homology())})


@dataclass
class Cobordism:
    pair: PosetPair
    incoming: frozenset
    outgoing: frozenset


def interval_block(tag) -> Cobordism:
    """A (D^1, S^0)-type block with endpoints named by ``tag``."""
    lo, hi, mid = f"p{tag}", f"p{tag + 1}", f"e{tag}"
    P = Poset.from_covers([lo, hi, mid], [(lo, mid), (hi, mid)])
    return Cobordism(PosetPair(P, frozenset({lo, hi})), frozenset({lo}), frozenset({hi}))


def cobordism_chain(blocks: Sequence[Cobordism], ring: Ring = ZZ) -> tuple[PosetPair, Verdict]:
    """Compose cobordisms along matching ends and compare with the pieces."""
    if not blocks:
        raise ValueError("empty cobordism chain")
    cur = blocks[0]
    for nxt in blocks[1:]:
        if cur.outgoing != nxt.incoming:
            raise BoundaryMismatch("outgoing end does not match the next incoming end")
        glued, _, _ = glue(cur.pair, nxt.pair, cur.outgoing)
        bd = glued.total.down_closure(cur.incoming | nxt.outgoing)
        cur = Cobordism(PosetPair(glued.total, bd), cur.incoming, nxt.outgoing)
    total = poincare_verdict(cur.pair, ring)
    pieces = [poincare_verdict(b.pair, ring).poincare for b in blocks]
    return cur.pair, Verdict(total.poincare == all(pieces), "cobordism chain", detail={
        "composite_poincare": total.poincare, "pieces_poincare": pieces,
        "formal_dimensions": total.formal_dimensions})


# ---------------------------------------------------------------------------
# realization


def realization_check(pair: PosetPair, ring: Ring = ZZ) -> dict:
    """Order-complex homology plus Wall's criterion on the pair of realizations."""
    pv = poincare_verdict(pair, ring)
    total_h = chain_complex_of(pair.total, ring=ring).homology()
    bd_h = chain_complex_of(pair.boundary_poset(), ring=ring).homology()
    out = {"poincare": pv.poincare, "total_homology": total_h, "boundary_homology": bd_h,
           "informational": not pv.poincare}
    wall = wall_check_pair(pair, ring)
    out["classical"] = wall
    out["consistent"] = wall.ok if pv.poincare else True
    return out


# ---------------------------------------------------------------------------
# products


def ad_product(B: AdDiagram, F: AdDiagram) -> AdDiagram:
    """Vertexwise product over the product cube; vertex labels concatenate."""
    from .posets import product
    values = {s + t: product(B.values[s], F.values[t]) for s in B.index.elements for t in F.index.elements}
    maps = {}
    for (s, s2), m in B.maps.items():
        for t in F.index.elements:
            maps[(s + t, s2 + t)] = {(x, y): (m[x], y) for x in B.values[s].elements for y in F.values[t].elements}
    for (t, t2), m in F.maps.items():
        for s in B.index.elements:
            maps[(s + t, s + t2)] = {(x, y): (x, m[y]) for x in B.values[s].elements for y in F.values[t].elements}
    n = B.n + F.n
    if n == 0:
        values = {"*": values[next(iter(values))]}
    else:
        values = {k.replace("*", ""): v for k, v in values.items()}
        maps = {(a.replace("*", ""), b.replace("*", "")): m for (a, b), m in maps.items()}
    return AdDiagram(n, values, maps)


def _split(B: AdDiagram, e):
    """``((s t), (x, y))`` in the product ad's pair as ``((s, x), (t, y))``."""
    v, (x, y) = e
    k = B.n
    s = v[:k] if k else "*"
    t = v[k:] if len(v) > k else "*"
    return (s, x), (t, y)


def _dualising_data(pair: PosetPair, ring: Ring):
    omega = classifying_system(pair, ring)
    pv = poincare_verdict(pair, ring, omega)
    if not pv.poincare:
        return pv, None
    D = dualising_system(omega, method="rank-one")
    return pv, rank_one_scalars(D.system)


def product_check(B: AdDiagram | PosetPair, F: AdDiagram | PosetPair, ring: Ring = ZZ) -> dict:
    """Product pair against its factors, including the pointwise factorisation of the dualising system."""
    if isinstance(B, AdDiagram) and isinstance(F, AdDiagram):
        pb, pf = ad_pair(B), ad_pair(F)
        empty_fibre = any(len(v) == 0 for v in F.values.values()) or any(len(v) == 0 for v in B.values.values())
        E = ad_pair(ad_product(B, F)) if not empty_fibre else product_pair(pb, pf)
        split = (lambda e: _split(B, e)) if not empty_fibre else (lambda e: e)
    else:
        pb = ad_pair(B) if isinstance(B, AdDiagram) else B
        pf = ad_pair(F) if isinstance(F, AdDiagram) else F
        empty_fibre = len(pf.total) == 0 or len(pb.total) == 0
        E = product_pair(pb, pf)
        split = lambda e: e  # noqa: E731
    vb, db = _dualising_data(pb, ring)
    vf, df = _dualising_data(pf, ring)
    ve, de = _dualising_data(E, ring) if len(E.total) else (poincare_verdict(E, ring), None)
    both = vb.poincare and vf.poincare
    report = {
        "product_poincare": ve.poincare,
        "base_poincare": vb.poincare,
        "fibre_poincare": vf.poincare,
        "converse_enabled": not empty_fibre,
        "formal_dimensions": {"base": vb.formal_dimensions, "fibre": vf.formal_dimensions,
                              "product": ve.formal_dimensions},
    }
    if empty_fibre:
        report["notice"] = "empty fibre: only the forward implication is asserted"
        report["biconditional"] = (not both) or ve.poincare
    else:
        report["biconditional"] = ve.poincare == both
    if ve.poincare and None not in (de, db, df):
        (degE, scE), (degB, scB), (degF, scF) = de, db, df
        deg_ok = True
        for e in E.total.elements:
            b, f = split(e)
            deg_ok &= degE[e] == degB[b] + degF[f]
        # the product's sign system divided by the pulled-back factor signs must be a coboundary
        ratio = {}
        for (x, y), q in scE.items():
            (b, f), (b2, f2) = split(x), split(y)
            expected = scB[(b, b2)] if f == f2 else scF[(f, f2)]
            ratio[(x, y)] = _mul(q, ring.inverse(expected), ring)
        report["factorisation_degrees"] = deg_ok
        report["factorisation_monodromy"] = _is_coboundary(E.total, ratio, ring)
        report["dimensions_add"] = all(
            ve.formal_dimensions[k] == vb.formal_dimensions[k % len(vb.formal_dimensions)]
            + vf.formal_dimensions[k % len(vf.formal_dimensions)]
            for k in range(len(ve.formal_dimensions))) if len(set(vb.formal_dimensions)) <= 1 and \
            len(set(vf.formal_dimensions)) <= 1 else None
    report["ok"] = bool(report["biconditional"] and report.get("factorisation_degrees", True)
                        and report.get("factorisation_monodromy", True) and report.get("dimensions_add") is not False)
    return report


def random_poincare_pool() -> list[tuple[str, PosetPair]]:
    return [
        ("circle", PosetPair(circle_poset(), frozenset())),
        ("polygon(3)", PosetPair(polygon(3), frozenset())),
        ("interval-pair", interval_pair()),
        ("s0-cone-pair", s0_to_point_pair()),
        ("two-points", PosetPair(Poset.discrete(["p", "q"]), frozenset())),
        ("point", PosetPair(point(), frozenset())),
        ("subdivided-interval(2)", subdivided_interval(2)),
    ]


def random_products(seed: int, count: int = 5) -> list[tuple[str, str, PosetPair, PosetPair]]:
    rng = random.Random(seed)
    pool = random_poincare_pool()
    out = []
    for _ in range(count):
        (nb, b), (nf, f) = rng.choice(pool), rng.choice(pool)
        out.append((nb, nf, b, f))
    return out


# ---------------------------------------------------------------------------
# named ads and manifold fixtures


def circle_ad() -> AdDiagram:
    return AdDiagram(0, {"*": circle_poset()})


def s0_cone_ad() -> AdDiagram:
    return AdDiagram(1, {"0": Poset.discrete(["p", "q"]), "1": point()}, {("0", "1"): {"p": "*", "q": "*"}})


_ADS: dict[str, tuple[Callable[[], AdDiagram], str]] = {
    "circle-ad": (circle_ad, "the circle poset as a 1-ad"),
    "s0-cone-ad": (s0_cone_ad, "S^0 -> pt as a 2-ad"),
    "circle-x-s0-cone": (lambda: ad_product(circle_ad(), s0_cone_ad()), "product of the two above"),
    "s0-cone-square": (lambda: ad_product(s0_cone_ad(), s0_cone_ad()), "square of the S^0 -> pt ad, a triad"),
}


def builtin_ads() -> dict[str, str]:
    return {k: d for k, (_, d) in _ADS.items()}


def get_ad(name: str) -> AdDiagram:
    try:
        return _ADS[name.strip()][0]()
    except KeyError:
        raise UnknownSpace(name) from None


@dataclass
class ManifoldDiagram:
    """A ranked index poset with boundary and a strict diagram of posets over it."""

    index: Poset
    boundary: frozenset
    rank: dict
    values: dict
    maps: dict

    def check(self, ring: Ring = ZZ, realize: bool = True) -> dict:
        return manifold_local_to_global(self.index, self.boundary, self.rank, self.values, self.maps, ring, realize)


def planted_rp2() -> ManifoldDiagram:
    """polygon(4) with the point at ``v0`` replaced by RP^2."""
    I = polygon(4)
    vals = {j: point() for j in I.elements}
    vals["v0"] = rp2()
    maps = {(a, b): {x: "*" for x in vals[a].elements} for a, b in I.covers}
    return ManifoldDiagram(I, frozenset(), dimension_rank(I), vals, maps)


def get_manifold(spec: str) -> ManifoldDiagram:
    """``planted-rp2`` or any builtin pair / ``cube(n)``, carrying the constant point diagram."""
    spec = spec.strip()
    if spec == "planted-rp2":
        return planted_rp2()
    m = re.fullmatch(r"cube\((\d+)\)", spec)
    if m:
        c = cube(int(m.group(1)))
        I, dI, rho = c.total, c.boundary, {x: x.count("1") for x in c.total.elements}
    else:
        pair = get_space(spec)
        I, dI, rho = pair.total, pair.boundary, dimension_rank(pair.total)
    vals, maps = constant_diagram(I)
    return ManifoldDiagram(I, frozenset(dI), rho, vals, maps)
