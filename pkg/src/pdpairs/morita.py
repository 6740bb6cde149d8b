"""Classifying and dualising systems of poset pairs and the pasting checks built on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .diagrams import (COPRESHEAF, PRESHEAF, System, cobar, hocolim, holim, inclusion_map, lan, restrict,
                       tensor_systems, yoneda)
from .homalg import (ZZ, ChainComplex, ChainMap, GradedGroup, Ring, SparseMatrix, fib, fib_functor, induced_scalar,
                     is_invertible_object, is_quasi_iso, lift_unit, loop, loop_to_fib, rank_one_class, working_prime)
from .posets import (Poset, PosetMap, PosetPair, check_complemented, cylinder_map, find_complement, is_final_inclusion,
                     twisted_arrow)
from .verdict import Verdict, label


class NotGroupoidal(ValueError):
    pass


class NotTame(ValueError):
    pass


class NotComplemented(ValueError):
    pass


@dataclass
class ClassifyingSystem:
    pair: PosetPair
    system: System
    model: str
    bases: dict = field(default_factory=dict, repr=False)
    fib_data: dict = field(default_factory=dict, repr=False)

    @property
    def ring(self) -> Ring:
        return self.system.ring

    @property
    def base(self) -> Poset:
        return self.pair.total

    def value(self, x) -> ChainComplex:
        return self.system.value(x)

    def homology_table(self) -> dict:
        return self.system.homology_table()


def _relative_chains(pair: PosetPair) -> list[tuple[int, ...]]:
    bmask = pair.boundary_mask()
    return [c for c in pair.total.chains() if not (bmask >> c[-1]) & 1]


def classifying_system(pair: PosetPair, ring: Ring = ZZ, model: str = "kernel") -> ClassifyingSystem:
    """``x -> relative cohomology of y(x)`` as a strict copresheaf.

    The kernel model uses cochains vanishing on boundary chains, with
    transitions the inclusions induced by ``y(x) -> y(x')``. The fib model
    uses the fibre of restriction and keeps the restriction data around for
    the connecting map.
    """
    P = pair.total
    vals, bases, fdata = {}, {}, {}
    if model == "kernel":
        chains = _relative_chains(pair)
        for x in P.elements:
            C, B = cobar(yoneda(P, x, ring), chains)
            vals[x], bases[x] = C, B
        maps = {(a, b): inclusion_map(vals[a], bases[a], vals[b], bases[b]) for a, b in P.covers}
    elif model == "fib":
        bmask = pair.boundary_mask()
        bchains = [c for c in P.chains() if (bmask >> c[-1]) & 1]
        for x in P.elements:
            y = yoneda(P, x, ring)
            A, ab = cobar(y)
            Bc, bb = cobar(y, bchains)
            r = inclusion_map(A, ab, Bc, bb)
            vals[x] = fib(r)
            fdata[x] = (r, A, ab, Bc, bb)
        maps = {}
        for a, b in P.covers:
            ra, Aa, aba, Ba, bba = fdata[a]
            rb, Ab, abb, Bb, bbb = fdata[b]
            u = inclusion_map(Aa, aba, Ab, abb)
            v = inclusion_map(Ba, bba, Bb, bbb)
            maps[(a, b)] = fib_functor(u, v, ra, rb, vals[a], vals[b])
    else:
        raise ValueError(model)
    S = System(P, vals, maps, COPRESHEAF, ring, check=False)
    bound = -P.dimension() if len(P) else 0
    for x, C in vals.items():
        if C.lo is not None and C.lo < bound - 1:
            raise AssertionError(f"classifying system not bounded below at {label(x)}")
    return ClassifyingSystem(pair, S, model, bases, fdata)


# ---------------------------------------------------------------------------
# coend reconstruction


def _tw_system(omega: System, xi: System | None, tw) -> System:
    """Presheaf ``(a,b) -> omega(a) (x) xi(b)`` on the twisted arrow poset."""
    from .homalg import tensor, tensor_map
    T = tw.poset
    vals = {}
    for e in T.elements:
        a, b = e
        wa = omega.value(a)
        if xi is None:
            vals[e] = wa
        else:
            xb = xi.value(b)
            vals[e] = tensor(wa, xb) if not (wa.is_zero_object() or xb.is_zero_object()) else ChainComplex.zero(
                omega.ring)
    maps = {}
    for lo, hi in T.covers:
        (a, b), (a2, b2) = lo, hi  # a2 <= a, b <= b2
        src, tgt = vals[hi], vals[lo]
        if src.is_zero_object() or tgt.is_zero_object():
            continue
        wm = omega.map(a2, a)
        if xi is None:
            maps[(lo, hi)] = wm
        else:
            maps[(lo, hi)] = tensor_map(wm, xi.map(b, b2), src, tgt)
    return System(T, vals, maps, PRESHEAF, omega.ring, check=False)


def coend_reconstruct(omega, xi: System, tw=None) -> ChainComplex:
    """``hocolim`` over the twisted arrow poset of ``s^* omega (x) t^* xi``."""
    w = omega.system if isinstance(omega, ClassifyingSystem) else omega
    if w.base != xi.base:
        from .diagrams import BaseMismatch
        raise BaseMismatch("omega and xi live on different posets")
    tw = tw or twisted_arrow(w.base)
    return hocolim(_tw_system(w, xi, tw))


def verify_morita(pair: PosetPair, battery: Sequence[System] | None = None, ring: Ring = ZZ,
                  omega: ClassifyingSystem | None = None) -> Verdict:
    from .diagrams import relative_cohomology
    omega = omega or classifying_system(pair, ring)
    P = pair.total
    battery = list(battery) if battery is not None else [yoneda(P, x, ring) for x in P.elements]
    tw = twisted_arrow(P)
    bad = []
    for k, xi in enumerate(battery):
        lhs = coend_reconstruct(omega, xi, tw).homology()
        rhs = relative_cohomology(pair, xi).homology()
        if lhs != rhs:
            bad.append({"index": k, "coend": str(lhs), "relative": str(rhs)})
    return Verdict(not bad, "Morita", witness=bad[0] if bad else None,
                   detail={"battery": len(battery), "mismatches": len(bad)})


# ---------------------------------------------------------------------------
# groupoidality, invertibility, the verdict


def is_groupoidal(omega) -> Verdict:
    w = omega.system if isinstance(omega, ClassifyingSystem) else omega
    return w.is_groupoidal()


def invertibility(omega) -> tuple[Verdict, dict]:
    w = omega.system if isinstance(omega, ClassifyingSystem) else omega
    degrees = {}
    bad = None
    for x, C in w.items():
        n = is_invertible_object(C)
        degrees[x] = n
        if n is None and bad is None:
            bad = x
    return Verdict(bad is None, "pointwise invertible", witness=bad), degrees


@dataclass
class PoincareVerdict:
    groupoidal: bool
    pointwise_invertible: bool
    degrees: dict
    homology: dict
    components: list
    formal_dimensions: list
    witnesses: dict
    ring: Ring
    cover_report: dict | None = None

    @property
    def poincare(self) -> bool:
        return self.groupoidal and self.pointwise_invertible

    @property
    def ok(self) -> bool:
        return self.poincare

    def __bool__(self):
        return self.poincare

    def to_json(self) -> dict:
        return {
            "ring": self.ring.to_json(),
            "groupoidal": self.groupoidal,
            "pointwise_invertible": self.pointwise_invertible,
            "poincare": self.poincare,
            "formal_dimensions": self.formal_dimensions,
            "components": [sorted(map(label, c)) for c in self.components],
            "omega_degrees": {label(x): d for x, d in self.degrees.items()},
            "omega_homology": {label(x): h.to_json() for x, h in self.homology.items()},
            "witnesses": {k: _wjson(v) for k, v in self.witnesses.items()},
            **({"cover": _cover_json(self.cover_report)} if self.cover_report is not None else {}),
        }


def _cover_json(rep: dict) -> dict:
    return {
        "biconditional": rep["biconditional"],
        "restrictions_ok": rep["restrictions_ok"],
        "members": [{k: v for k, v in m.items() if k != "verdict"} for m in rep["members"]],
    }


def _wjson(v):
    if isinstance(v, tuple):
        return [label(x) for x in v]
    return label(v)


def poincare_verdict(pair: PosetPair, ring: Ring = ZZ, omega: ClassifyingSystem | None = None) -> PoincareVerdict:
    omega = omega or classifying_system(pair, ring)
    g = is_groupoidal(omega)
    inv, degrees = invertibility(omega)
    comps = pair.total.components()
    fdims = []
    for c in comps:
        ds = {degrees[x] for x in c}
        fdims.append(-ds.pop() if len(ds) == 1 and None not in ds else None)
    witnesses = {}
    if not g.ok:
        witnesses["non_groupoidal_cover"] = g.witness
    if not inv.ok:
        witnesses["non_invertible_element"] = inv.witness
    return PoincareVerdict(g.ok, inv.ok, degrees, omega.homology_table(), comps, fdims, witnesses, ring)


# ---------------------------------------------------------------------------
# rank-one data


def rank_one_scalars(system: System) -> tuple[dict, dict]:
    """Gauge-fixed scalars of a groupoidal, pointwise invertible system.

    Returns ``(degrees, scalars)`` where ``scalars[(a, b)]`` is the unit by
    which the structure map along the cover ``a < b`` acts on homology,
    after rescaling generators so that a spanning forest carries 1. Units
    are integers ``+-1`` over Z and Q and residues over F_p.
    """
    import networkx as nx
    P = system.base
    classes, degrees = {}, {}
    for i, x in enumerate(P.elements):
        C = system.value_idx(i)
        n = is_invertible_object(C)
        if n is None:
            raise NotGroupoidal(f"value at {label(x)} is not invertible")
        degrees[x] = n
        classes[i] = rank_one_class(C, n)
    p = working_prime(system.ring)
    raw = {}
    for i, j in P.cover_idx:
        f = system.map_idx(i, j)
        if system.variance == PRESHEAF:
            q = induced_scalar(f, classes[j], classes[i])
        else:
            q = induced_scalar(f, classes[i], classes[j])
        if q == 0:
            raise NotGroupoidal(f"transition {label(P.elements[i])} < {label(P.elements[j])} is not invertible")
        raw[(i, j)] = q
    # gauge: rescale so tree covers carry 1 (in the direction low -> high for the scalar's bookkeeping)
    g = nx.Graph()
    g.add_nodes_from(range(len(P)))
    g.add_edges_from(P.cover_idx)
    scale = {}
    for comp in nx.connected_components(g):
        root = min(comp)
        scale[root] = 1
        for u, v in nx.bfs_edges(g, root):
            if (u, v) in raw:  # u < v, q = scalar low->high in the chosen convention
                q = raw[(u, v)]
                scale[v] = scale[u] * q % p
            else:
                q = raw[(v, u)]
                scale[v] = scale[u] * pow(q, -1, p) % p
    out = {}
    for (i, j), q in raw.items():
        qq = q * scale[i] * pow(scale[j], -1, p) % p
        u = lift_unit(qq, p, system.ring)
        if u is None:
            raise NotGroupoidal(f"monodromy scalar {qq} is not a sign")
        out[(P.elements[i], P.elements[j])] = u
    return degrees, out


# ---------------------------------------------------------------------------
# dualising system


@dataclass
class DualisingSystem:
    system: System
    method: str


def dualising_system(omega, method: str = "auto", max_chains: int = 4000) -> DualisingSystem:
    """``D = t_! s^* omega`` on the pair's poset.

    ``coend`` computes the left Kan extension literally. ``rank-one`` uses
    the rank-one model: a groupoidal invertible system is determined by its
    degree and monodromy, and ``D`` inverts the transitions of ``omega``.
    ``auto`` picks ``coend`` unless the twisted arrow poset is large.
    """
    w = omega.system if isinstance(omega, ClassifyingSystem) else omega
    g = w.is_groupoidal()
    if not g.ok:
        raise NotGroupoidal(f"omega is not groupoidal at {g.witness}")
    P = w.base
    if method == "auto":
        tw = twisted_arrow(P)
        method = "coend" if tw.poset.count_chains() <= max_chains else "rank-one"
    if method == "coend":
        tw = twisted_arrow(P)
        F = _tw_system(w, None, tw)
        return DualisingSystem(lan(tw.t, F), "coend")
    if method == "rank-one":
        return DualisingSystem(rank_one_model(w, invert=True), "rank-one")
    raise ValueError(method)


def rank_one_model(system: System, invert: bool = False, variance: str | None = None) -> System:
    """Rank-one system with the same degrees and monodromy (inverted if asked).

    The result is a presheaf when ``variance`` is not given and ``invert``
    is set (``D`` from ``omega``), otherwise it keeps the input's variance.
    """
    degrees, scalars = rank_one_scalars(system)
    ring = system.ring
    P = system.base
    var = variance or (PRESHEAF if invert else system.variance)
    vals = {x: ChainComplex.concentrated(ring, degrees[x]) for x in P.elements}
    maps = {}
    for (a, b), q in scalars.items():
        if invert:
            q = ring.inverse(q)
        src, tgt = (b, a) if var == PRESHEAF else (a, b)
        maps[(a, b)] = ChainMap(vals[src], vals[tgt], {degrees[a]: SparseMatrix.from_dense([[q]])}, check=False)
    return System(P, vals, maps, var, ring, check=False)


def verify_groupoidal_formula(pair: PosetPair, ring: Ring = ZZ, omega: ClassifyingSystem | None = None,
                              D: DualisingSystem | None = None) -> Verdict:
    from .diagrams import relative_cohomology, relative_homology
    omega = omega or classifying_system(pair, ring)
    g = is_groupoidal(omega)
    if not g.ok:
        raise NotGroupoidal(f"omega is not groupoidal along {_wjson(g.witness)}")
    D = D or dualising_system(omega)
    P = pair.total
    tame = is_final_inclusion(P, pair.interior).ok if pair.boundary else True
    i = PosetMap.inclusion(P, pair.boundary)
    bad = []
    columns = []
    for x in P.elements:
        xi = yoneda(P, x, ring)
        Dxi = tensor_systems(D.system, xi)
        rel = relative_cohomology(pair, xi).homology()
        col = {"xi": label(x), "relative_cohomology": str(rel)}
        if rel != hocolim(Dxi).homology():
            bad.append((x, "X_!(D (x) xi)"))
        if tame:
            top_left = holim(restrict(i, xi)).homology().shift(-1) if pair.boundary else GradedGroup()
            bot_left = hocolim(restrict(i, Dxi)).homology() if pair.boundary else GradedGroup()
            top_right = holim(xi).homology()
            bot_right = relative_homology(pair, Dxi).homology()
            col.update({"boundary": str(top_left), "absolute": str(top_right)})
            if top_left != bot_left:
                bad.append((x, "Omega dX_* i^*"))
            if top_right != bot_right:
                bad.append((x, "X_*"))
        columns.append(col)
    return Verdict(not bad, "groupoidal formula", witness=bad[0] if bad else None,
                   detail={"tame": tame, "lefschetz_checked": tame, "dualising_method": D.method,
                           "columns": columns, "failures": [(label(x), m) for x, m in bad],
                           **({} if tame else {"notice": "interior inclusion is not final; Lefschetz half skipped"})})


def dbar_d_shadow(omega: ClassifyingSystem, D: DualisingSystem | None = None) -> Verdict:
    """Pointwise homology of D and omega agree and their monodromies are inverse."""
    D = D or dualising_system(omega)
    w = omega.system
    P = w.base
    for x in P.elements:
        if D.system.value(x).homology() != w.value(x).homology():
            return Verdict(False, "D-bar D shadow", witness=x)
    try:
        _, qw = rank_one_scalars(w)
        _, qd = rank_one_scalars(D.system)
    except NotGroupoidal as e:
        return Verdict(False, "D-bar D shadow", detail={"reason": str(e)})
    # q_e r_e must be a coboundary: its product around every cycle of the Hasse graph is 1
    ring = w.ring
    prod = {e: _mul(qw[e], qd[e], ring) for e in qw}
    ok = _is_coboundary(P, prod, ring)
    return Verdict(ok, "D-bar D shadow", detail={"dualising_method": D.method})


def _mul(a, b, ring: Ring):
    return ring.normalize(a * b)


def _is_coboundary(P: Poset, scalars: dict, ring: Ring) -> bool:
    import networkx as nx
    g = nx.Graph()
    g.add_nodes_from(P.elements)
    g.add_edges_from(scalars)
    pot = {}
    for comp in nx.connected_components(g):
        root = min(comp, key=P.idx)
        pot[root] = 1
        for u, v in nx.bfs_edges(g, root):
            if (u, v) in scalars:
                pot[v] = _mul(pot[u], scalars[(u, v)], ring)
            else:
                pot[v] = _mul(pot[u], ring.inverse(scalars[(v, u)]), ring)
    return all(_mul(pot[a], q, ring) == pot[b] for (a, b), q in scalars.items())


# ---------------------------------------------------------------------------
# connecting map and the boundary principle


@dataclass
class ConnectingMap:
    pair: PosetPair
    g: dict
    maps: dict  # x in boundary -> ChainMap  Omega omega_dP(x) -> omega(g(x))
    loops: dict  # x -> ChainMap  Omega omega_dP(x) -> omega(x)  (fib model)

    def is_equivalence(self) -> Verdict:
        for x in sorted(self.maps, key=self.pair.total.idx):
            if not is_quasi_iso(self.maps[x]):
                return Verdict(False, "connecting map", witness=x)
        return Verdict(True, "connecting map")


def _boundary_loop_maps(pair: PosetPair, ring: Ring, omega_fib: ClassifyingSystem):
    out = {}
    for x in pair.boundary:
        r, A, ab, B, bb = omega_fib.fib_data[x]
        out[x] = loop_to_fib(r, omega_fib.value(x))
    return out


def connecting_map(pair: PosetPair, ring: Ring = ZZ, omega_fib: ClassifyingSystem | None = None) -> ConnectingMap:
    """``Omega omega_dP(x) -> omega(x) -> omega(g(x))`` for a cylinder-shaped pair."""
    g = cylinder_map(pair)
    omega_fib = omega_fib or classifying_system(pair, ring, model="fib")
    loops = _boundary_loop_maps(pair, ring, omega_fib)
    maps = {x: omega_fib.system.map(x, g[x]) @ loops[x] for x in pair.boundary}
    return ConnectingMap(pair, g, maps, loops)


def verify_boundary_principle(pair: PosetPair, ring: Ring = ZZ, require_tame: bool = True) -> Verdict:
    if not pair.boundary:
        return Verdict(True, "boundary principle", detail={"vacuous": True})
    tame = is_final_inclusion(pair.total, pair.interior)
    if require_tame and not tame.ok:
        raise NotTame(f"interior is not final (witness {label(tame.witness)})")
    omega_fib = classifying_system(pair, ring, model="fib")
    loops = _boundary_loop_maps(pair, ring, omega_fib)
    # the loop maps land in omega(x); the source is Omega of the absolute system of the boundary
    dP = PosetPair(pair.boundary_poset(), frozenset())
    omega_d = classifying_system(dP, ring)
    bad = []
    for x in sorted(pair.boundary, key=pair.total.idx):
        f = loops[x]
        if f.source.homology() != loop(omega_d.value(x)).homology():
            bad.append(x)
        elif not is_quasi_iso(f):
            bad.append(x)
    return Verdict(not bad, "boundary principle", witness=bad[0] if bad else None,
                   detail={"tame": tame.ok})


def compare_models(pair: PosetPair, ring: Ring = ZZ) -> Verdict:
    """The kernel model includes into the fib model as ``k -> (k, 0)``; check it is a pointwise quasi-iso."""
    K = classifying_system(pair, ring, "kernel")
    F = classifying_system(pair, ring, "fib")
    for x in pair.total.elements:
        r, A, ab, B, bb = F.fib_data[x]
        kb = K.bases[x]
        Kx = K.value(x)
        Fx = F.value(x)
        entries: dict[int, list] = {}
        for key, (t, off, rk) in kb.blocks.items():
            tgt = ab.blocks.get(key)
            if tgt is None:
                continue
            _, toff, _ = tgt
            lst = entries.setdefault(t, [])
            for a in range(rk):
                lst.append((toff + a, off + a, 1))
        m = ChainMap(Kx, Fx, {t: SparseMatrix.from_entries(Fx.rank(t), Kx.rank(t), l) for t, l in entries.items()})
        if not is_quasi_iso(m):
            return Verdict(False, "kernel vs fib model", witness=x)
    return Verdict(True, "kernel vs fib model")


# ---------------------------------------------------------------------------
# complementation and local-to-global


def _sub_pair(pair: PosetPair, Y: frozenset, W: frozenset) -> PosetPair:
    return PosetPair(pair.total.sub(Y), (pair.boundary & Y) | W)


def verify_complementation(pair: PosetPair, X1: Iterable, X2: Iterable, ring: Ring = ZZ,
                           omega: ClassifyingSystem | None = None) -> Verdict:
    """Extension by zero from the sub-pair's classifying system is a pointwise quasi-iso on ``X1``."""
    X1, X2 = frozenset(X1), frozenset(X2)
    W = X1 & X2
    dX1 = (pair.boundary & X1) | W
    dX2 = (pair.boundary & X2) | W
    comp = check_complemented(pair, X1, dX1, X2, dX2)
    if not comp.ok:
        return Verdict(False, "complementation", witness=comp.witness,
                       detail={"reason": "not complemented", **comp.detail})
    omega = omega or classifying_system(pair, ring)
    sub = PosetPair(pair.total.sub(X1), dX1)
    omega1 = classifying_system(sub, ring)
    bad = []
    for x in sorted(X1, key=pair.total.idx):
        src, sb = omega1.value(x), omega1.bases[x]
        tgt, tb = omega.value(x), omega.bases[x]
        f = inclusion_map(src, sb, tgt, tb)
        f.validate()
        if not is_quasi_iso(f):
            bad.append(x)
    return Verdict(not bad, "complementation", witness=bad[0] if bad else None,
                   detail={"W": sorted(map(label, W))})


def local_to_global(pair: PosetPair, cover: Sequence[tuple[Iterable, Iterable]],
                    ring: Ring = ZZ) -> PoincareVerdict:
    """Global verdict carrying the per-member verdicts of a complemented cover in ``cover_report``."""
    glob = poincare_verdict(pair, ring)
    omega = classifying_system(pair, ring)
    members = []
    for Y, dY in cover:
        Y, dY = frozenset(Y), frozenset(dY)
        comp = find_complement(pair, Y, dY)
        if not comp.ok:
            raise NotComplemented(f"member {sorted(map(label, Y))} has no complement")
        Z, dZ = comp.witness
        restr = verify_complementation(pair, Y, Z, ring, omega)
        sub = PosetPair(pair.total.sub(Y), dY)
        pv = poincare_verdict(sub, ring)
        members.append({"member": sorted(map(label, Y)), "poincare": pv.poincare,
                        "restriction_identity": restr.ok, "verdict": pv})
    all_members = all(m["poincare"] for m in members)
    glob.cover_report = {
        "members": members,
        "biconditional": glob.poincare == all_members,
        "restrictions_ok": all(m["restriction_identity"] for m in members),
    }
    return glob


# ---------------------------------------------------------------------------
# Mayer-Vietoris form of Poincare-Lefschetz duality


def verify_mayer_vietoris_lefschetz(P: Poset, X1: Iterable, X2: Iterable, ring: Ring = ZZ) -> Verdict:
    from .diagrams import relative_cohomology, relative_homology
    X1, X2 = frozenset(X1), frozenset(X2)
    if X1 | X2 != frozenset(P.elements) or not (P.is_down_closed(X1) and P.is_down_closed(X2)):
        raise ValueError("X1, X2 must be a down-closed cover")
    W = X1 & X2
    for Xk in (X1, X2):
        fin = is_final_inclusion(P.sub(Xk), Xk - W)
        if not fin.ok:
            raise NotTame(f"interior of a piece is not final at {label(fin.witness)}")
    pair = PosetPair(P, frozenset())
    omega = classifying_system(pair, ring)
    if not is_groupoidal(omega).ok:
        raise NotGroupoidal("classifying system is not groupoidal")
    D = dualising_system(omega).system
    bad = []
    for x in P.elements:
        xi = yoneda(P, x, ring)
        Dxi = tensor_systems(D, xi)

        def on(S, sys):
            return restrict(PosetMap.inclusion(P, S), sys)

        def sub_pair(S, B):
            return PosetPair(P.sub(S), B)

        # square 1
        pairs = [
            (holim(on(W, xi)).homology().shift(-1), hocolim(on(W, Dxi)).homology(), "Omega W_*"),
            (relative_cohomology(sub_pair(X1, W), on(X1, xi)).homology(), hocolim(on(X1, Dxi)).homology(),
             "(X1,W)_*"),
            (relative_cohomology(sub_pair(X2, W), on(X2, xi)).homology(), hocolim(on(X2, Dxi)).homology(),
             "(X2,W)_*"),
            (holim(xi).homology(), hocolim(Dxi).homology(), "X_*"),
            # square 2
            (holim(on(X1, xi)).homology(), relative_homology(sub_pair(X1, W), on(X1, Dxi)).homology(), "X1_*"),
            (holim(on(X2, xi)).homology(), relative_homology(sub_pair(X2, W), on(X2, Dxi)).homology(), "X2_*"),
            (holim(on(W, xi)).homology(), hocolim(on(W, Dxi)).homology().shift(1), "W_*"),
        ]
        for lhs, rhs, name in pairs:
            if lhs != rhs:
                bad.append((x, name, str(lhs), str(rhs)))
    return Verdict(not bad, "Mayer-Vietoris Lefschetz", witness=bad[0] if bad else None,
                   detail={"W": sorted(map(label, W)), "failures": len(bad)})


# ---------------------------------------------------------------------------
# rigidity


def rigidity_checks(pair: PosetPair, ring: Ring = ZZ) -> Verdict:
    """Groupoidal plus tame forces Poincare; cap conditions (1) and (2) agree."""
    from .classical import kqs_check
    omega = classifying_system(pair, ring)
    pv = poincare_verdict(pair, ring, omega)
    tame = is_final_inclusion(pair.total, pair.interior).ok if pair.boundary else True
    detail = {"tame": tame, "groupoidal": pv.groupoidal, "poincare": pv.poincare}
    ok = True
    if tame and pv.groupoidal and not pv.poincare:
        ok = False
        detail["counterexample"] = "groupoidal tame pair that is not Poincare"
    kqs = kqs_check(pair, ring, omega=omega)
    detail["kqs"] = kqs.to_json()
    ok = ok and kqs.ok
    return Verdict(ok, "rigidity", detail=detail)


def boundary_restriction_check(pair: PosetPair, ring: Ring = ZZ) -> Verdict:
    """Compare ``omega`` on the boundary with ``Omega omega_dP`` degreewise (homology only)."""
    omega = classifying_system(pair, ring)
    dP = PosetPair(pair.boundary_poset(), frozenset())
    od = classifying_system(dP, ring)
    for x in pair.boundary:
        if omega.value(x).homology() != loop(od.value(x)).homology():
            return Verdict(False, "boundary restriction", witness=x)
    return Verdict(True, "boundary restriction")
