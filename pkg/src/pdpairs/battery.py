"""Seeded random property battery over small posets."""
from __future__ import annotations

import random
from collections import Counter

from .classical import rank_one_battery
from .diagrams import (Fibration, beck_chevalley_check, extension_by_zero_check, projection_formula_check,
                       random_pair, random_poset, random_presheaf, recollement_check, restrict_to,
                       vanishing_check, yoneda)
from .homalg import ZZ, Ring
from .morita import verify_morita
from .posets import Poset, PosetMap
from .verdict import label


def _height_fibration(rng: random.Random, I: Poset, F: Poset) -> Fibration:
    """Fibre ``F`` everywhere; identity transitions except a collapse to the least element where a
    monotone height function jumps, which keeps the transitions strictly functorial."""
    h = {}
    for i in I.topological_order():
        x = I.elements[i]
        below = [h[I.elements[a]] for a, b in I.cover_idx if b == i]
        h[x] = 1 if any(below) or rng.random() < 0.3 else 0
    bottom = min(F.elements, key=F.idx)
    const = {y: bottom for y in F.elements}
    ident = {y: y for y in F.elements}
    trans = {(a, b): (ident if h[a] == h[b] else const) for a, b in I.covers}
    return Fibration.build(I, {x: F for x in I.elements}, trans, "cocartesian")


def _fibre(rng: random.Random) -> Poset:
    """A small fibre with a least element."""
    k = rng.randint(0, 2)
    names = ["f0"] + [f"f{m}" for m in range(1, k + 1)]
    return Poset.from_covers(names, [("f0", n) for n in names[1:]])


def _random_subset_map(rng: random.Random, I: Poset) -> PosetMap:
    keep = [x for x in I.elements if rng.random() < 0.7] or [I.elements[0]]
    return PosetMap.inclusion(I, keep)


def run_property_battery(seed: int = 0, cases: int = 100, max_size: int = 6, ring: Ring = ZZ,
                         kind: str = "yoneda", fibrations: bool = True) -> dict:
    """Returns per-invariant pass/fail counts and the first failing case of each."""
    rng = random.Random(seed)
    passed, failed = Counter(), Counter()
    first_failure: dict = {}

    def record(name, verdict, case):
        if verdict.ok:
            passed[name] += 1
        else:
            failed[name] += 1
            first_failure.setdefault(name, case)

    for k in range(cases):
        n = rng.randint(1, max_size)
        P = random_poset(rng, n)
        pair = random_pair(rng, P)
        case = {"case": k, "poset": P.to_json(), "boundary": sorted(map(label, pair.boundary))}
        systems = []
        if kind in ("yoneda", "all"):
            systems += [yoneda(P, x, ring) for x in P.elements]
        if kind in ("rank1", "all"):
            systems += rank_one_battery(P, ring)
        record("morita", verify_morita(pair, systems, ring), case)
        xi = random_presheaf(rng, P, ring)
        record("recollement", recollement_check(pair, xi), case)
        if pair.boundary:
            eta = restrict_to(random_presheaf(rng, P, ring), pair.boundary)
            record("extension_by_zero", extension_by_zero_check(pair, eta), case)
            record("vanishing", vanishing_check(pair, eta), case)
        if fibrations and n <= 4:
            I = random_poset(rng, max(1, min(n, 3)))
            fib = _height_fibration(rng, I, _fibre(rng))
            g = _random_subset_map(rng, I)
            zeta = random_presheaf(rng, fib.total.op(), ring).as_presheaf()
            record("beck_chevalley", beck_chevalley_check(fib, g, zeta), case)
            cart = Fibration.build(fib.index.op(), fib.values, {(b, a): m for (a, b), m in fib.transitions.items()},
                                   "cartesian")
            xi_e = random_presheaf(rng, cart.total, ring)
            zeta_b = random_presheaf(rng, cart.index, ring)
            record("projection_formula", projection_formula_check(cart.projection, xi_e, zeta_b), case)
    names = sorted(set(passed) | set(failed))
    return {
        "seed": seed,
        "cases": cases,
        "max_size": max_size,
        "ring": ring.to_json(),
        "battery": kind,
        "invariants": {m: {"passed": passed[m], "failed": failed[m]} for m in names},
        "failures": {m: first_failure[m] for m in sorted(first_failure)},
        "ok": not failed,
    }
