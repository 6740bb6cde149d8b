"""JSON encodings for posets, complexes, systems, local systems and fundamental classes."""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Mapping

from .classical import FundamentalClass, RankOneLocalSystem
from .diagrams import System
from .homalg import ChainComplex, ChainMap, Ring, SparseMatrix
from .posets import Poset, PosetPair
from .verdict import label


class ParseError(ValueError):
    """Malformed input; ``where`` names the offending location."""

    def __init__(self, msg: str, where: str = ""):
        super().__init__(f"{where}: {msg}" if where else msg)
        self.where = where


def dumps(obj: Any) -> str:
    """Canonical text: sorted keys, no whitespace variation."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _num_out(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return int(x)


def _num_in(x):
    if isinstance(x, str):
        f = Fraction(x)
        return f.numerator if f.denominator == 1 else f
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError(f"matrix entry {x!r} is not an integer or fraction")
    return x


def matrix_to_json(M: SparseMatrix) -> dict:
    entries = sorted((i, j, _num_out(v)) for j, col in M.cols.items() for i, v in col.items())
    return {"shape": [M.nrows, M.ncols], "entries": [list(e) for e in entries]}


def matrix_from_json(data: Mapping, ring: Ring) -> SparseMatrix:
    nrows, ncols = data["shape"]
    cols: dict[int, dict[int, Any]] = {}
    for i, j, v in data.get("entries", []):
        if not (0 <= i < nrows and 0 <= j < ncols):
            raise ParseError(f"entry ({i}, {j}) outside a {nrows}x{ncols} matrix")
        cols.setdefault(j, {})[i] = ring.normalize(_num_in(v))
    return SparseMatrix(nrows, ncols, cols)


def complex_to_json(C: ChainComplex) -> dict:
    return {
        "ranks": {str(n): r for n, r in sorted(C.ranks.items())},
        "d": {str(n): matrix_to_json(m) for n, m in sorted(C.d.items()) if m.cols},
    }


def complex_from_json(data: Mapping, ring: Ring) -> ChainComplex:
    ranks = {int(n): int(r) for n, r in data.get("ranks", {}).items()}
    d = {int(n): matrix_from_json(m, ring) for n, m in data.get("d", {}).items()}
    return ChainComplex(ring, ranks, d)


def chainmap_to_json(f: ChainMap) -> dict:
    return {str(n): matrix_to_json(m) for n, m in sorted(f.comps.items()) if m.cols}


def chainmap_from_json(data: Mapping, source: ChainComplex, target: ChainComplex) -> ChainMap:
    return ChainMap(source, target, {int(n): matrix_from_json(m, source.ring) for n, m in data.items()})


def system_to_json(xi: System) -> dict:
    P = xi.base
    values = {label(x): complex_to_json(xi.value(x)) for x in P.elements}
    maps = [[label(a), label(b), chainmap_to_json(xi.map_idx(P.idx(a), P.idx(b)))] for a, b in P.covers]
    return {"ring": xi.ring.to_json(), "variance": xi.variance, "base": P.to_json(), "values": values,
            "transitions": maps}


def system_from_json(data: Mapping, base: Poset | None = None) -> System:
    ring = Ring.parse(data.get("ring", "Z"))
    P = base if base is not None else Poset.from_json(data["base"])
    lookup = {label(x): x for x in P.elements}
    try:
        values = {lookup[k]: complex_from_json(v, ring) for k, v in data.get("values", {}).items()}
    except KeyError as e:
        raise ParseError(f"value at unknown element {e.args[0]!r}", "values") from None
    for x in P.elements:
        values.setdefault(x, ChainComplex(ring, {}))
    variance = data.get("variance", "presheaf")
    maps = {}
    for a, b, m in data.get("transitions", []):
        if a not in lookup or b not in lookup:
            raise ParseError(f"transition on unknown cover {a} < {b}", "transitions")
        x, y = lookup[a], lookup[b]
        src, tgt = (values[y], values[x]) if variance == "presheaf" else (values[x], values[y])
        maps[(x, y)] = chainmap_from_json(m, src, tgt)
    return System(P, values, maps, variance, ring)


def local_system_to_json(L: RankOneLocalSystem) -> dict:
    return {"base": L.base.to_json(), **L.to_json()}


def local_system_from_json(data: Mapping) -> RankOneLocalSystem:
    return RankOneLocalSystem.from_json(Poset.from_json(data["base"]), data)


def fundamental_class_to_json(fc: FundamentalClass) -> dict:
    return {"pair": fc.pair.to_json(), **fc.to_json()}


def fundamental_class_from_json(data: Mapping) -> FundamentalClass:
    pair = PosetPair.from_json(data["pair"])
    P = pair.total
    ring = Ring.parse(data["ring"])
    L = RankOneLocalSystem.from_json(P, data["orientation"])
    cycle = {tuple(P.idx(x) for x in chain): ring.normalize(_num_in(v)) for chain, v in data["cycle"]}
    return FundamentalClass(pair, L, int(data["degree"]), cycle, ring)
