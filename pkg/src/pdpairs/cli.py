"""Command-line entry point: ``pdpairs <command> [targets] [options]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .classical import verify_seven
from .geom import (AdDiagram, BoundaryMismatch, ManifoldDiagram, NotCombinatorialManifold, UnknownSpace, builtin_ads,
                   builtin_spaces, check_ad, dimension_rank, double_check, get_ad, get_manifold, get_space,
                   glue_check, product_check, realization_check)
from .homalg import Ring
from .morita import NotGroupoidal, poincare_verdict, verify_groupoidal_formula, verify_morita
from .posets import Poset, PosetError, PosetPair, cube, is_cylinder_shaped
from .serialize import ParseError, dumps, system_from_json
from .verdict import jsonable, label

COMMANDS = ("pair-check", "ad-check", "manifold-check", "morita-verify", "lefschetz", "glue", "double", "product",
            "realize", "property-battery")
ARITY = {"pair-check": 1, "ad-check": 1, "manifold-check": 1, "morita-verify": 1, "lefschetz": 1, "glue": 2,
         "double": 1, "product": 2, "realize": 1, "property-battery": 0}


class UnknownCommand(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    targets: list = field(default_factory=list)
    ring: str = "Z"
    battery: str = "yoneda"
    seed: int = 0
    max_size: int = 6
    cases: int = 100
    systems: list = field(default_factory=list)

    @classmethod
    def from_json(cls, data: Mapping, where: str = "job") -> "JobSpec":
        if not isinstance(data, Mapping) or "command" not in data:
            raise ParseError("a job needs a 'command'", where)
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ParseError(f"unknown job keys {sorted(extra)}", where)
        job = cls(**{k: data[k] for k in data})
        job.ring = _ring_text(job.ring)
        return job

    def to_json(self) -> dict:
        return asdict(self)


def _ring_text(spec) -> str:
    return str(Ring.parse(spec))


# ---------------------------------------------------------------------------
# input documents


class Document:
    """Parsed input: named posets, diagrams and systems, plus jobs."""

    def __init__(self, data: Mapping | None = None, source: str = "<none>"):
        data = data or {}
        if not isinstance(data, Mapping):
            raise ParseError("top level must be an object", source)
        extra = set(data) - {"posets", "diagrams", "systems", "jobs"}
        if extra:
            raise ParseError(f"unknown top-level keys {sorted(extra)}", source)
        self.source = source
        self.raw = data
        self.posets = {k: self._pair(v, f"posets.{k}") for k, v in data.get("posets", {}).items()}
        self.diagrams = dict(data.get("diagrams", {}))
        self.systems = dict(data.get("systems", {}))
        self.jobs = [JobSpec.from_json(j, f"jobs[{i}]") for i, j in enumerate(data.get("jobs", []))]

    @classmethod
    def load(cls, path: str | Path) -> "Document":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ParseError(str(e), str(path)) from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}", str(path)) from None
        return cls(data, str(path))

    def _pair(self, v, where: str) -> PosetPair:
        try:
            P = Poset.from_json(v)
            bd = frozenset(v.get("boundary", []))
            return PosetPair(P, P.down_closure(bd) if bd else bd)
        except (KeyError, TypeError, PosetError, ValueError) as e:
            raise ParseError(str(e), f"{self.source}:{where}") from None

    def poset_value(self, v, where: str) -> Poset:
        if isinstance(v, str):
            if v in self.posets:
                return self.posets[v].total
            try:
                return get_space(v).total
            except UnknownSpace:
                raise ParseError(f"unknown poset {v!r}", where) from None
        return self._pair(v, where).total

    def pair(self, name: str) -> PosetPair:
        if name in self.posets:
            return self.posets[name]
        try:
            return get_space(name)
        except UnknownSpace:
            raise ParseError(f"unknown pair {name!r}; see --list-spaces", f"{self.source}:target") from None

    def _diagram_parts(self, name: str):
        d = self.diagrams[name]
        where = f"{self.source}:diagrams.{name}"
        idx = d.get("index")
        if idx is None:
            raise ParseError("diagram needs an 'index'", where)
        values = {k: self.poset_value(v, f"{where}.values.{k}") for k, v in d.get("values", {}).items()}
        maps = {}
        for t in d.get("transitions", []):
            if not (isinstance(t, list) and len(t) == 3 and isinstance(t[2], Mapping)):
                raise ParseError("transitions are [source, target, {element: image}]", f"{where}.transitions")
            maps[(t[0], t[1])] = dict(t[2])
        return d, idx, values, maps, where

    def ad(self, name: str) -> AdDiagram:
        if name not in self.diagrams:
            try:
                return get_ad(name)
            except UnknownSpace:
                raise ParseError(f"unknown ad {name!r}", f"{self.source}:target") from None
        d, idx, values, maps, where = self._diagram_parts(name)
        n = None
        if isinstance(idx, str) and idx.startswith("cube(") and idx.endswith(")"):
            n = int(idx[5:-1])
        if n is None:
            raise ParseError("an ad needs index 'cube(n)'", where)
        if n == 0 and "*" not in values and len(values) == 1:
            values = {"*": next(iter(values.values()))}
        try:
            return AdDiagram(n, values, maps)
        except (PosetError, KeyError) as e:
            raise ParseError(str(e), where) from None

    def manifold(self, name: str) -> ManifoldDiagram:
        if name not in self.diagrams:
            try:
                return get_manifold(name)
            except UnknownSpace:
                raise ParseError(f"unknown manifold diagram {name!r}", f"{self.source}:target") from None
        d, idx, values, maps, where = self._diagram_parts(name)
        if isinstance(idx, str) and idx.startswith("cube("):
            c = cube(int(idx[5:-1]))
            I, dI = c.total, c.boundary
        else:
            ip = self.pair(idx) if isinstance(idx, str) else self._pair(idx, f"{where}.index")
            I, dI = ip.total, ip.boundary
        if "boundary" in d:
            dI = frozenset(d["boundary"])
        rank = dict(d["rank"]) if "rank" in d else dimension_rank(I)
        return ManifoldDiagram(I, frozenset(dI), rank, values, maps)

    def system(self, name: str, base: Poset):
        if name not in self.systems:
            raise ParseError(f"unknown system {name!r}", f"{self.source}:systems")
        try:
            return system_from_json(self.systems[name], base)
        except (KeyError, ValueError) as e:
            raise ParseError(str(e), f"{self.source}:systems.{name}") from None


# ---------------------------------------------------------------------------
# commands


def _pair_report(pair: PosetPair, ring: Ring) -> tuple[bool, dict]:
    pv = poincare_verdict(pair, ring)
    out = {"verdict": pv.to_json()}
    ok = pv.poincare
    if not pair.boundary or is_cylinder_shaped(pair):
        seven = verify_seven(pair, ring)
        out["routes"] = {"verdicts": seven["verdicts"], "agree": seven["agree"],
                         "formal_dimensions": seven["formal_dimensions"],
                         "certification": seven["certification"]}
        ok = ok and seven["agree"]
    return ok, out


def _second_copy(p1: PosetPair, p2: PosetPair) -> PosetPair:
    """Rename interior elements of ``p2`` that collide with ``p1``."""
    common = p1.boundary & p2.boundary
    taken = set(p1.total.elements)
    mapping = {}
    for x in p2.total.elements:
        if x in taken and x not in common:
            y = f"{label(x)}#2"
            while y in taken:
                y += "#"
            mapping[x] = y
        else:
            mapping[x] = x
    return p2.relabel(mapping)


def run_job(job: JobSpec, doc: Document) -> dict:
    """Dispatch one job; returns the report payload (without timing)."""
    if job.command not in COMMANDS:
        raise UnknownCommand(job.command)
    if len(job.targets) != ARITY[job.command]:
        raise ParseError(f"{job.command} takes {ARITY[job.command]} target(s), got {len(job.targets)}", "targets")
    ring = Ring.parse(job.ring)
    t = job.targets
    result: dict[str, Any]
    if job.command == "pair-check":
        ok, result = _pair_report(doc.pair(t[0]), ring)
    elif job.command == "ad-check":
        r = check_ad(doc.ad(t[0]), ring)
        ok = r["poincare"] and r["agree"]
        result = {"poincare": r["poincare"], "faces_classical": r["faces_classical"], "agree": r["agree"],
                  "failing_faces": r["failing_faces"], "verdict": r["verdict"].to_json()}
    elif job.command == "manifold-check":
        r = doc.manifold(t[0]).check(ring)
        ok = r["global_poincare"] and r["equivalent"] and r["restriction_identity"]
        result = {k: v for k, v in r.items() if k not in ("pair", "verdict", "realization")}
        result["verdict"] = r["verdict"].to_json()
        if "realization" in r:
            result["realization"] = {k: v for k, v in r["realization"].items()}
    elif job.command == "morita-verify":
        pair = doc.pair(t[0])
        battery = None
        if job.systems:
            battery = [doc.system(s, pair.total) for s in job.systems]
        elif job.battery in ("rank1", "all"):
            from .classical import battery as make_battery
            battery = make_battery(pair.total, ring, job.battery)
        v = verify_morita(pair, battery, ring)
        ok, result = v.ok, {"morita": v.to_json()}
    elif job.command == "lefschetz":
        pair = doc.pair(t[0])
        try:
            v = verify_groupoidal_formula(pair, ring)
            ok, result = v.ok, {"formula": v.to_json()}
        except NotGroupoidal as e:
            ok, result = False, {"formula": None, "not_groupoidal": str(e)}
    elif job.command == "glue":
        p1 = doc.pair(t[0])
        p2 = _second_copy(p1, doc.pair(t[1]))
        glued, v = glue_check(p1, p2, p1.boundary & p2.boundary, ring)
        ok = v.ok and v.detail["glued_poincare"]
        result = {"glued": glued.to_json(), "check": v.to_json()}
    elif job.command == "double":
        v = double_check(doc.pair(t[0]), ring)
        ok, result = v.ok and v.detail["double_poincare"], {"check": v.to_json()}
    elif job.command == "product":
        a = doc.ad(t[0]) if (t[0] in doc.diagrams or t[0] in builtin_ads()) else doc.pair(t[0])
        b = doc.ad(t[1]) if (t[1] in doc.diagrams or t[1] in builtin_ads()) else doc.pair(t[1])
        r = product_check(a, b, ring)
        ok, result = r["ok"] and r["product_poincare"], r
    elif job.command == "realize":
        r = realization_check(doc.pair(t[0]), ring)
        ok, result = r["poincare"] and r["consistent"], r
    else:
        from .battery import run_property_battery
        r = run_property_battery(job.seed, job.cases, job.max_size, ring, job.battery)
        ok, result = r["ok"], r
    return {"tool": {"name": "pdpairs", "version": __version__}, "job": job.to_json(), "ok": bool(ok),
            "result": jsonable(result)}


def job_key(job: JobSpec, doc: Document) -> str:
    """Content hash of the job and every input it can see."""
    payload = dumps({"job": job.to_json(), "inputs": {k: doc.raw.get(k, {}) for k in ("posets", "diagrams", "systems")},
                     "version": __version__})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(job: JobSpec, doc: Document, out: Path | None, use_cache: bool = True) -> tuple[dict, bool]:
    """Run (or fetch from the cache) one job; returns (report, cached)."""
    key = job_key(job, doc)
    path = out / f"{job.command}-{key}.json" if out else None
    if path and use_cache and path.exists():
        return json.loads(path.read_text(encoding="utf-8")), True
    t0 = time.perf_counter()
    report = run_job(job, doc)
    report["timing"] = {"seconds": round(time.perf_counter() - t0, 3)}
    report["key"] = key
    if path:
        _atomic_write(path, json.dumps(report, sort_keys=True, indent=1) + "\n")
    return report, False


def _figures(job: JobSpec, doc: Document, out: Path) -> list[str]:
    from .plotting import draw_hasse
    paths = []
    for name in job.targets:
        try:
            pair = doc.pair(name)
        except ParseError:
            try:
                pair = doc.ad(name).pair()
            except ParseError:
                pair = get_manifold(name).check(Ring.parse(job.ring), realize=False)["pair"]
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in name)
        paths.append(str(draw_hasse(pair, out / "figures" / f"{safe}.png", title=name)))
    return paths


def _human(report: dict) -> str:
    job = report["job"]
    name = " ".join([job["command"], *job["targets"]])
    head = f"{name} [{job['ring']}]: {'POSITIVE' if report['ok'] else 'NEGATIVE'}"
    res = report["result"]
    lines = [head]
    v = res.get("verdict") if isinstance(res, dict) else None
    if isinstance(v, dict) and "formal_dimensions" in v:
        lines.append(f"  formal dimensions: {v['formal_dimensions']}")
        if v.get("witnesses"):
            lines.append(f"  witnesses: {v['witnesses']}")
    if isinstance(res, dict) and "routes" in res:
        lines.append(f"  routes: {res['routes']['verdicts']} agree={res['routes']['agree']}")
    if isinstance(res, dict) and "invariants" in res:
        for name, c in res["invariants"].items():
            lines.append(f"  {name}: {c['passed']} passed, {c['failed']} failed")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdpairs", description="Poincare duality checks for finite poset pairs.")
    ap.add_argument("command", nargs="?", help=f"one of: {', '.join(COMMANDS)}, run")
    ap.add_argument("targets", nargs="*", help="builtin names or names defined in --input")
    ap.add_argument("--input", "-i", help="JSON document with posets, diagrams, systems and jobs")
    ap.add_argument("--ring", default="Z", help="Z, Q or Fp(p)")
    ap.add_argument("--battery", choices=("yoneda", "rank1", "all"), default="yoneda")
    ap.add_argument("--systems", nargs="*", default=[], help="named systems for morita-verify")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cases", type=int, default=100)
    ap.add_argument("--max-size", type=int, default=6)
    ap.add_argument("--out", help="directory for reports (also the results cache)")
    ap.add_argument("--format", choices=("human", "machine"), default="human")
    ap.add_argument("--no-cache", action="store_true")
    ap.add_argument("--list-spaces", action="store_true", help="print builtin names and exit")
    ap.add_argument("--figures", action="store_true", help="also render Hasse diagrams of the targets (PNG)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list_spaces:
        for name, desc in {**builtin_spaces(), **builtin_ads(),
                           "planted-rp2": "polygon(4) with RP^2 at one vertex (manifold-check)"}.items():
            print(f"{name:26s} {desc}")
        return 0
    try:
        doc = Document.load(args.input) if args.input else Document()
        if args.command == "run":
            jobs = doc.jobs
            if not jobs:
                raise ParseError("no jobs in the input", doc.source)
        elif args.command is None:
            raise UnknownCommand("no command given")
        else:
            jobs = [JobSpec(args.command, list(args.targets), _ring_text(args.ring), args.battery, args.seed,
                            args.max_size, args.cases, list(args.systems))]
        out = Path(args.out) if args.out else None
        status = 0
        reports = []
        for job in jobs:
            report, cached = execute(job, doc, out, not args.no_cache)
            if args.figures:
                report["figures"] = _figures(job, doc, out or Path("."))
            reports.append(report)
            if not report["ok"]:
                status = 1
        if args.format == "machine":
            payload = reports[0] if len(reports) == 1 else reports
            print(json.dumps(payload, sort_keys=True, indent=1))
        else:
            print("\n".join(_human(r) for r in reports))
        return status
    except (ParseError, UnknownCommand, UnknownSpace, PosetError, BoundaryMismatch, NotCombinatorialManifold,
            ValueError) as e:
        print(f"pdpairs: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
