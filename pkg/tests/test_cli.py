import json
import random

import pytest

from pdpairs.cli import Document, JobSpec, job_key, main, run_job
from pdpairs.classical import enumerate_sign_systems
from pdpairs.diagrams import random_poset, random_presheaf
from pdpairs.geom import rp2
from pdpairs.homalg import QQ, ZZ, Fp
from pdpairs.posets import Poset, PosetPair
from pdpairs.serialize import (ParseError, dumps, local_system_from_json, local_system_to_json, system_from_json,
                               system_to_json)


def _strip(report):
    return {k: v for k, v in report.items() if k != "timing"}


def _machine(capsys, argv):
    code = main(argv + ["--format", "machine"])
    return code, json.loads(capsys.readouterr().out)


def test_exit_codes(capsys, tmp_path):
    assert main(["pair-check", "interval-pair"]) == 0
    assert main(["pair-check", "rp2-cone-pair", "--ring", "Q"]) == 1
    assert main(["pair-check", "no-such-space"]) == 2
    assert main(["frobnicate", "circle"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"posets": {"x": {"elements": ["a"], "covers": [["a", "zz"]]}}}')
    assert main(["pair-check", "x", "--input", str(bad)]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_interval_pair_report(capsys):
    code, rep = _machine(capsys, ["pair-check", "interval-pair", "--no-cache"])
    assert code == 0 and rep["ok"]
    v = rep["result"]["verdict"]
    assert v["formal_dimensions"] == [1] and v["poincare"]
    assert rep["result"]["routes"]["agree"]


def test_rp2_cone_witness(capsys):
    code, rep = _machine(capsys, ["pair-check", "rp2-cone-pair", "--ring", "Q"])
    assert code == 1
    v = rep["result"]["verdict"]
    lo, hi = v["witnesses"]["non_groupoidal_cover"]
    assert lo.startswith("(0,") and hi == "(1,*)"
    assert v["omega_degrees"][hi] == -1 and v["omega_degrees"][lo] == -3


def test_malformed_json_is_located(tmp_path, capsys):
    p = tmp_path / "doc.json"
    p.write_text('{"posets": {\n  "x": [}')
    assert main(["run", "--input", str(p)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err


def test_determinism_and_cache(tmp_path, capsys):
    argv = ["property-battery", "--seed", "3", "--cases", "10", "--max-size", "4", "--out", str(tmp_path)]
    code1, a = _machine(capsys, argv + ["--no-cache"])
    code2, b = _machine(capsys, argv + ["--no-cache"])
    assert code1 == code2 == 0
    assert dumps(_strip(a)) == dumps(_strip(b))
    files = list(tmp_path.glob("property-battery-*.json"))
    assert len(files) == 1
    _, c = _machine(capsys, argv)
    assert c == json.loads(files[0].read_text())


def test_job_key_tracks_inputs():
    job = JobSpec("pair-check", ["x"], "Z", "yoneda", 0, 6, 100, [])
    d1 = Document({"posets": {"x": {"elements": ["a", "b"], "covers": [["a", "b"]]}}})
    d2 = Document({"posets": {"x": {"elements": ["a", "b"], "covers": []}}})
    assert job_key(job, d1) != job_key(job, d2)
    assert job_key(job, d1) == job_key(JobSpec.from_json(job.to_json()), d1)


def test_run_document(tmp_path, capsys):
    doc = {
        "posets": {"arc": {"elements": ["a", "b", "e"], "covers": [["a", "e"], ["b", "e"]], "boundary": ["a", "b"]}},
        "diagrams": {"cone": {"index": "cube(1)", "values": {"0": {"elements": ["p", "q"], "covers": []},
                                                             "1": "point"},
                              "transitions": [["0", "1", {"p": "*", "q": "*"}]]}},
        "jobs": [{"command": "pair-check", "targets": ["arc"]},
                 {"command": "ad-check", "targets": ["cone"], "ring": "Q"},
                 {"command": "glue", "targets": ["arc", "arc"]}],
    }
    p = tmp_path / "doc.json"
    p.write_text(json.dumps(doc))
    code, reps = _machine(capsys, ["run", "--input", str(p), "--out", str(tmp_path / "out")])
    assert code == 0 and len(reps) == 3 and all(r["ok"] for r in reps)


def test_figures(tmp_path, capsys):
    code = main(["pair-check", "circle", "--figures", "--out", str(tmp_path)])
    assert code == 0
    png = tmp_path / "figures" / "circle.png"
    assert png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_list_spaces(capsys):
    assert main(["--list-spaces"]) == 0
    out = capsys.readouterr().out
    for name in ("interval-pair", "rp2-cone-pair", "polygon(k)", "planted-rp2", "circle-ad"):
        assert name in out


def test_poset_round_trip():
    rng = random.Random(0)
    for _ in range(20):
        P = random_poset(rng, rng.randint(0, 6))
        text = dumps(P.to_json())
        assert dumps(Poset.from_json(json.loads(text)).to_json()) == text
    pair = PosetPair(rp2(), frozenset())
    text = dumps(pair.to_json())
    assert dumps(PosetPair.from_json(json.loads(text)).to_json()) == text


def test_system_round_trip():
    rng = random.Random(1)
    for ring in (ZZ, QQ, Fp(5)):
        for _ in range(8):
            P = random_poset(rng, rng.randint(1, 5))
            xi = random_presheaf(rng, P, ring)
            text = dumps(system_to_json(xi))
            back = system_from_json(json.loads(text))
            assert dumps(system_to_json(back)) == text
            for x in P:
                assert back.value(x).homology() == xi.value(x).homology()


def test_local_system_round_trip():
    for L in enumerate_sign_systems(rp2()):
        text = dumps(local_system_to_json(L))
        back = local_system_from_json(json.loads(text))
        assert back == L and dumps(local_system_to_json(back)) == text


def test_system_parse_errors():
    P = Poset.chain(1)
    with pytest.raises(ParseError):
        system_from_json({"values": {"nowhere": {"ranks": {"0": 1}}}}, P)
    with pytest.raises(ParseError):
        system_from_json({"values": {}, "transitions": [["x", "y", {}]]}, P)


def test_run_job_without_the_filesystem():
    rep = run_job(JobSpec("manifold-check", ["polygon(5)"], "Z", "yoneda", 0, 6, 100, []), Document())
    assert rep["ok"]
