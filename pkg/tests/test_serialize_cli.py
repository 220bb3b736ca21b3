import json
import random
import shutil
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from fmtwist.algebra import beilinson

from fmtwist.cli import bundled_dir, bundled_scenarios, load_scenario, main, run_scenario
from fmtwist.complexes import random_complex
from fmtwist.kernels import rank_one_kernel
from fmtwist.complexes import projective
from fmtwist.lattice import spherical_twist_op
from fmtwist.presets import get_preset, oracle_gram
from fmtwist.serialize import (INT_BOUND, SchemaError, algebra_from_json, algebra_to_json,
                               bimodule_to_json, class_from_json, class_to_json,
                               complex_from_json, complex_to_json, decode_int,
                               decode_rational, dumps, encode_int, lattice_from_json,
                               lattice_to_json, op_from_json, op_to_json, validate)

GOLDEN = Path(__file__).parent / "golden"
P1 = beilinson(1)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ----------------------------------------------------------------------
# serialisation

@given(st.integers(-2 ** 80, 2 ** 80))
def test_int_roundtrip(n):
    enc = encode_int(n)
    assert decode_int(enc) == n
    assert isinstance(enc, int) == (abs(n) < INT_BOUND)


def test_rational_decoding():
    assert decode_rational("-3/4") == Fraction(-3, 4)
    assert decode_rational(5) == 5


@pytest.mark.parametrize("name", ["p1_beilinson", "a2_surface", "z5_threefold", "elliptic_cubic"])
def test_lattice_roundtrip(name):
    lat = get_preset(name).lattice
    doc = lattice_to_json(lat)
    validate(doc, "lattice")
    back = lattice_from_json(doc)
    assert back.gram == lat.gram and back.labels == lat.labels


def test_class_and_op_roundtrip():
    lat = get_preset("a2_surface").lattice
    v = lat.basis(0)
    doc = class_to_json(v)
    validate(doc, "class")
    assert class_from_json(doc, lat) == v
    op = spherical_twist_op(v)
    d2 = op_to_json(op)
    validate(d2, "op")
    assert op_from_json(d2, lat).matrix == op.matrix


@pytest.mark.parametrize("n", [1, 2])
def test_algebra_roundtrip(n):
    alg = beilinson(n)
    doc = algebra_to_json(alg)
    validate(doc, "algebra")
    back = algebra_from_json(doc)
    assert back.n == alg.n
    assert all(back.dim(i, j) == alg.dim(i, j) for i in range(alg.n) for j in range(alg.n))


@given(st.integers(0, 10 ** 6), st.integers(1, 4))
def test_complex_roundtrip(seed, size):
    X = random_complex(P1, random.Random(seed), size)
    doc = complex_to_json(X)
    validate(doc, "complex")
    assert complex_from_json(doc, P1) == X


def test_bimodule_json():
    K = rank_one_kernel(projective(P1, 0), projective(P1, 1))
    doc = bimodule_to_json(K)
    validate(doc, "bimodule")
    assert json.loads(dumps(doc)) == doc


def test_validate_rejects():
    with pytest.raises(SchemaError):
        validate({"schema": 1, "id": "x", "kind": "lattice-check"}, "scenario")
    with pytest.raises(SchemaError):
        validate({"schema": 1, "id": "x", "kind": "dual-seq", "preset": "p1_beilinson",
                  "surprise": 1}, "scenario")
    with pytest.raises(SchemaError):
        validate({"schema": 1, "id": "x", "kind": "nonsense"}, "scenario")


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


# ----------------------------------------------------------------------
# CLI

def test_list_presets(capsys):
    code, out, _ = run_cli(capsys, "list-presets")
    assert code == 0
    assert "p1_beilinson" in json.loads(out)["presets"]


def test_list_scenarios(capsys):
    code, out, _ = run_cli(capsys, "list-scenarios")
    assert code == 0 and json.loads(out)["scenarios"] == bundled_scenarios()


def test_export_p1(capsys):
    code, out, _ = run_cli(capsys, "export-preset", "p1_beilinson")
    doc = json.loads(out)
    assert code == 0
    assert doc["algebra"]["dims"][0][1] == 2
    assert doc["lattice"]["gram"] == [[1, 2], [0, 1]]


def test_export_a2_gram_matches_oracle(capsys):
    geom = get_preset("a2_surface")
    _, out, _ = run_cli(capsys, "export-preset", "a2_surface")
    assert json.loads(out)["lattice"]["gram"] == [list(r) for r in oracle_gram(geom)]


def test_export_unknown(capsys):
    code, _, err = run_cli(capsys, "export-preset", "nowhere")
    assert code == 2 and "unknown preset" in err


def test_schema_command(capsys):
    code, out, _ = run_cli(capsys, "schema", "scenario")
    assert code == 0 and json.loads(out)["type"] == "object"


def test_malformed_json_exits_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, out, err = run_cli(capsys, "run", "--scenario", str(p))
    assert code == 2 and "malformed JSON" in err and out == ""


def test_schema_violation_exits_2(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"schema": 1, "id": "x", "kind": "dual-seq"}))
    code, _, _ = run_cli(capsys, "run", "--scenario", str(p))
    assert code == 2


def test_bad_flag_exits_2(capsys):
    code, _, _ = run_cli(capsys, "run", "--bogus")
    assert code == 2


def test_missing_file_exits_2(capsys):
    code, _, err = run_cli(capsys, "run", "--scenario", "/nonexistent/x.json")
    assert code == 2 and "cannot read" in err


def test_bare_flags_imply_run(capsys):
    code, out, _ = run_cli(capsys, "--scenario", "elliptic_ckas")
    assert code == 0 and json.loads(out)["verdict"] == "shadow-pass"


def test_wrong_expected_matrix_exits_1(capsys, tmp_path):
    doc = load_scenario("z5_relations")
    doc["relations"][2]["expected_matrix"][0][1] = 1
    p = tmp_path / "z5_bad.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run_cli(capsys, "run", "--scenario", str(p))
    rep = json.loads(out)
    assert code == 1 and rep["verdict"] == "fail"
    failing = [c for c in rep["checks"] if c["verdict"] == "fail"]
    assert failing and failing[0]["evidence"]["residual"]


def test_preset_override(capsys):
    code, _, err = run_cli(capsys, "run", "--scenario", "p1_dual_seq", "--preset", "nowhere")
    assert code == 2


def test_text_output(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "p1_dual_seq", "--emit", "text")
    assert code == 0
    assert out.startswith("p1_dual_seq [dual-seq]: pass") and "time:" in out


def test_timing_only_on_request(capsys):
    _, out, _ = run_cli(capsys, "run", "--scenario", "p1_dual_seq")
    assert "timing" not in json.loads(out)
    _, out, _ = run_cli(capsys, "run", "--scenario", "p1_dual_seq", "--timing")
    assert json.loads(out)["timing"]["seconds"] >= 0


def test_batch_output(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "p1_dual_seq",
                           "--scenario", "elliptic_ckas")
    doc = json.loads(out)
    assert code == 0 and [r["scenario"] for r in doc["reports"]] == ["p1_dual_seq",
                                                                      "elliptic_ckas"]
    for r in doc["reports"]:
        validate(r, "report")


@pytest.mark.parametrize("name", bundled_scenarios())
def test_golden_regression(name):
    report = run_scenario(load_scenario(name))
    validate(report, "report")
    assert report["verdict"] in ("pass", "shadow-pass")
    assert dumps(report) == (GOLDEN / f"{name}.json").read_text()


def test_golden_mode_detects_drift(capsys, tmp_path):
    shutil.copy(GOLDEN / "elliptic_ckas.json", tmp_path / "elliptic_ckas.json")
    code, _, _ = run_cli(capsys, "run", "--scenario", "elliptic_ckas", "--golden", str(tmp_path))
    assert code == 0
    (tmp_path / "elliptic_ckas.json").write_text("{}\n")
    code, _, err = run_cli(capsys, "run", "--scenario", "elliptic_ckas", "--golden", str(tmp_path))
    assert code == 1 and "differs" in err
    code, _, _ = run_cli(capsys, "run", "--scenario", "elliptic_ckas", "--golden", str(tmp_path),
                         "--update-golden")
    assert (tmp_path / "elliptic_ckas.json").read_text() == (GOLDEN / "elliptic_ckas.json").read_text()


def test_reruns_are_byte_identical(capsys):
    outs = [run_cli(capsys, "run", "--scenario", "rewrite_scripts")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_jobs_match_serial(capsys):
    names = ["p1_dual_seq", "elliptic_ckas", "a2_relations"]
    args = [a for n in names for a in ("--scenario", n)]
    serial = run_cli(capsys, "run", *args)[1]
    parallel = run_cli(capsys, "run", "--jobs", "2", *args)[1]
    assert serial == parallel


def test_console_script():
    exe = shutil.which("fmtwist")
    cmd = [exe] if exe else [sys.executable, "-m", "fmtwist.cli"]
    r = subprocess.run(cmd + ["run", "--scenario", str(bundled_dir() / "elliptic_ckas.json")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["scenario"] == "elliptic_ckas"
