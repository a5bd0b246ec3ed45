import json
import subprocess
import sys

import pytest

from kstab.cli import main
from kstab.io import (
    SchemaError,
    gallery_names,
    load_family,
    parse_family,
    parse_pl,
    read_source,
    serialize_family,
    serialize_pl,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    assert code == 0, err
    return json.loads(out)


def test_info_json(capsys):
    r = run_json(capsys, "info", "gallery:quadric_blowup", "--param", "s=2")
    assert (r["V"], r["two_a"]) == ("9", "3")
    assert [f["int_P_dsigma"] for f in r["facets"]] == ["0", "9/2", "3", "9/2"]
    assert r["facets"][0]["P_vanishes"] and r["facets"][0]["n_inv"] == "1"
    assert len(r["input_sha256"]) == 64


def test_info_text(capsys):
    code, out, _ = run(capsys, "info", "gallery:centered_square")
    assert code == 0
    assert "two_a" in out and "4" in out


def test_check_json(capsys):
    r = run_json(capsys, "check", "gallery:quadric_blowup", "--param", "s=2")
    assert r["verdict"] == "UniformlyKStable"
    assert r["barycenter"] == ["-1/8", "0"] and r["mass"] == "-9"
    r = run_json(capsys, "check", "gallery:quadric_blowup", "--param", "s=8/5")
    assert r["verdict"] == "Inconclusive"
    assert r["certificate"]["counterexample"]["point"] == ["0", "0"]


def test_check_fano_section(capsys):
    r = run_json(capsys, "check", "gallery:reflexive_triangle")
    assert r["fano"]["two_a_ok"] and r["fano"]["identity_ok"]


def test_check_offcenter_witness(capsys):
    r = run_json(capsys, "check", "gallery:offcenter_quadrilateral")
    assert r["verdict"] == "NotStcPolystable"
    assert r["witness"]["L"].startswith("-")


def test_check_chi_auto(capsys):
    r = run_json(capsys, "check", "gallery:quadric_blowup", "--param", "s=2", "--chi", "auto")
    assert r["chi_index"] is None and r["verdict"] == "UniformlyKStable"


def test_eval_tent(capsys):
    r = run_json(capsys, "eval", "gallery:quadric_blowup", "--param", "s=2", "--pl", "gallery:pl/tent")
    assert r["L"] == r["L_smooth"] == "81/8"
    assert r["identity_holds"] and r["JNA"] == "9/8"
    assert r["JNA_twist_reduced"]["converged"]


def test_scan_steps(capsys):
    r = run_json(capsys, "scan", "gallery:quadric_blowup", "--range", "8/5", "2", "--steps", "3")
    assert [x["verdict"] for x in r["samples"]] == ["Inconclusive", "UniformlyKStable", "UniformlyKStable"]
    assert [x["s"] for x in r["samples"]] == ["8/5", "9/5", "2"]


def test_scan_bisect(capsys):
    r = run_json(capsys, "scan", "gallery:quadric_blowup", "--range", "8/5", "7/4", "--bisect", "--width", "1/64")
    lo, hi = r["bracket"]
    assert r["mode"] == "bisect" and float(r["midpoint_decimal_approx"]) == pytest.approx(1.732, abs=0.01)
    assert lo != hi


@pytest.mark.parametrize(
    "argv, fragment",
    [
        (["info", "gallery:quadric_blowup", "--param", "t=2"], "unknown parameter"),
        (["info", "gallery:quadric_blowup", "--param", "s=1/0"], "--param"),
        (["info", "gallery:centered_square", "--param", "s=2"], "no parameter"),
        (["info", "gallery:nope"], "nope"),
        (["scan", "gallery:quadric_blowup", "--range", "2", "2", "--steps", "3"], "empty"),
        (["scan", "gallery:quadric_blowup", "--range", "2", "1", "--steps", "3"], "empty"),
        (["scan", "gallery:centered_square", "--steps", "3"], "parameter"),
        (["check", "gallery:quadric_blowup", "--chi", "9"], "chi"),
        (["info", "gallery:quadric_blowup", "--chi", "auto"], "auto"),
        (["check", "gallery:quadric_blowup", "--depth", "-1"], "depth"),
        (["check", "gallery:quadric_blowup", "--param", "s=3"], ""),
    ],
)
def test_input_errors_exit_2(capsys, argv, fragment):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    assert fragment in err


def test_schema_error_names_field(tmp_path, capsys):
    doc = json.loads(read_source("gallery:quadric_blowup"))
    doc["roots"][0]["weyl_pairing"] = "1/0"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "info", str(path), "--param", "s=2")
    assert code == 2 and "roots[0].weyl_pairing" in err


def test_pl_schema_error(tmp_path, capsys):
    path = tmp_path / "pl.json"
    path.write_text(json.dumps([{"slope": ["1", "0"], "constant": "x"}]))
    code, _, err = run(capsys, "eval", "gallery:centered_square", "--pl", str(path))
    assert code == 2 and "[0].constant" in err


def test_pl_rank_mismatch(tmp_path, capsys):
    path = tmp_path / "pl.json"
    path.write_text(json.dumps([{"slope": ["1"], "constant": "0"}]))
    code, _, err = run(capsys, "eval", "gallery:centered_square", "--pl", str(path))
    assert code == 2 and "rank" in err


def test_malformed_json(tmp_path, capsys):
    path = tmp_path / "x.json"
    path.write_text("{")
    code, _, err = run(capsys, "info", str(path))
    assert code == 2 and "not valid JSON" in err


@pytest.mark.parametrize("name", gallery_names())
def test_family_roundtrip(name):
    fam, _ = load_family(f"gallery:{name}")
    again = parse_family(json.loads(json.dumps(serialize_family(fam))))
    assert again == fam


def test_pl_roundtrip():
    for name in ("tent", "minus_alpha", "f_dual"):
        g = parse_pl(json.loads(read_source(f"gallery:pl/{name}")))
        assert parse_pl(serialize_pl(g)) == g
    with pytest.raises(SchemaError):
        parse_pl([])


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "kstab", "info", "gallery:reflexive_triangle", "--json"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(out.stdout)["two_a"] == "2"
    assert "finished in" in out.stderr
