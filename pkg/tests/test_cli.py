import json
import subprocess
import sys

import pytest

from nullitylab import catalog as C
from nullitylab.cli import main, parse_box, parse_grid, CliError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_helpers():
    assert parse_grid("9x9") == (9, 9)
    assert parse_grid("3") == (3,)
    assert parse_box("-1:1,0:2.5") == ((-1.0, 1.0), (0.0, 2.5))
    for bad in ("9by9", "1x4"):
        with pytest.raises(CliError):
            parse_grid(bad)
    for bad in ("1:0", "a:b", "1"):
        with pytest.raises(CliError):
            parse_box(bad)


def test_analyze_clifford(capsys):
    code, out, _ = run(capsys, "analyze", "--immersion", "clifford_torus", "--grid", "9x9")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1 and doc["command"] == "analyze"
    s = doc["summary"]
    assert s["interior_case_histogram"]["FlatExtreme"] == s["interior_points"] == 49
    assert s["chern_kuiper_violations"] == 0
    assert len(doc["points"]) == 81


def test_analyze_affine_residuals(capsys):
    code, out, _ = run(capsys, "analyze", "--immersion", "affine_3_2", "--grid", "3x3x3")
    doc = json.loads(out)
    assert code == 0
    assert doc["summary"]["case_histogram"]["TrivialEqualNullities"] == 27
    assert all(v < 1e-12 for v in doc["summary"]["worst_residuals"].values())


def test_analyze_composition_five(capsys):
    code, out, _ = run(capsys, "analyze", "--immersion", "compo_s2xR_bend", "--grid", "7x7x7")
    s = json.loads(out)["summary"]
    assert code == 0
    assert s["case_histogram"]["CompositionBound"] == 343


def test_analyze_text_and_box(capsys):
    code, out, _ = run(capsys, "analyze", "--immersion", "sphere_2", "--grid", "3", "--box=-0.5:0.5,-0.5:0.5",
                       "--format", "text")
    assert code == 0
    assert "TrivialEqualNullities" in out and "points 9" in out


def test_byte_identical_output(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert main(["analyze", "--immersion", "compo_s2xR_bend", "--grid", "3x3x3", "--seed", "4",
                     "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    ext = []
    for i in range(2):
        path = tmp_path / f"e{i}.json"
        assert main(["extend", "--immersion", "compo_s2xR_bend", "--out", str(path)]) == 0
        ext.append(path.read_bytes())
    assert ext[0] == ext[1]


def test_extend_five(capsys):
    code, out, _ = run(capsys, "extend", "--immersion", "compo_s2xR_bend")
    doc = json.loads(out)
    e = doc["extension"]
    assert code == 0 and doc["passed"]
    assert e["nu_G"] == 3  # (n + l) - (p - l) with n=3, p=2, l=1
    assert e["max_r_phi"] < 1e-8 and e["max_r_n"] < 1e-6
    assert all(a["passed"] for a in e["audits"])


def test_extend_ruled_route(capsys):
    code, out, _ = run(capsys, "extend", "--immersion", "ruled_saddle_triple_bend", "--format", "text")
    assert code == 0
    assert "route ruled" in out and "ruled_straight_lines" in out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "extend", "--immersion", "clifford_torus")[0] == 3
    assert run(capsys, "analyze", "--immersion", "nope")[0] == 2
    assert run(capsys, "analyze")[0] == 2
    assert run(capsys, "analyze", "--immersion", "sphere_2", "--grid", "2x2x2")[0] == 2
    assert run(capsys, "analyze", "--immersion", "sphere_2", "--box=0:1,-3:3")[0] == 2
    assert run(capsys, "analyze", "--immersion", "sphere_2", "--tol-rank", "-1")[0] == 2
    assert run(capsys, "bogus")[0] == 2
    assert run(capsys, "analyze", "--immersion", "sphere_2", "--out", str(tmp_path / "no" / "x.json"))[0] == 5
    assert run(capsys, "catalog", "--manifest", str(tmp_path / "missing.json"))[0] == 5
    (tmp_path / "junk.json").write_text("{not json")
    assert run(capsys, "catalog", "--manifest", str(tmp_path / "junk.json"))[0] == 2


def test_catalog_command_and_manifest(capsys, tmp_path):
    code, out, _ = run(capsys, "catalog")
    assert code == 0
    path = tmp_path / "m.json"
    path.write_text(out)
    assert [d.name for d in C.load_manifest(path)] == C.names()
    code, out, _ = run(capsys, "analyze", "--manifest", str(path), "--immersion", "sphere_2", "--grid", "3x3")
    assert code == 0 and json.loads(out)["immersion"]["name"] == "sphere_2"


def test_selftest_forced_failures(capsys, tmp_path):
    code, out, _ = run(capsys, "selftest", "--immersion", "clifford_torus", "--tol-flat", "1e-20")
    assert code == 4
    assert "FAIL  beta_flatness" in out

    defs = [C.get("compo_s2xR_bend")]
    doc = C.manifest(defs)
    doc["immersions"][0]["expected"]["nu_g"] = 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "selftest", "--manifest", str(path))
    assert code == 4
    assert "annotation mismatch compo_s2xR_bend" in out


def test_selftest_subset_passes(capsys):
    code, out, _ = run(capsys, "selftest", "--immersion", "compo_s2xR_bend", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"]
    assert "codazzi_phi" in doc["families"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nullitylab", "catalog", "--format", "text"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert "clifford_torus" in res.stdout
