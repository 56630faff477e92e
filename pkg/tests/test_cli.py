import json
import subprocess
import sys

import pytest

from hodgemc.cli import run


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(payload if isinstance(payload, str) else json.dumps(payload))
    return str(p)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    report = json.loads(out.out) if out.out.strip() else None
    return code, report, out.err


COMPLEX = {"ring": "Q", "degrees": {"-1": 1, "0": 2}, "differentials": {"-1": [["1"], ["0"]]}}
MODULE = {
    "algebra": {"mode": "weyl", "base_vars": 1, "generators": 1},
    "complex": {"ring": {"over": "A", "vars": ["x"]}, "degrees": {"0": 2}},
    "action": {"0": [[["1", "2"], ["0", "-1"]]]},
}


def test_validate_complex(tmp_path, capsys):
    code, rep, _ = call(capsys, "validate", write(tmp_path, "c.json", COMPLEX))
    assert code == 0
    assert rep["violations"] == [] and rep["passed"]


def test_validate_reports_bad_differential(tmp_path, capsys):
    bad = {"ring": "Q", "degrees": {"0": 1, "1": 1, "2": 1}, "differentials": {"0": [["1"]], "1": [["1"]]}}
    code, rep, _ = call(capsys, "validate", write(tmp_path, "c.json", bad))
    assert code == 1 and rep["violations"]


def test_malformed_json_exits_two_with_location(tmp_path, capsys):
    code, rep, err = call(capsys, "homology", write(tmp_path, "c.json", '{"ring": "Q",\n "degrees": }'))
    assert code == 2 and rep is None
    assert "line 2" in err


def test_bad_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["fiber", "--lambda", "abc"])
    assert exc.value.code == 2


def test_homology_and_dp(tmp_path, capsys):
    path = write(tmp_path, "c.json", COMPLEX)
    code, rep, _ = call(capsys, "homology", path)
    assert code == 0 and rep["ranks"] == {"-2": 0, "-1": 0, "0": 1, "1": 0, "2": 0}
    code, rep, _ = call(capsys, "dp", "--complex", path, "--levels", "2")
    assert code == 0 and rep["homotopy_groups"] == {"0": 1, "1": 0, "2": 0}


def test_weakify_and_mc_check(tmp_path, capsys):
    path = write(tmp_path, "m.json", MODULE)
    code, rep, _ = call(capsys, "weakify", "--module", path)
    assert code == 0 and rep["mc"]["ok"]
    elem = write(tmp_path, "eta.json", rep["element"])
    code, rep, _ = call(capsys, "mc-check", "--module", path, "--element", elem)
    assert code == 0 and rep["ok"]


def test_transfer(capsys):
    code, rep, _ = call(capsys, "transfer", "--trials", "2")
    assert code == 0
    assert all(r["mc"] and r["closed"] and r["p0_equals_a0"] for r in rep["instances"])


def test_hkr_scan_threshold(capsys):
    code, rep, _ = call(capsys, "hkr-scan", "--m", "1", "--kmax", "3")
    assert code == 0
    assert all(rep["levels"][k]["acyclic"] for k in ("2", "3"))


def test_cech_presheaf_and_pole_model(tmp_path, capsys):
    presheaf = {
        "covering": {"opens": ["U", "X"], "order": [[0, 1]], "total": 1},
        "values": {"U": {"ring": "Q", "degrees": {"0": 1}}, "X": {"ring": "Q", "degrees": {"0": 1}}},
        "restrictions": [{"small": "U", "big": "X", "maps": {"0": [["1"]]}}],
    }
    code, rep, _ = call(capsys, "cech", "--presheaf", write(tmp_path, "p.json", presheaf))
    assert code == 0 and rep["unit_comparison"]["quasi_iso"]
    code, rep, _ = call(capsys, "cech", "--pole-model", "--trials", "1")
    assert code == 0 and rep["mc_globalization"]["ok"]


def test_fiber_pipeline(capsys):
    code, rep, _ = call(capsys, "fiber", "--model", "a1-two-opens", "--rank", "2", "--k", "2", "--lambda", "1")
    assert code == 0
    assert rep["trivial_connection"]["mc"]
    assert rep["tangent"]["agree"]
    assert len(rep["variety"]["vars"]) == 40


def test_chart_gauge_transport_hodge(tmp_path, capsys):
    assert call(capsys, "chart", "--trials", "2")[0] == 0
    assert call(capsys, "gauge", "--trials", "2")[0] == 0
    assert call(capsys, "transport", "--trials", "1")[0] == 0
    code, rep, _ = call(capsys, "hodge")
    assert code == 0 and rep["lambda_one_equals_weyl"] and rep["lambda_zero_commutator_free"]


def test_gauge_with_points_file(tmp_path, capsys):
    from hodgemc import mcgeom as mg

    dga = write(tmp_path, "z.json", mg.toy_gauge_dga().to_json())
    pts = write(tmp_path, "pts.json", {"phi": {}, "psi": {"e'": "1"}})
    code, rep, _ = call(capsys, "gauge", "--dga", dga, "--points", pts)
    assert code == 0
    assert rep["result"]["equivalent"] is False and rep["brute_force_equivalent"] is False


def test_reports_are_byte_identical(tmp_path):
    outs = []
    for n in range(2):
        target = tmp_path / f"r{n}.json"
        subprocess.run([sys.executable, "-m", "hodgemc", "transfer", "--trials", "1", "--out", str(target)], check=True)
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]


def test_scratch_directory(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HODGEMC_SCRATCH", str(tmp_path / "scratch"))
    code, rep, _ = call(capsys, "cech", "--pole-model", "--trials", "0")
    assert code == 0
    assert (tmp_path / "scratch" / rep["scratch"]).exists()
