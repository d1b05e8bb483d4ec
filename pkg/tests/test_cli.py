import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from pssurf.cli import run

HERE = Path(__file__).parent


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def sp_json(tmp_path, capsys):
    path = tmp_path / "sp.json"
    assert call(capsys, "builtin", "short_pulse", "--out", path)[0] == 0
    return path


def test_verify_builtin_short_pulse(capsys, sp_json):
    code, out, err = call(capsys, "verify", "--system", sp_json, "--immersion")
    assert code == 0
    report = json.loads(out)
    assert report["passed"] and len(report["residuals"]) == 8
    assert "PASS" in err


def test_verify_perturbed_omega3(capsys, sp_json, tmp_path):
    doc = json.loads(sp_json.read_text())
    doc["forms"]["omega3"]["dt"] = "2*z"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = call(capsys, "verify", "--system", bad)
    assert code == 1
    report = json.loads(out)
    failing = [r for r in report["residuals"] if r["verdict"] == "nonzero"]
    assert failing and all(r["witness"] for r in failing)


def test_generate_cor1_then_verify(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, _, _ = call(capsys, "generate", "--cor1", "--psi", "z", "--m1", 1, "--m2", 0, "--lambda", 1, "--out", path)
    assert code == 0
    assert call(capsys, "verify", "--system", path, "--immersion")[0] == 0


def test_generate_prop1(capsys, tmp_path):
    spec = tmp_path / "p.json"
    spec.write_text(json.dumps({"psi21": "z^2", "psi22": "1", "psi31": "z", "psi32": "0.5"}))
    out = tmp_path / "s.json"
    assert call(capsys, "generate", "--prop1", spec, "--out", out)[0] == 0
    assert call(capsys, "verify", "--system", out)[0] == 0
    code, _, _ = call(capsys, "verify", "--system", out, "--no-subst")
    assert code == 1


def test_generate_prop1_rejects_unknown_keys_and_bad_input(capsys, tmp_path):
    spec = tmp_path / "p.json"
    spec.write_text(json.dumps({"psi21": "z^2", "psi22": "1", "psi31": "z", "psi32": "0.5", "extra": 1}))
    assert call(capsys, "generate", "--prop1", spec)[0] == 2
    spec.write_text(json.dumps({"psi21": "z^2", "psi22": "1", "psi31": "1", "psi32": "0"}))
    code, out, _ = call(capsys, "generate", "--prop1", spec, "--json")
    assert code == 2 and json.loads(out)["error"] == "HypothesisViolation"


def test_lax(capsys, sp_json):
    for size in (2, 3):
        code, out, _ = call(capsys, "lax", "--system", sp_json, "--size", size)
        assert code == 0 and json.loads(out)["size"] == size


def test_builtin_list_and_params(capsys):
    code, out, _ = call(capsys, "builtin", "--list")
    assert code == 0 and set(json.loads(out)) == {"sine_gordon", "short_pulse", "family_sp", "example_4param"}
    code, out, _ = call(capsys, "builtin", "family_sp", "--param", "m1=2", "--param", "m2=1")
    assert code == 0 and json.loads(out)["parameters"]["m1"] == 2.0
    code, out, _ = call(capsys, "builtin", "sine_gordon", "--param", "eta=0", "--json")
    assert code == 2 and json.loads(out)["error"] == "InvalidParameterError"


def test_usage_errors(capsys):
    assert call(capsys, "frobnicate")[0] == 2
    assert call(capsys)[0] == 2
    code, out, _ = call(capsys, "verify", "--json")
    assert code == 2 and json.loads(out)["exit_code"] == 2
    code, out, _ = call(capsys, "verify", "--system", "/nonexistent.json", "--json")
    assert code == 2


def test_solve_and_immerse(capsys, tmp_path):
    field = tmp_path / "f.csv"
    code, out, _ = call(capsys, "solve", "--N", 64, "--T", 0.1, "--out", field)
    assert code == 0 and field.exists() and field.with_suffix(".json").exists()
    summary = json.loads(out)
    assert summary["max_mean_drift"] <= 1e-12
    kink = tmp_path / "k.csv"
    assert call(capsys, "solve", "--builtin", "sine_gordon", "--nx", 41, "--nt", 41, "--out", kink)[0] == 0
    sg = tmp_path / "sg.json"
    assert call(capsys, "builtin", "sine_gordon", "--out", sg)[0] == 0
    mesh = tmp_path / "k.obj"
    code, out, _ = call(capsys, "immerse", "--system", sg, "--field", kink, "--out", mesh)
    assert code == 0
    summary = json.loads(out)
    assert summary["max_drift"] <= 1e-6 and abs(summary["K_median"] + 1) < 0.05
    assert mesh.exists() and Path(summary["curvature_csv"]).exists()
    assert kink.exists() and kink.read_text().startswith("t\\x,")


def test_numerical_breakdown_exit_code(capsys, tmp_path):
    code, out, _ = call(capsys, "solve", "--z0", "2*sin(x)", "--dt", 0.1, "--T", 10, "--out", tmp_path / "b.csv", "--json")
    assert code == 3
    payload = json.loads(out)
    assert payload["error"] == "BlowUpError" and payload["time"] > 0
    kink = tmp_path / "k.csv"
    call(capsys, "solve", "--builtin", "sine_gordon", "--nx", 21, "--nt", 21, "--out", kink)
    sg = tmp_path / "sg.json"
    call(capsys, "builtin", "sine_gordon", "--out", sg)
    code, out, _ = call(capsys, "immerse", "--system", sg, "--field", kink, "--mask-eps", 100, "--out", tmp_path / "m.obj", "--json")
    assert code == 3 and json.loads(out)["error"] == "EmptyRegionError"


def test_nonzero_mean_is_usage_error(capsys, tmp_path):
    code, _, _ = call(capsys, "solve", "--z0", "0.1 + 0.1*sin(x)", "--out", tmp_path / "f.csv")
    assert code == 2


def test_seed_flag_and_environment(capsys, sp_json, monkeypatch):
    _, a, _ = call(capsys, "verify", "--system", sp_json, "--seed", "0x10")
    monkeypatch.setenv("PSS_SEED", "16")
    _, b, _ = call(capsys, "verify", "--system", sp_json)
    assert a == b and json.loads(a)["seed"] == 16
    monkeypatch.delenv("PSS_SEED")
    _, c, _ = call(capsys, "verify", "--system", sp_json)
    assert json.loads(c)["seed"] == 0x5EED


def test_reports_byte_identical(capsys, sp_json, tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"r{k}.json"
        call(capsys, "verify", "--system", sp_json, "--immersion", "--out", path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_help_golden(monkeypatch):
    monkeypatch.setenv("COLUMNS", "100")
    sys.path.insert(0, str(HERE))
    try:
        from make_golden import SUBCOMMANDS, help_text
    finally:
        sys.path.remove(str(HERE))
    text = help_text()
    assert text == (HERE / "golden" / "help.txt").read_text()
    for flag in ("--prop1", "--cor1", "--psi", "--m1", "--m2", "--lambda", "--system", "--immersion",
                 "--no-subst", "--samples", "--seed", "--json", "--size", "--builtin", "--N", "--L",
                 "--dt", "--T", "--z0", "--out", "--field", "--mask-eps", "--list"):
        assert flag in text
    assert all(name in text for name in SUBCOMMANDS)


def test_entry_point_subprocess(tmp_path):
    env = dict(os.environ, COLUMNS="100")
    proc = subprocess.run([sys.executable, "-m", "pssurf.cli", "builtin", "--list"],
                          capture_output=True, text=True, env=env, cwd=tmp_path)
    assert proc.returncode == 0 and "short_pulse" in proc.stdout
