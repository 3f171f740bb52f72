import json
import math
import subprocess
import sys

import numpy as np
import pytest

from minkflow.cli import main


@pytest.fixture(autouse=True)
def output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("MINKFLOW_OUTPUT_ROOT", str(tmp_path / "root"))
    return tmp_path / "root"


def load(path):
    return json.loads(path.read_text())


def test_translator_n2_k2(tmp_path, capsys):
    out = tmp_path / "t22"
    assert main(["translator", "--n", "2", "--k", "2", "--out", str(out)]) == 0
    summary = load(out / "summary.json")
    assert summary["C_asym"] == pytest.approx(0.5, abs=1e-3)
    assert summary["bounds_ok"] is True
    assert summary["residual_sup"] <= 1e-8
    assert json.loads(capsys.readouterr().out) == summary
    header = (out / "profile.csv").read_text().splitlines()[0]
    assert header == "r,z,y,u,C_of_r"


def test_translator_n1_k1(tmp_path):
    out = tmp_path / "t11"
    assert main(["translator", "--n", "1", "--k", "1", "--out", str(out)]) == 0
    assert load(out / "summary.json")["c0"] == pytest.approx(-math.log(2), abs=1e-8)


@pytest.mark.parametrize("argv", [
    ["translator", "--n", "2", "--k", "3"],
    ["translator", "--a", "-1"],
    ["translator", "--n", "two"],
    ["nonsense"],
    [],
    ["check", "astrology"],
    ["flow", "--config", "/nonexistent/flow.cfg"],
    ["flow", "--representation", "grid", "--n", "3"],
])
def test_usage_errors_exit_1(argv):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_default_run_dir_under_output_root(output_root):
    assert main(["translator", "--n", "1", "--k", "1"]) == 0
    dirs = list(output_root.glob("translator-*"))
    assert len(dirs) == 1
    assert (dirs[0] / "manifest.json").exists()


def test_manifest_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["translator", "--n", "2", "--k", "1", "--out", str(out)]) == 0
    ma, mb = load(a / "manifest.json"), load(b / "manifest.json")
    assert ma["outputs"] == mb["outputs"]
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()
    assert ma["command"] == "translator"
    assert ma["parameters"]["n"] == {"value": 2, "source": "cli"}
    assert ma["parameters"]["tol"]["source"] == "default"
    import hashlib
    assert ma["outputs"]["profile.csv"] == hashlib.sha256((a / "profile.csv").read_bytes()).hexdigest()


FLOW_FAST = ["--L", "4", "--h", "0.02", "--t-end", "10"]


def test_flow_bump_converges(tmp_path):
    out = tmp_path / "flow"
    assert main(["flow", *FLOW_FAST, "--out", str(out)]) == 0
    s = load(out / "summary.json")
    assert s["converged"] and s["monotone"] and s["sandwich_ok"]
    assert s["final_sup_dist"] <= 1e-3
    for name in ("history.csv", "initial.csv", "final.csv", "manifest.json"):
        assert (out / name).exists()
    assert (out / "history.csv").read_text().splitlines()[0] == \
        "t,sup_dist,min_margin,max_phi_over_v,flagged_fraction"


def test_flow_translator_converged_at_start(tmp_path):
    out = tmp_path / "flow0"
    assert main(["flow", *FLOW_FAST, "--bump", "0", "--out", str(out)]) == 0
    s = load(out / "summary.json")
    assert s["converged"] and s["t_converged"] == 0.0


def test_flow_config_precedence(tmp_path):
    cfg = tmp_path / "flow.cfg"
    cfg.write_text("# test run\nL = 4\nh = 0.04\nt_end = 10\nbump = 0.2\n")
    out = tmp_path / "flowcfg"
    assert main(["flow", "--config", str(cfg), "--h", "0.02", "--out", str(out)]) == 0
    params = load(out / "manifest.json")["parameters"]
    assert params["h"] == {"value": 0.02, "source": "cli"}
    assert params["bump"] == {"value": 0.2, "source": "config"}
    assert params["k"] == {"value": 1, "source": "default"}
    assert "sha256" in load(out / "manifest.json")["inputs"]["config"]


def test_flow_out_of_range_velocity_flagged(tmp_path):
    out = tmp_path / "flowC"
    assert main(["flow", *FLOW_FAST, "--C", "1.5", "--out", str(out)]) == 0
    s = load(out / "summary.json")
    assert s["converged"]
    assert s["admissible"] is False and s["a_in_range"] is False
    assert s["a_max"] == pytest.approx(0.75)


def test_flow_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    assert main(["flow", "--config", str(cfg)]) == 1


def test_flow_numerical_failure_exit_2(tmp_path):
    # t_end too short to converge
    assert main(["flow", *FLOW_FAST[:4], "--t-end", "0.1", "--out", str(tmp_path / "f")]) == 2


def _write_phi(path, values, theta=None):
    m = len(values)
    if theta is None:
        theta = 2 * np.pi * np.arange(m) / m
    with open(path, "w") as fh:
        fh.write("theta,phi\n")
        for t, v in zip(theta, values):
            fh.write(f"{float(t):.17g},{float(v):.17g}\n")


def test_barriers_sin2theta(tmp_path):
    phi = tmp_path / "phi.csv"
    theta = 2 * np.pi * np.arange(64) / 64
    _write_phi(phi, 0.3 * np.sin(2 * theta))
    out = tmp_path / "bar"
    assert main(["barriers", "--phi", str(phi), "--L", "3", "--h", "0.2", "--out", str(out)]) == 0
    rep = load(out / "report.json")
    assert rep["ordered"] and rep["ordering_excess"] <= 1e-10
    assert set(rep["asymptotic_gap"]) == {"1.5", "2.4"}
    assert load(out / "manifest.json")["inputs"]["phi"]["sha256"]


def test_barriers_zero_collapse(tmp_path):
    out = tmp_path / "bar0"
    assert main(["barriers", "--L", "2", "--h", "0.25", "--m", "16", "--out", str(out)]) == 0
    rows = np.loadtxt(out / "barriers.csv", delimiter=",", skiprows=1)
    assert np.max(np.abs(rows[:, 2] - rows[:, 3])) == 0.0


def test_barriers_rejects_nonuniform(tmp_path):
    phi = tmp_path / "phi.csv"
    _write_phi(phi, np.zeros(16), theta=np.linspace(0, 6, 16) ** 1.1)
    assert main(["barriers", "--phi", str(phi)]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("theta,phi\n0,oops\n")
    assert main(["barriers", "--phi", str(bad)]) == 1


def test_legendre(tmp_path):
    out = tmp_path / "leg"
    assert main(["legendre", "--h", "0.03125", "--out", str(out)]) == 0
    s = load(out / "summary.json")
    assert s["dual_residual"] <= 5e-3
    assert s["convex"] is True
    assert (out / "dual.csv").read_text().splitlines()[0] == "xi1,xi2,ustar,resolved"


def test_check_suite_deterministic(tmp_path, capsys):
    code = main(["check", "symfunc", "--seed", "7"])
    first = capsys.readouterr().out
    assert main(["check", "symfunc", "--seed", "7"]) == code == 0
    assert capsys.readouterr().out == first
    report = json.loads(first)
    assert report["failures"] == 0 and report["seed"] == 7


def test_check_all_passes_and_writes(tmp_path, capsys):
    out = tmp_path / "chk"
    assert main(["check", "all", "--seed", "7", "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    names = [c["name"] for c in report["checks"]]
    assert any("injected error violates the sandwich" in n for n in names)
    assert all(c["passed"] for c in report["checks"])
    assert load(out / "manifest.json")["seed"] == 7


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "minkflow.cli", "translator", "--n", "2", "--k", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "k=3" in proc.stderr or "k" in proc.stderr
