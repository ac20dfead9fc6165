import json
import os
import subprocess
import sys

import pytest

from spinprobe.cli import main
from spinprobe.runner import build_config, parse_axis
from spinprobe.traces import CSV_HEADER, CoherenceTrace


def read(path):
    with open(path) as fh:
        return fh.read()


def test_parse_axis():
    assert len(parse_axis("0.0:3.0:0.25")) == 13
    assert parse_axis("0.0:3.0:0.25")[-1] == 3.0
    assert parse_axis("1,2.5") == [1.0, 2.5]
    assert parse_axis("8:12:2", int) == [8, 10, 12]
    for bad in ("1:0:1", "0:1:0", "0:1"):
        with pytest.raises(ValueError):
            parse_axis(bad)


def test_run_writes_trace_report_and_manifest(tmp_path):
    out = tmp_path / "r"
    rc = main(["run", "--backend", "exact", "--L", "10", "--delta", "0.5", "--tmax", "5", "--out", str(out)])
    assert rc == 0
    csv = out / "coherence_L10_delta+0.5_g0.25.csv"
    assert read(csv).splitlines()[0] == CSV_HEADER
    tr = CoherenceTrace.read_csv(csv)
    assert tr.t.size == 101 and tr.rho[0] == pytest.approx(0.5, abs=1e-12)
    rep = json.loads(read(out / "report_L10_delta+0.5_g0.25.json"))
    assert rep["params"]["L"] == 10 and rep["observables"]["entropy"] > 0
    assert read(out / "observables.csv").startswith("delta,t_r,omega,entropy")
    man = json.loads(read(out / "manifest.json"))
    assert man["config"]["backend"] == "exact" and len(man["points"]) == 1


def test_capability_gating_writes_nothing(tmp_path, capsys):
    out = tmp_path / "g"
    assert main(["run", "--backend", "exact", "--L", "48", "--delta", "0.5", "--out", str(out)]) == 2
    assert main(["run", "--backend", "analytic-pbc", "--L", "12", "--delta", "0.5", "--out", str(out)]) == 2
    assert main(["sweep", "--backend", "ising", "--L", "12", "--delta", "0:3:1", "--out", str(out)]) == 2
    assert "capability" in capsys.readouterr().err
    assert not out.exists()


def test_defaults():
    cfg = build_config({}, {"backend": "tdvp"}, env={}).resolved()
    assert (cfg.J, cfg.g, cfg.h_z, cfg.L) == (1.0, 0.25, 0.0, 48)
    cfg = build_config({}, {"backend": "tdvp", "paper_scale": True}, env={}).resolved()
    assert cfg.L == 100


def test_precedence_file_env_flags(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text('backend = "exact"\nworkers = 3\n[model]\nL = 8\ng = 0.5\n')
    from spinprobe.runner import load_toml

    vals = load_toml(cfg_file)
    assert build_config(vals, {}, env={}).workers == 3
    assert build_config(vals, {}, env={"SPINPROBE_WORKERS": "2"}).workers == 2
    c = build_config(vals, {"workers": 1, "g": 0.1}, env={"SPINPROBE_WORKERS": "2"})
    assert (c.workers, c.g, c.L) == (1, 0.1, 8)
    bad = tmp_path / "bad.toml"
    bad.write_text("[model]\nfoo = 1\n")
    with pytest.raises(ValueError):
        load_toml(bad)


def test_sweep_from_toml_and_self_compare(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "c.toml"
    out = tmp_path / "s"
    cfg.write_text(f'backend = "exact"\nout = "{out}"\n[model]\nL = 6\n[time]\nt_max = 4.0\n[sweep]\ndelta = "0.0:3.0:0.25"\n')
    monkeypatch.setenv("SPINPROBE_WORKERS", "1")
    assert main(["sweep", "--config", str(cfg)]) == 0
    rows = read(out / "observables.csv").splitlines()
    assert len(rows) == 14
    capsys.readouterr()
    assert main(["compare", str(out), str(out)]) == 0
    metrics = json.loads(capsys.readouterr().out)
    assert len(metrics) == 13 and all(m["max_abs"] == 0 for m in metrics.values())


def test_ground_json(tmp_path, capsys):
    assert main(["ground", "--L", "4", "--delta", "-10"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["energy"] == pytest.approx(-7.5) and res["entropy"] == 0.0
    assert main(["ground", "--L", "8", "--delta", "0", "--method", "dmrg", "--chi", "16"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["method"] == "dmrg" and max(res["bond_dims"]) <= 16


def test_repeated_runs_identical(tmp_path):
    args = ["sweep", "--backend", "tcl-exact", "--L", "8", "--delta", "0,1", "--tmax", "4"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in os.listdir(tmp_path / "a"):
        if name != "manifest.json":
            assert read(tmp_path / "a" / name) == read(tmp_path / "b" / name)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "spinprobe.cli", "verify", "--only", "11"], capture_output=True, text=True)
    assert r.returncode == 0 and "[PASS] criterion 11" in r.stdout
