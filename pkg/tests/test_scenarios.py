import json
import subprocess
import sys

import numpy as np
import pytest

from teleportlab.cli import main
from teleportlab.scenarios import (
    SCENARIOS,
    ConfigError,
    ExperimentConfig,
    cancellation_ridges,
    chord_distance,
    default_config,
    print_schema,
    run_scenario,
)


def write_config(path, **kv):
    body = "[experiment]\n" + "".join(f"{k} = {v}\n" for k, v in kv.items())
    path.write_text(body)
    return path


def test_config_from_file_parses_grids(tmp_path):
    p = write_config(tmp_path / "c.ini", scenario="fcs", seed=7, out=str(tmp_path / "o"), Ls="6:12:2", alphas="0.1, 0.3")
    cfg = ExperimentConfig.from_file(p)
    assert cfg.scenario == "fcs" and cfg.seed == 7
    assert cfg.params["Ls"] == [6, 8, 10, 12]
    assert cfg.params["alphas"] == [0.1, 0.3]


def test_config_overrides_and_defaults(tmp_path):
    p = write_config(tmp_path / "c.ini", scenario="typical", seed=1)
    cfg = ExperimentConfig.from_file(p, {"seed": 99, "out": "elsewhere", "threads": None})
    assert cfg.seed == 99 and cfg.out == "elsewhere" and cfg.threads == 1
    assert cfg.params["samples"] == SCENARIOS["typical"]["samples"][1]


@pytest.mark.parametrize(
    "kv",
    [
        {"scenario": "nope"},
        {"scenario": "fcs", "bogus": "1"},
        {"scenario": "fcs", "Ls": "8:4:2"},
        {"scenario": "fcs", "seed": "-1"},
        {"scenario": "typical", "samples": "many"},
        {"seed": "3"},
    ],
)
def test_invalid_configs(tmp_path, kv):
    p = write_config(tmp_path / "c.ini", **kv)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(p)


def test_missing_section(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[other]\nscenario = fcs\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(p)


def test_schema_lists_every_scenario_and_key():
    text = print_schema()
    for name, keys in SCENARIOS.items():
        assert f"scenario = {name}" in text
        for k in keys:
            assert f"  {k} (" in text


def test_chord_distance():
    assert chord_distance(8, 16) == pytest.approx(16 / np.pi)
    assert chord_distance(1, 1000) == pytest.approx(1.0, rel=1e-5)


def test_cancellation_ridges():
    ax = [-0.2, -0.1, 0.0, 0.1, 0.2]
    surface = {(x, 0.5): 0.5 - abs(x + 0.1) for x in ax}
    (r,) = cancellation_ridges(surface, ax, [0.5], 0.1)
    assert r["alpha_x_ridge"] == -0.1 and r["interior"]
    assert r["c_eff_left"] == pytest.approx(0.4) and r["c_eff_right"] == pytest.approx(0.4)
    (edge,) = cancellation_ridges(surface, ax, [0.5], 0.3)
    assert edge["c_eff_left"] is None


def test_rerun_is_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        cfg = default_config("typical", seed=5, out=str(tmp_path / name), samples=2000, L=4)
        run_scenario(cfg)
        outs.append(tmp_path / name)
    for f in ("site_means.csv", "pair_connected.csv", "summary.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    m = [json.loads((o / "manifest.json").read_text()) for o in outs]
    m[0].pop("timing_seconds"), m[1].pop("timing_seconds")
    m[0]["config"].pop("out"), m[1]["config"].pop("out")
    assert m[0] == m[1]


def test_seed_changes_sampled_output(tmp_path):
    a = run_scenario(default_config("typical", seed=1, samples=500, L=4), write=False)
    b = run_scenario(default_config("typical", seed=2, samples=500, L=4), write=False)
    assert a.tables["site_means"].rows != b.tables["site_means"].rows


def test_csv_layout(tmp_path):
    cfg = default_config("fcs", out=str(tmp_path), Ls=[6, 8, 10], alphas=[0.2])
    bundle = run_scenario(cfg)
    lines = (tmp_path / "fcs.csv").read_text(encoding="utf-8").splitlines()
    meta = [l for l in lines if l.startswith("#")]
    assert any(l == "# scenario: fcs" for l in meta)
    assert any(l.startswith("# schema_version: ") for l in meta)
    header = lines[len(meta)]
    assert header == "axis,L,alpha,m,f,P"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["tables"]["fcs"] == header.split(",")
    assert {"numpy", "scipy", "teleportlab", "python"} <= set(manifest["versions"])
    assert bundle.summary["window_L"] == [6, 10]


def test_threads_do_not_change_results():
    a = run_scenario(default_config("disguised-y", L=8, alphas=[0.1, 0.2, 0.3], separation=3), write=False)
    b = run_scenario(default_config("disguised-y", L=8, alphas=[0.1, 0.2, 0.3], separation=3, threads=3), write=False)
    assert a.tables["zz_deviation"].rows == b.tables["zz_deviation"].rows


@pytest.mark.parametrize(
    "scenario, params",
    [
        ("relevant-z", {"L": 8, "separations": [2, 3]}),
        ("marginal-x", {"alphas": [0.5], "separations": [20, 30, 40, 50], "ells": [20, 30, 40, 50], "nodes": 512}),
        ("cancellation-xy", {"L": 14, "alpha_x": [-0.1, 0.0, 0.1], "alpha_y": [0.0], "offset": 0.1}),
        ("mixed-state", {"Ls": [4, 6, 8, 10], "alphas": [0.0, 1.0], "axes": ["z"], "check_L": 4}),
        ("single-qubit", {"u_values": [0.4, float(np.pi / 4)], "states": 1}),
    ],
)
def test_small_scenarios_run(tmp_path, scenario, params):
    bundle = run_scenario(default_config(scenario, out=str(tmp_path), **params))
    assert bundle.summary["scenario"] == scenario
    for name in bundle.tables:
        assert (tmp_path / f"{name}.csv").exists()
    json.loads((tmp_path / "summary.json").read_text())


def test_single_qubit_scenario_verifies_compact_form():
    bundle = run_scenario(default_config("single-qubit", states=2), write=False)
    assert bundle.summary["max_error"] < 1e-12


def test_cli_schema_and_list(capsys):
    assert main(["--print-schema"]) == 0
    assert "scenario = marginal-x" in capsys.readouterr().out
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == sorted(SCENARIOS)


def test_cli_run_from_config(tmp_path, capsys):
    p = write_config(tmp_path / "c.ini", scenario="single-qubit", seed=3, u_values="0.5, 0.785398", states=1)
    out = tmp_path / "run"
    assert main(["run", str(p), "--out", str(out), "--seed", "4"]) == 0
    paths = json.loads(capsys.readouterr().out)
    assert set(paths) == {"verification", "summary", "manifest"}
    assert json.loads((out / "manifest.json").read_text())["seed"] == 4


def test_cli_run_scenario_without_file(tmp_path):
    assert main(["run", "--scenario", "single-qubit", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "verification.csv").exists()


def test_cli_errors(tmp_path, capsys):
    p = write_config(tmp_path / "c.ini", scenario="warp-drive")
    assert main(["run", str(p)]) == 1
    assert "unknown scenario" in capsys.readouterr().err
    assert main(["run"]) == 1
    assert main(["run", str(tmp_path / "missing.ini")]) == 1
    with pytest.raises(SystemExit):
        main(["run", "--scenario", "warp-drive"])


def test_memory_gate_is_reported(tmp_path, capsys):
    args = ["run", "--scenario", "mixed-state", "--out", str(tmp_path), "--max-memory-gb", "1e-6"]
    assert main(args) == 1
    assert "error" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "teleportlab", "list"], capture_output=True, text=True, check=True)
    assert "fcs" in res.stdout.split()
