"""Experiment runner, persistence format and command-line interface:
determinism, manifest completeness, config precedence and exit codes."""

import json

import numpy as np
import pytest

from scramblab import cli
from scramblab.correlators import DecayCurve, TimeGrid
from scramblab.experiments import (
    SCHEMA_VERSION,
    ConfigError,
    ExperimentConfig,
    read_curve_csv,
    run_experiment,
    sweep,
    write_curve_csv,
)

FAST_RMT = dict(
    experiment="rmt_otoc_le",
    d_b=8,
    delta=0.3,
    t_max=2.0,
    n_points=11,
    n_realizations=3,
    seed=7,
)


# ---------------------------------------------------------------------------
# CSV round trip


def test_csv_round_trip_is_exact(tmp_path):
    grid = TimeGrid(times=np.array([0.0, np.pi / 3, np.sqrt(2.0), 2.0000000001]))
    curve = DecayCurve(
        grid=grid,
        mean=np.array([1.0, 1 / 3, 1e-17, 0.123456789012345678]),
        stderr=np.array([0.0, 1e-3, 2e-3, 3e-3]),
        n_realizations=5,
        label="x",
    )
    path = tmp_path / "c.csv"
    write_curve_csv(path, curve)
    back = read_curve_csv(path)
    # 17 significant digits reproduce IEEE doubles bit for bit.
    assert np.array_equal(back.grid.times, grid.times)
    assert np.array_equal(back.mean, curve.mean)
    assert np.array_equal(back.stderr, curve.stderr)
    assert back.n_realizations == 5


def test_csv_header_is_stable(tmp_path):
    grid = TimeGrid(times=np.array([0.0, 1.0]))
    curve = DecayCurve(
        grid=grid, mean=np.ones(2), stderr=np.zeros(2), n_realizations=1, label="x"
    )
    path = tmp_path / "c.csv"
    write_curve_csv(path, curve)
    assert path.read_text().splitlines()[0] == "t,mean,stderr,n"


def test_read_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,value\n0,1\n")
    with pytest.raises(ConfigError):
        read_curve_csv(path)


# ---------------------------------------------------------------------------
# Determinism


def test_repeat_runs_are_byte_identical(tmp_path):
    config = ExperimentConfig(**FAST_RMT)
    m1 = run_experiment(config, tmp_path / "a")
    m2 = run_experiment(config, tmp_path / "b")
    assert m1.curves == m2.curves
    for name in m1.curves.values():
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_thread_count_does_not_change_results(tmp_path):
    serial = ExperimentConfig(**FAST_RMT, threads=1)
    threaded = ExperimentConfig(**FAST_RMT, threads=4)
    m1 = run_experiment(serial, tmp_path / "a")
    m2 = run_experiment(threaded, tmp_path / "b")
    # The file tag must not encode the thread count.
    assert m1.curves == m2.curves
    for name in m1.curves.values():
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seeds_differ(tmp_path):
    m1 = run_experiment(ExperimentConfig(**{**FAST_RMT, "seed": 1}), tmp_path / "a")
    m2 = run_experiment(ExperimentConfig(**{**FAST_RMT, "seed": 2}), tmp_path / "b")
    c1 = read_curve_csv(tmp_path / "a" / m1.curves["otoc"])
    c2 = read_curve_csv(tmp_path / "b" / m2.curves["otoc"])
    assert not np.array_equal(c1.mean, c2.mean)


# ---------------------------------------------------------------------------
# Manifest completeness


def test_manifest_records_everything_needed_to_reproduce(tmp_path):
    config = ExperimentConfig(**FAST_RMT)
    manifest = run_experiment(config, tmp_path)
    data = json.loads(manifest.to_json())
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["experiment"] == "rmt_otoc_le"
    assert data["config"]["seed"] == 7
    assert data["config"]["d_b"] == 8
    assert "PCG64" in data["rng_algorithm"]
    assert data["code_version"]
    assert data["wall_clock_seconds"] > 0
    for label, name in data["curves"].items():
        assert (tmp_path / name).exists(), label
    for label, fit in data["fits"].items():
        if "error" in fit:
            continue
        assert set(fit) >= {"model", "rate_lambda", "window", "r_squared"}
    # Manifest file itself is on disk next to the curves.
    tag = next(iter(data["curves"].values())).rsplit("_", 1)[1].removesuffix(".csv")
    assert (tmp_path / f"rmt_otoc_le_{tag}.json").exists()


def test_iho_run_emits_three_deficit_curves(tmp_path):
    config = ExperimentConfig(experiment="iho", t_max=4.0, n_points=9)
    manifest = run_experiment(config, tmp_path)
    assert set(manifest.curves) == {"one_minus_otoc", "one_minus_m1", "bch_one_minus_m1"}
    for name in manifest.curves.values():
        assert (tmp_path / name).exists()


def test_haar_check_reports_convergence_slope(tmp_path):
    config = ExperimentConfig(
        experiment="haar_check", t_max=1.0, n_points=10, n_realizations=4, seed=3
    )
    manifest = run_experiment(config, tmp_path)
    # Monte Carlo error should shrink roughly like N^-1/2.
    assert -0.75 < manifest.extras["convergence_slope"] < -0.3


# ---------------------------------------------------------------------------
# Sweep


def test_degenerate_sweep_matches_single_run(tmp_path):
    config = ExperimentConfig(**FAST_RMT)
    single = run_experiment(config, tmp_path / "run")
    swept = sweep(config, "delta", ["0.3"], tmp_path / "sweep")
    assert len(swept.sub_runs) == 1
    sub = swept.sub_runs[0]
    assert sub["curves"] == single.curves
    for name in single.curves.values():
        assert (tmp_path / "run" / name).read_bytes() == (
            tmp_path / "sweep" / name
        ).read_bytes()


def test_sweep_manifest_has_rate_table(tmp_path):
    config = ExperimentConfig(**FAST_RMT)
    swept = sweep(config, "delta", ["0.3", "0.5"], tmp_path)
    data = json.loads(swept.to_json())
    assert data["extras"]["sweep_parameter"] == "delta"
    assert len(data["sub_runs"]) == 2
    assert "rate_table" in data["extras"]


def test_sweep_rejects_unknown_parameter(tmp_path):
    config = ExperimentConfig(**FAST_RMT)
    with pytest.raises(ConfigError):
        sweep(config, "flux_capacitor", ["1"], tmp_path)


# ---------------------------------------------------------------------------
# Config validation


def test_config_rejects_unknown_experiment():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="astrology")


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="rmt_otoc_le", d_b=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="rmt_otoc_le", n_points=1)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="rmt_otoc_le", t_max=-1.0)


# ---------------------------------------------------------------------------
# CLI


def _run_cli(args):
    return cli.main(args)


def test_cli_run_writes_to_out_dir(tmp_path, capsys):
    rc = _run_cli(
        [
            "run",
            "rmt_otoc_le",
            "--d-b",
            "8",
            "--t-max",
            "2.0",
            "--n-points",
            "11",
            "--realizations",
            "2",
            "--seed",
            "7",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["config"]["d_b"] == 8
    assert all((tmp_path / n).exists() for n in manifest["curves"].values())


def test_cli_env_var_sets_out_dir(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_DIR_ENV, str(tmp_path / "envdir"))
    rc = _run_cli(
        [
            "run",
            "iho",
            "--t-max",
            "3.0",
            "--n-points",
            "7",
        ]
    )
    assert rc == 0
    manifest = json.loads(capsys.readouterr().out)
    assert all(((tmp_path / "envdir") / n).exists() for n in manifest["curves"].values())


def test_cli_config_file_with_flag_override(tmp_path, capsys):
    ini = tmp_path / "run.ini"
    ini.write_text(
        "[model]\nd-b = 16\ndelta = 0.15\n\n[run]\nseed = 42\nn-points = 11\nt-max = 2.0\nn-realizations = 2\n"
    )
    rc = _run_cli(
        [
            "run",
            "rmt_otoc_le",
            "--config",
            str(ini),
            "--delta",
            "0.2",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["config"]["d_b"] == 16  # from the file
    assert manifest["config"]["seed"] == 42  # from the file
    assert manifest["config"]["delta"] == 0.2  # flag wins


def test_cli_missing_config_file_is_config_error(tmp_path):
    rc = _run_cli(["run", "rmt_otoc_le", "--config", str(tmp_path / "nope.ini")])
    assert rc == 2


def test_cli_unknown_config_key_is_config_error(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[run]\nwarp-drive = 9\n")
    rc = _run_cli(["run", "rmt_otoc_le", "--config", str(ini)])
    assert rc == 2


def test_cli_bad_value_is_config_error(tmp_path):
    rc = _run_cli(["run", "rmt_otoc_le", "--d-b", "0", "--out", str(tmp_path)])
    assert rc == 2


def test_cli_fit_refits_stored_curve(tmp_path, capsys):
    t = np.linspace(0.0, 3.0, 121)
    curve = DecayCurve(
        grid=TimeGrid(times=t),
        mean=0.8 * np.exp(-2.0 * t),
        stderr=np.zeros_like(t),
        n_realizations=1,
        label="x",
    )
    path = tmp_path / "curve.csv"
    write_curve_csv(path, curve)
    rc = _run_cli(["fit", str(path), "--model", "exponential", "--no-plateau"])
    assert rc == 0
    fit = json.loads(capsys.readouterr().out)
    assert fit["model"] == "exponential"
    assert fit["rate_lambda"] == pytest.approx(2.0, rel=1e-6)
    assert "window" in fit


def test_cli_fit_numerical_failure_is_exit_3(tmp_path, capsys):
    t = np.linspace(0.0, 3.0, 60)
    curve = DecayCurve(
        grid=TimeGrid(times=t),
        mean=np.exp(+0.5 * t),  # grows; no decay model applies
        stderr=np.zeros_like(t),
        n_realizations=1,
        label="x",
    )
    path = tmp_path / "growth.csv"
    write_curve_csv(path, curve)
    rc = _run_cli(["fit", str(path), "--model", "exponential", "--no-plateau"])
    assert rc == 3


def test_cli_fit_missing_file_is_config_error(tmp_path):
    rc = _run_cli(["fit", str(tmp_path / "missing.csv")])
    assert rc == 2


def test_cli_haar_check(tmp_path, capsys):
    rc = _run_cli(["haar-check", "--out", str(tmp_path), "--realizations", "3"])
    assert rc == 0
    out, err = capsys.readouterr()
    manifest = json.loads(out)
    assert "convergence_slope" in manifest["extras"]
    assert "N^-0.5" in err


def test_cli_sweep(tmp_path, capsys):
    rc = _run_cli(
        [
            "sweep",
            "rmt_otoc_le",
            "--parameter",
            "delta",
            "--values",
            "0.3,0.5",
            "--d-b",
            "8",
            "--t-max",
            "2.0",
            "--n-points",
            "11",
            "--realizations",
            "2",
            "--out",
            str(tmp_path),
        ]
    )
    assert rc == 0
    manifest = json.loads(capsys.readouterr().out)
    assert len(manifest["sub_runs"]) == 2
