import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gibbscl import harness
from gibbscl.cli import main
from gibbscl.config import ConfigError, load_config, parse_config
from gibbscl.covariates import write_grid
from gibbscl.harness import (
    ScenarioConfig, ScenarioError, compute_metrics, run_scenario, scenario_covariates, true_theta,
)
from gibbscl.sampler import MhConfig, simulate_pattern

SMALL = dict(window=(0, 100, 0, 50), target_count=150, n_lambda=12, replications=3, seed=5)


def test_metrics_worked_examples():
    r = compute_metrics([[1.9], [2.1]], [2.0])
    assert r.bias == pytest.approx(0, abs=1e-15)
    assert r.rmse == pytest.approx(0.1, rel=1e-12)
    assert r.sd == pytest.approx(math.sqrt(0.02), rel=1e-12)
    truth = np.zeros(39)
    truth[:2] = [2.0, 0.75]
    est = np.zeros((2, 39))
    est[:, [0, 4]] = 1.0
    r = compute_metrics(est, truth, [0, 1], np.arange(2, 39))
    assert r.tpr == 50.0
    assert r.fpr == pytest.approx(100 / 37)
    exact = compute_metrics(np.tile(truth, (3, 1)), truth)
    assert exact.bias == exact.sd == exact.rmse == 0.0 and exact.tpr == 100.0 and exact.fpr == 0.0
    with pytest.raises(ValueError):
        compute_metrics([[1.0]], [1.0])


@given(arrays(float, (5, 3), elements=st.floats(-5, 5)), arrays(float, 3, elements=st.floats(-5, 5)))
def test_rmse_dominates_bias(est, truth):
    r = compute_metrics(est, truth)
    assert r.rmse ** 2 >= r.bias ** 2 - 1e-9
    assert 0 <= r.tpr <= 100 or math.isnan(r.tpr)
    assert 0 <= r.fpr <= 100 or math.isnan(r.fpr)


def test_covariate_counts_and_construction():
    assert ScenarioConfig(scenario=1).covariate_count == 39
    assert ScenarioConfig(scenario=1, window="W2").covariate_count == 56
    assert ScenarioConfig(scenario=0).covariate_count == 2
    cfg = ScenarioConfig(scenario=2, n_covariates=20)
    stack = scenario_covariates(cfg)
    assert len(stack) == 20 and stack.names[:2] == ["elevation", "slope"]
    ext, w = stack.extent, cfg.observation_window
    # stretched to the window width; the 2:1 pixel grid covers the height
    assert (ext.xmin, ext.ymin) == (w.xmin, w.ymin) and ext.xmax == pytest.approx(w.xmax)
    assert ext.ymax >= w.ymax
    again = scenario_covariates(cfg)
    for a, b in zip(stack.grids, again.grids):
        np.testing.assert_array_equal(a.values, b.values)


def test_intercept_calibration_mean_count():
    cfg = ScenarioConfig(scenario=0, interaction="poisson", target_count=500)
    cov = scenario_covariates(cfg)
    theta = true_theta(cfg, cov)
    counts = np.array([len(simulate_pattern(cfg.model, theta, cfg.observation_window, cov,
                                            MhConfig(None, 0.5, k))) for k in range(200)])
    assert abs(counts.mean() - 500) < 3 * counts.std(ddof=1) / math.sqrt(200)


def test_scenario_is_deterministic(tmp_path):
    cfg = ScenarioConfig(scenario=1, interaction="geyer", range=4.0, gamma=1.5, n_covariates=6,
                         adaptive=True, write_paths=True, **SMALL)
    a = run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    for name in ("summary.csv", "replicates.csv", "path_0.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.report.estimates.shape == (3, 6)
    assert 0 <= a.summary["tpr"] <= 100


def test_scenario_zero_unpenalized(tmp_path):
    cfg = ScenarioConfig(scenario=0, range=4.0, **SMALL)
    res = run_scenario(cfg)
    assert all(r["lam"] == 0.0 for r in res.records)
    assert res.summary["rmse"] < 2.0


def test_too_many_failures(monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("replicate failed")

    monkeypatch.setattr(harness, "run_replicate", boom)
    with pytest.raises(ScenarioError):
        run_scenario(ScenarioConfig(scenario=0, **SMALL))


def test_config_parsing(tmp_path):
    cfg, extras = parse_config({"scenario": 1, "lambda-mix": 0.3, "scad-gamma": 4.0,
                                "dummy-intensity": 0.2, "beta": [1.0, 2.0]})
    assert cfg.lambda_mix == 0.3 and cfg.scad_gamma == 4.0 and cfg.beta == (1.0, 2.0)
    assert extras == {"dummy_intensity": 0.2}
    with pytest.raises(ConfigError):
        parse_config({"scenari": 1})
    with pytest.raises(ConfigError):
        parse_config({"estimator": "mle"})
    f = tmp_path / "c.toml"
    f.write_text('scenario = 1\nwindow = "W2"\npenalty = "scad"\n')
    cfg, _ = load_config(f)
    assert cfg.window == "W2" and cfg.penalty == "scad"


def test_cli_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        'scenario = 1\nwindow = [0, 100, 0, 50]\ninteraction = "strauss"\nrange = 4.0\n'
        'target_count = 150\nn_covariates = 4\nn_lambda = 10\nreplications = 2\nadaptive = true\n'
        'nd = 40\n'
    )
    config, _ = load_config(cfg)
    grids = tmp_path / "grids"
    grids.mkdir()
    for k, g in enumerate(scenario_covariates(config).grids):
        write_grid(g, grids / f"z{k}.asc")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "p.csv"), "--seed", "2"]) == 0
    assert main(["path", "--pattern", str(tmp_path / "p.csv"), "--covariates", str(grids),
                 "--config", str(cfg), "--out", str(tmp_path / "path.csv")]) == 0
    with open(tmp_path / "path.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:5] == ["lambda", "converged", "df", "cbic", "ceric"] and len(rows) == 11
    capsys.readouterr()
    assert main(["select", "--path", str(tmp_path / "path.csv"), "--criterion", "cbic"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("lambda\t") and "cbic\t" in out
    assert main(["path", "--pattern", str(tmp_path / "p.csv"), "--covariates", str(grids),
                 "--config", str(cfg), "--out", str(tmp_path / "lpath.csv"),
                 "--dummy-intensity", "0.1"]) == 0
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "exp"), "--quiet"]) == 0
    assert (tmp_path / "exp" / "summary.csv").exists()
