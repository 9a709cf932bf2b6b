import math

import numpy as np
import pytest

import quadfdi


def short_config(horizon=2.0):
    cfg = quadfdi.ScenarioConfig()
    cfg.fixed_thresholds = True
    cfg.warmup = 2.0
    cfg.horizon = horizon
    return cfg


def test_config_round_trip():
    cfg = quadfdi.ScenarioConfig()
    again = quadfdi.ScenarioConfig.parse(cfg.emit())
    assert again == cfg
    assert again.fingerprint() == cfg.fingerprint()
    assert cfg.dt == pytest.approx(1e-3)
    assert np.allclose(cfg.ramp_slope, [0.05, 0.0, 0.0])


def test_invalid_config_raises_validation_error():
    cfg = quadfdi.ScenarioConfig()
    cfg.horizon = -1.0
    with pytest.raises(quadfdi.ValidationError):
        cfg.validate()
    with pytest.raises(quadfdi.ParseError):
        quadfdi.ScenarioConfig.parse("[nonsense]\nkey = 1\n")


def test_run_arrays_and_determinism():
    cfg = short_config()
    a = quadfdi.run_scenario(cfg, seed=5)
    b = quadfdi.run_scenario(cfg, seed=5)
    n = cfg.horizon_steps
    assert a["state"].shape == (n, 12)
    assert a["estimate"].shape == (n, 12)
    assert a["gps"].shape == (n, 3)
    assert np.array_equal(a["state"], b["state"])
    ticks = ~np.isnan(a["gps"][:, 0])
    assert ticks.sum() == n // 200
    assert set(np.unique(a["dof"])) == {6, 9}
    assert np.all(a["dof"][ticks] == 9)


def test_unresolved_thresholds_are_rejected():
    cfg = short_config()
    cfg.fixed_thresholds = False
    with pytest.raises(quadfdi.ValidationError):
        quadfdi.run_scenario(cfg, seed=1)


def test_ramp_deviation_grows_with_time():
    cfg = short_config(horizon=5.0)
    d = quadfdi.deviation(cfg, seed=3)
    assert d[0] == 0.0
    assert d[-1] > d[len(d) // 2] > 0.0


def test_fake_replay_without_drag_is_exact():
    cfg = short_config(horizon=1.0)
    cfg.drag_enabled = False
    assert quadfdi.fake_replay(cfg, seed=2) < 1e-9
    cfg.drag_enabled = True
    cfg.horizon = 5.0
    with pytest.raises(quadfdi.ReplayMismatch):
        quadfdi.fake_replay(cfg, seed=2)


def test_stealth_bound_scaling():
    imu = np.eye(6)
    gps = np.eye(3)
    b1 = quadfdi.stealth_bound(2.0, 1.1, 1.0, 1.0, 1.0, 1e-3, 200, imu, gps, [0.05, 0, 0])
    b2 = quadfdi.stealth_bound(2.0, 1.1, 1.0, 1.0, 1.0, 1e-3, 200, imu, gps, [0.1, 0, 0])
    assert b2["b_epsilon"] / b1["b_epsilon"] == pytest.approx(4.0, abs=1e-12)
    assert b1["epsilon"] == pytest.approx(math.sqrt(1.0 - math.exp(-b1["b_epsilon"])))
    with pytest.raises(quadfdi.DivergentBound):
        quadfdi.stealth_bound(2.0, 1.0, 1.0, 1.0, 1.0, 1e-3, 200, imu, gps, [0.05, 0, 0])


def test_small_monte_carlo():
    cfg = short_config(horizon=1.0)
    mc = quadfdi.monte_carlo(cfg, runs=3, base_seed=1, threads=1)
    assert mc["completed"] == 3
    assert mc["chi2"]["false_alarm"]["rate"].shape == (cfg.horizon_steps,)
    assert mc["deviation_mean"][0] == 0.0
