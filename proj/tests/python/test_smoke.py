import math

import numpy as np
import pytest

import anthracnose as an

A = 0.5 * math.log(10.0)


def test_default_config_round_trip():
    cfg = an.default_config()
    assert cfg["sigma"] == "0.3"
    assert an.simulate(cfg)["model"] == "averaged"


def test_alpha_profile_matches_formula():
    t, alpha = an.alpha_profile()
    assert t.shape == (1041,)
    assert alpha.shape == (1041, 1)
    expected = A * (t - 0.75) ** 2 * (1.0 - np.cos(2.0 * np.pi * t / 0.2))
    np.testing.assert_allclose(alpha[:, 0], expected, rtol=1e-12, atol=1e-15)


def test_simulate_without_pulses_stays_in_unit_interval():
    res = an.simulate({"pulse.v": 1})
    theta = res["theta"]
    assert theta.shape == (1041,)
    assert theta[0] == pytest.approx(0.4)
    assert np.all((theta >= 0.0) & (theta <= 1.0))
    assert np.all(np.diff(theta) >= -1e-15)
    assert res["cost"]["pulse"] == 0.0


def test_explicit_pulses_reduce_damage():
    free = an.simulate()
    cut = an.simulate(pulses=[0.5] * 51)
    assert cut["theta"][-1] < free["theta"][-1]
    assert cut["pulses_realized"] == 51
    with pytest.raises(ValueError):
        an.simulate(pulses=[1.5] * 51)


def test_uniform_pde_matches_averaged():
    cfg = {"grid": "3x2x2", "T": "10/52"}
    field = an.simulate({**cfg, "model": "pde"}, pulses=[0.5] * 9)
    scalar = an.simulate(cfg, pulses=[0.5] * 9)
    np.testing.assert_allclose(field["theta"], scalar["theta"], atol=1e-8)
    np.testing.assert_allclose(field["theta_min"], field["theta_max"], atol=1e-12)


def test_optimize_pulse_sets_shrink_with_cost():
    counts = [an.optimize_pulse({"cost.pulse": c})["intervention_count"] for c in (0.25, 0.4, 0.5)]
    assert counts[0] > counts[1] > counts[2]
    r = an.optimize_pulse({"cost.pulse": 0.4})
    assert r["certificate_ok"]
    assert set(np.unique(r["pulses"])) <= {0.0, 1.0}


def test_brute_force_agrees_with_sweep():
    cfg = {"T": "10/52", "cost.pulse": 0.02, "cost.final": 0.5}
    brute = an.brute_force(cfg, interior_samples=50)
    sweep = an.optimize_pulse(cfg)
    assert brute["evaluated"] == 512
    assert abs(brute["cost"]["total"] - sweep["cost"]["total"]) <= 1e-10
    assert brute["best_interior_cost"] >= sweep["cost"]["total"]


def test_mixed_descends():
    r = an.optimize_mixed({"cost.control": 0.002})
    history = r["cost_history"]
    assert np.all(np.diff(history) <= 0.0)
    assert r["iterations"] <= 200
    assert r["switching_agreement"] >= 0.99
    assert r["control"].shape == (1040, 1)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError, match="sigma"):
        an.simulate({"sigma": 2})
    with pytest.raises(ValueError):
        an.simulate({"no.such.key": 1})
    assert issubclass(an.ValidationError, ValueError)
    assert issubclass(an.SolverError, RuntimeError)


def test_run_and_cli(tmp_path):
    code, log = an.run("gradient-check", None, tmp_path / "grad")
    assert code == 0
    assert "max relative error" in log
    assert (tmp_path / "grad" / "gradient_check.csv").exists()
    assert an.run_cli(["no-such-command"]) == 64
    assert an.run_cli(["preset", "fig2", "--out", str(tmp_path)]) == 0
    assert {p["name"] for p in an.presets()} >= {"fig1", "fig2", "fig7", "mixed"}
