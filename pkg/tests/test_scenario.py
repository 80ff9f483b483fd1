import json
from dataclasses import replace

import numpy as np
import pytest

from bvfilter import (
    ConstantDiffusion,
    ConstantGamma,
    CubicClipDrift,
    GaussianMixture,
    GridDensity,
    LinearDrift,
    LinearObservation,
    Scenario,
    ScenarioValidationError,
    SpatialGrid,
    TanhObservation,
    TimeGrid,
    scenario_from_config,
    validate_scenario,
    zero_observation,
)
from bvfilter.checks import lg_tracking_scenario, nonlinear_scenario


class TestCoefficients:
    def test_linear_drift_batch(self):
        b = LinearDrift([[-2.0, 0.0], [0.0, -1.0]], [0.5, 0.0])
        x = np.array([[1.0, 2.0], [0.0, 1.0]])
        out = b(0.0, x)
        np.testing.assert_allclose(out, [[-1.5, -2.0], [0.5, -1.0]])

    def test_cubic_clip_saturates(self):
        b = CubicClipDrift(8.0)
        x = np.array([[0.5], [3.0], [-3.0]])
        out = b(0.0, x)
        np.testing.assert_allclose(out[:, 0], [-0.125, -8.0, 8.0])

    def test_tanh_observation(self):
        h = TanhObservation(scale=2.0)
        out = h(0.0, np.array([[0.5]]))
        assert out[0, 0] == pytest.approx(2.0 * np.tanh(0.5))

    def test_zero_observation_shape(self):
        h = zero_observation(2, 1)
        out = h(0.0, np.zeros((7, 1)))
        assert out.shape == (7, 2)
        assert np.all(out == 0.0)


class TestGaussianMixture:
    def test_moments_single(self):
        xi = GaussianMixture.single([1.0, -1.0], [[2.0, 0.3], [0.3, 1.0]])
        np.testing.assert_allclose(xi.mean(), [1.0, -1.0])
        np.testing.assert_allclose(xi.cov(), [[2.0, 0.3], [0.3, 1.0]])

    def test_moments_two_components(self):
        # mixture mean = 0.5*(-1) + 0.5*(+1) = 0; cov = within + between = 0.5 + 1
        xi = GaussianMixture([0.5, 0.5], [[-1.0], [1.0]], [[[0.5]], [[0.5]]])
        assert xi.mean()[0] == pytest.approx(0.0)
        assert xi.cov()[0, 0] == pytest.approx(1.5)

    def test_sampling_matches_moments(self):
        xi = GaussianMixture([0.3, 0.7], [[-2.0], [1.0]], [[[0.4]], [[0.9]]])
        rng = np.random.default_rng(5)
        draws = xi.sample(rng, 200_000)
        assert draws.shape == (200_000, 1)
        assert draws.mean() == pytest.approx(xi.mean()[0], abs=0.02)
        assert draws.var() == pytest.approx(xi.cov()[0, 0], abs=0.05)

    def test_density_integrates_to_one(self):
        xi = GaussianMixture([0.4, 0.6], [[-1.0], [2.0]], [[[0.5]], [[1.5]]])
        grid = SpatialGrid((-12.0,), (12.0,), (1001,))
        vals = xi.density(grid.mesh())
        assert grid.integrate(vals) == pytest.approx(1.0, abs=1e-10)

    def test_non_psd_cov_rejected(self):
        with pytest.raises(np.linalg.LinAlgError):
            GaussianMixture.single([0.0], [[-1.0]])


class TestGridDensity:
    def test_normalizes_and_samples(self):
        grid = SpatialGrid((-5.0,), (5.0,), (201,))
        vals = np.exp(-grid.axes[0] ** 2)
        gd = GridDensity(grid, 3.0 * vals)
        assert grid.integrate(gd.density_on(grid)) == pytest.approx(1.0, abs=1e-12)
        rng = np.random.default_rng(11)
        draws = gd.sample(rng, 100_000)
        assert draws.mean() == pytest.approx(0.0, abs=0.01)
        assert draws.var() == pytest.approx(0.5, abs=0.01)


def lg_config(**overrides):
    cfg = {
        "label": "cfg-demo",
        "dims": {"m": 1, "n": 1, "d": 1},
        "horizon": 1.0,
        "steps": 100,
        "grid": {"lo": [-10.0], "hi": [10.0], "nodes": [128]},
        "coeffs": {
            "b": {"name": "linear", "A": [[-1.0]], "c": [0.0]},
            "sigma": {"name": "constant", "matrix": [[1.0]]},
            "h": {"name": "linear", "H": [[1.0]], "g": [0.0]},
            "gamma": {"name": "constant", "matrix": [[1.0]]},
        },
        "xi": {"name": "gaussian_mixture",
               "components": [{"weight": 1.0, "mean": [0.0], "cov": [[1.0]]}]},
        "nu": {"jumps": [[0.4, [0.8]]], "continuous": [[0.0, [0.0]], [1.0, [0.3]]]},
        "fuel_K": 2.0,
        "seed": 3,
    }
    cfg.update(overrides)
    return cfg


class TestValidation:
    def test_pinned_scenarios_validate(self):
        assert lg_tracking_scenario().validate().ok
        assert nonlinear_scenario().validate().ok

    def test_fuel_violation_detected(self):
        s = lg_tracking_scenario()
        tight = replace(s, fuel=1.0)
        report = tight.validate()
        assert not report.ok
        assert any(v.code == "fuel" for v in report.violations)

    def test_gamma_degeneracy_detected(self):
        s = lg_tracking_scenario()
        bad = replace(s, gamma=ConstantGamma([[1e-9]]), delta=1e-6)
        report = bad.validate()
        assert any(v.code == "gamma" for v in report.violations)

    def test_bound_violation_detected(self):
        s = lg_tracking_scenario()
        bad = replace(s, K_b=0.5)
        report = bad.validate()
        assert any(v.code == "b" for v in report.violations)

    def test_require_valid_raises(self):
        s = lg_tracking_scenario()
        bad = replace(s, fuel=0.1)
        with pytest.raises(ScenarioValidationError):
            bad.require_valid()

    def test_validate_scenario_function(self):
        assert validate_scenario(lg_tracking_scenario()).ok


class TestLinearModel:
    def test_extraction(self):
        s = lg_tracking_scenario()
        A, c, H, g, Sigma, Gamma, xi_mean, xi_cov = s.linear_model()
        np.testing.assert_allclose(A, [[-1.0]])
        np.testing.assert_allclose(H, [[1.0]])
        np.testing.assert_allclose(Sigma, [[1.0]])
        np.testing.assert_allclose(xi_cov, [[1.0]])

    def test_nonlinear_rejected(self):
        with pytest.raises(ValueError):
            nonlinear_scenario().linear_model()


class TestRegrid:
    def test_preserves_steering(self):
        s = lg_tracking_scenario(steps=1000)
        s2 = s.regrid(steps=500)
        assert s2.time_grid.steps == 500
        assert s2.nu.jump_nodes.tolist() == [200, 350]
        np.testing.assert_allclose(
            s2.nu.values()[-1], s.nu.values()[-1], atol=1e-12)

    def test_rejects_steps_that_miss_jumps(self):
        s = lg_tracking_scenario(steps=1000)
        with pytest.raises(ValueError):
            s.regrid(steps=3)


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = lg_config()
        p = tmp_path / "scenario.json"
        p.write_text(json.dumps(cfg))
        s = scenario_from_config(p)
        assert s.label == "cfg-demo"
        assert s.time_grid.steps == 100
        assert s.space_grid.shape == (128,)
        assert s.fuel == 2.0
        assert s.validate().ok

    def test_dict_input(self):
        s = scenario_from_config(lg_config())
        assert s.m == 1
        assert isinstance(s.b, LinearDrift)

    def test_cubic_and_tanh_presets(self):
        cfg = lg_config()
        cfg["coeffs"]["b"] = {"name": "cubic_clip", "bound": 8.0}
        cfg["coeffs"]["h"] = {"name": "tanh"}
        s = scenario_from_config(cfg)
        assert isinstance(s.b, CubicClipDrift)
        assert isinstance(s.h, TanhObservation)

    def test_grid_density_initial_law(self):
        cfg = lg_config()
        cfg["xi"] = {"name": "grid_density", "values": list(np.ones(128))}
        s = scenario_from_config(cfg)
        assert isinstance(s.xi, GridDensity)

    def test_unknown_preset_rejected(self):
        cfg = lg_config()
        cfg["coeffs"]["b"] = {"name": "quadratic"}
        with pytest.raises(ValueError):
            scenario_from_config(cfg)
