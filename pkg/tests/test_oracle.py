import numpy as np
import pytest
from dataclasses import replace

from bvfilter import (
    ConstantDiffusion,
    ConstantGamma,
    GaussianMixture,
    LinearDrift,
    LinearObservation,
    RngStream,
    Scenario,
    TimeGrid,
    kalman_jump_identity_check,
    kalman_run,
    simulate_observation_reference,
)
from bvfilter.checks import nonlinear_scenario


def linear_scenario(A=0.0, H=1.0, g=0.0, steps=10_000, T=10.0, jumps=(), knots=()):
    return Scenario(
        m=1, n=1, d=1,
        time_grid=TimeGrid(T, steps),
        b=LinearDrift([[A]], [0.0]),
        sigma=ConstantDiffusion([[1.0]]),
        h=LinearObservation([[H]], [g]),
        gamma=ConstantGamma([[1.0]]),
        xi=GaussianMixture.single([0.2], [[0.3]]),
        nu_jumps=jumps, nu_knots=knots, fuel=5.0, delta=1e-6,
    )


def reference_y(s, seed=3):
    y, bbar = simulate_observation_reference(s, RngStream(seed).generator("obs"))
    return y, bbar


class TestRiccati:
    def test_steady_state_unit(self):
        # A=0, sigma=1, H=1: stationary variance solves 1 - P^2 = 0
        s = linear_scenario(A=0.0, H=1.0)
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        assert result.cov[-1, 0, 0] == pytest.approx(1.0, abs=1e-8)

    def test_steady_state_mean_reverting(self):
        # A=-1: 0 = -2P + 1 - P^2 -> P = sqrt(2) - 1
        s = linear_scenario(A=-1.0, H=1.0)
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        assert result.cov[-1, 0, 0] == pytest.approx(np.sqrt(2.0) - 1.0, abs=1e-10)

    def test_unobserved_variance_recursion(self):
        # H=0 decouples the gain; the discrete recursion is reproduced exactly
        s = linear_scenario(A=-0.5, H=0.0, steps=100, T=1.0)
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        P, dt = 0.3, 0.01
        for _ in range(100):
            P = P + dt * (2 * (-0.5) * P + 1.0)
        assert result.cov[-1, 0, 0] == pytest.approx(P, abs=1e-14)

    def test_covariance_stays_psd(self):
        s = linear_scenario(A=-1.0, H=2.0, steps=2000, T=2.0)
        y, _ = reference_y(s, seed=11)
        result = kalman_run(s, y)
        assert np.all(result.cov[:, 0, 0] >= 0.0)


class TestSteering:
    def test_jump_leaves_covariance_unchanged(self):
        s = linear_scenario(A=-1.0, H=1.0, steps=1000, T=1.0,
                            jumps=((0.4, [0.8]),),
                            knots=((0.0, [0.0]), (1.0, [0.3])))
        y, _ = reference_y(s, seed=5)
        result = kalman_run(s, y)
        assert kalman_jump_identity_check(result) == 0.0

    def test_jump_shifts_mean_by_jump_size(self):
        jumps = ((0.4, [0.8]),)
        s_jump = linear_scenario(A=-1.0, H=1.0, steps=1000, T=1.0, jumps=jumps)
        s_flat = linear_scenario(A=-1.0, H=1.0, steps=1000, T=1.0)
        y, _ = reference_y(s_jump, seed=5)
        r_jump = kalman_run(s_jump, y)
        r_flat = kalman_run(s_flat, y)
        k = s_jump.time_grid.index_of(0.4)
        np.testing.assert_allclose(r_jump.mean[:k, 0], r_flat.mean[:k, 0], atol=0)
        assert r_jump.mean[k, 0] - r_flat.mean[k, 0] == pytest.approx(0.8, abs=1e-12)

    def test_continuous_steering_moves_unobserved_mean(self):
        # H=0: mean recursion m' = m + dt A m + d nu, reproduced exactly
        s = linear_scenario(A=-0.5, H=0.0, steps=100, T=1.0,
                            knots=((0.0, [0.0]), (1.0, [0.5])))
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        m, dt = 0.2, 0.01
        for k in range(100):
            m = m + dt * (-0.5) * m + 0.005
        assert result.mean[-1, 0] == pytest.approx(m, abs=1e-13)


class TestMass:
    def test_constant_observation_closed_form(self):
        # h = g: log mass_T = g B_T - g^2 T / 2
        s = linear_scenario(A=0.0, H=0.0, g=0.8, steps=500, T=1.0)
        y, bbar = reference_y(s, seed=7)
        result = kalman_run(s, y)
        expected = 0.8 * bbar[:, 0].sum() - 0.5 * 0.64
        assert result.log_mass[-1] == pytest.approx(expected, abs=1e-12)

    def test_predicted_observation_extra(self):
        s = linear_scenario(A=-1.0, H=1.0, steps=200, T=1.0)
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        np.testing.assert_allclose(result.extras["pi_h"][:, 0], result.mean[:, 0],
                                   atol=1e-14)


class TestContract:
    def test_nonlinear_scenario_rejected(self):
        s = nonlinear_scenario(steps=100)
        y = np.zeros((101, 1))
        with pytest.raises(ValueError):
            kalman_run(s, y)

    def test_observation_shape_enforced(self):
        s = linear_scenario(steps=100, T=1.0)
        with pytest.raises(Exception):
            kalman_run(s, np.zeros((5, 1)))

    def test_method_tag_and_diagnostics(self):
        s = linear_scenario(steps=100, T=1.0)
        y, _ = reference_y(s)
        result = kalman_run(s, y)
        assert result.method == "kalman"
        assert "max_jump_cov_change" in result.diagnostics
