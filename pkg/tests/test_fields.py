import numpy as np
import pytest

from bvfilter import DensityField, SpatialGrid, density_cov, density_mean


def gaussian_1d(grid, mu, var):
    x = grid.axes[0]
    return np.exp(-((x - mu) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)


class TestMoments:
    def test_gaussian_mean_cov(self):
        grid = SpatialGrid((-10.0,), (10.0,), (801,))
        p = gaussian_1d(grid, 0.7, 1.3)
        assert density_mean(grid, p)[0] == pytest.approx(0.7, abs=1e-10)
        assert density_cov(grid, p)[0, 0] == pytest.approx(1.3, abs=1e-9)

    def test_gaussian_2d_moments(self):
        grid = SpatialGrid((-8.0, -8.0), (8.0, 8.0), (161, 161))
        mesh = grid.mesh()
        mu = np.array([0.5, -0.25])
        var = np.array([0.8, 1.1])
        z = mesh - mu
        p = np.exp(-0.5 * (z[..., 0] ** 2 / var[0] + z[..., 1] ** 2 / var[1]))
        p /= 2 * np.pi * np.sqrt(var[0] * var[1])
        np.testing.assert_allclose(density_mean(grid, p), mu, atol=1e-9)
        cov = density_cov(grid, p)
        np.testing.assert_allclose(np.diag(cov), var, atol=1e-8)
        assert abs(cov[0, 1]) < 1e-9

    def test_unnormalized_moments_scale_invariant(self):
        grid = SpatialGrid((-10.0,), (10.0,), (801,))
        p = 0.37 * gaussian_1d(grid, -0.4, 0.9)
        assert density_mean(grid, p)[0] == pytest.approx(-0.4, abs=1e-10)
        assert density_cov(grid, p)[0, 0] == pytest.approx(0.9, abs=1e-9)


class TestDensityField:
    def test_properties(self):
        grid = SpatialGrid((-10.0,), (10.0,), (801,))
        field = DensityField(grid, 2.0 * gaussian_1d(grid, 0.0, 1.0), t=0.25)
        assert field.mass() == pytest.approx(2.0, abs=1e-10)
        normalized = field.normalized()
        assert normalized.mass() == pytest.approx(1.0, abs=1e-12)
        assert normalized.t == 0.25

    def test_expectation_vector_function(self):
        grid = SpatialGrid((-10.0,), (10.0,), (801,))
        field = DensityField(grid, gaussian_1d(grid, 0.3, 1.0))
        x = grid.axes[0]
        vals = np.stack([x, x**2], axis=-1)
        ex = field.expectation(vals)
        assert ex[0] == pytest.approx(0.3, abs=1e-10)
        assert ex[1] == pytest.approx(1.09, abs=1e-9)

    def test_shape_mismatch_rejected(self):
        grid = SpatialGrid((-1.0,), (1.0,), (11,))
        with pytest.raises(ValueError):
            DensityField(grid, np.ones(7))
