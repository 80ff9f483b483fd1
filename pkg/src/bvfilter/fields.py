"""Grid densities and their trapezoidal moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import SpatialGrid


@dataclass
class DensityField:
    """Nonnegative grid function representing an (unnormalized) density."""

    grid: SpatialGrid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def mass(self) -> float:
        return self.grid.integrate(self.values)

    def mean(self) -> np.ndarray:
        return density_mean(self.grid, self.values)

    def cov(self) -> np.ndarray:
        return density_cov(self.grid, self.values)

    def expectation(self, fn_values: np.ndarray) -> np.ndarray:
        """Normalized expectation of a grid-sampled function.

        `fn_values` has shape `grid.shape` or `grid.shape + (n,)`.
        """
        w = self.grid.trapezoid_weights() * self.values
        mass = np.sum(w)
        fn_values = np.asarray(fn_values, dtype=float)
        if fn_values.shape == self.grid.shape:
            return np.sum(w * fn_values) / mass
        return np.tensordot(w, fn_values, axes=self.grid.ndim) / mass

    def normalized(self) -> "DensityField":
        return DensityField(self.grid, self.values / self.mass(), self.t)


def density_mean(grid: SpatialGrid, values: np.ndarray) -> np.ndarray:
    w = grid.trapezoid_weights() * values
    mass = np.sum(w)
    mesh = grid.mesh()
    return np.tensordot(w, mesh, axes=grid.ndim) / mass


def density_cov(grid: SpatialGrid, values: np.ndarray) -> np.ndarray:
    w = grid.trapezoid_weights() * values
    mass = np.sum(w)
    mesh = grid.mesh()
    mean = np.tensordot(w, mesh, axes=grid.ndim) / mass
    centered = mesh - mean
    outer = centered[..., :, None] * centered[..., None, :]
    return np.tensordot(w, outer, axes=grid.ndim) / mass
