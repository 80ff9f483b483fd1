"""Common container for filter output time series.

Every filtering backend (grid solver, normalized grid solver, particle
filter, Kalman oracle) reports the same core columns per time node: the
normalized mean, the normalized covariance, and the log of the mass
estimate for the unnormalized filter.  Method-specific extras (raw mass,
predicted observation drift, effective sample size) ride along in `extras`
keyed by column name.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import TimeGrid


@dataclass(eq=False)
class EstimateSeries:
    method: str
    time_grid: TimeGrid
    mean: np.ndarray
    cov: np.ndarray
    log_mass: np.ndarray
    extras: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        K = self.time_grid.steps
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        self.log_mass = np.asarray(self.log_mass, dtype=float)
        if self.mean.ndim == 1:
            self.mean = self.mean[:, None]
        m = self.mean.shape[1]
        if self.cov.ndim == 1:
            self.cov = self.cov.reshape(-1, 1, 1)
        if self.mean.shape != (K + 1, m) or self.cov.shape != (K + 1, m, m):
            raise ValueError("estimate series shapes do not match the time grid")
        if self.log_mass.shape != (K + 1,):
            raise ValueError("log_mass must have one entry per node")

    @property
    def t(self) -> np.ndarray:
        return self.time_grid.nodes

    @property
    def dim(self) -> int:
        return self.mean.shape[1]

    def columns(self) -> dict:
        """Flat column dict in canonical order, ready for CSV."""
        m = self.dim
        cols = {"t": self.t}
        for i in range(m):
            cols[f"mean_{i + 1}"] = self.mean[:, i]
        for i in range(m):
            for j in range(i, m):
                cols[f"cov_{i + 1}{j + 1}"] = self.cov[:, i, j]
        cols["log_mass"] = self.log_mass
        for name, arr in self.extras.items():
            arr = np.asarray(arr)
            if arr.ndim == 1:
                cols[name] = arr
            else:
                for i in range(arr.shape[1]):
                    cols[f"{name}_{i + 1}"] = arr[:, i]
        return cols
