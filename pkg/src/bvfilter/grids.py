"""Uniform time and space grids used by every solver in the package."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, horizon] into `steps` cells.

    Node k sits at k * dt.  All path-valued objects in the package are
    sampled on these nodes, and jump times are snapped onto them.
    """

    horizon: float
    steps: int

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def index_of(self, t: float) -> int:
        """Snap a time to the nearest node and return its index.

        Times more than a relative 1e-9 of one step away from every node
        are rejected rather than silently moved.
        """
        if t < -1e-12 or t > self.horizon * (1.0 + 1e-12):
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        k = int(round(t / self.dt))
        if abs(t - k * self.dt) > 1e-9 * self.dt * max(1.0, abs(k)):
            raise ValueError(f"time {t} does not lie on the grid (dt={self.dt})")
        return k

    def matches(self, other: "TimeGrid") -> bool:
        return self.steps == other.steps and np.isclose(
            self.horizon, other.horizon, rtol=1e-12, atol=0.0
        )

    def require_match(self, other: "TimeGrid") -> None:
        if not self.matches(other):
            raise GridMismatchError(
                f"time grids differ: ({self.horizon}, {self.steps}) vs "
                f"({other.horizon}, {other.steps})"
            )


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform rectangular grid on a box, one or two dimensions.

    `lo`, `hi` and `counts` hold per-axis bounds and node counts.  Grid
    functions are stored as arrays of shape `shape` (row-major, axis 0
    first), and integrals use trapezoidal weights.
    """

    lo: tuple
    hi: tuple
    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        object.__setattr__(self, "counts", tuple(int(v) for v in np.atleast_1d(self.counts)))
        if not (len(self.lo) == len(self.hi) == len(self.counts)):
            raise ValueError("lo, hi, counts must have equal length")
        if self.ndim not in (1, 2):
            raise ValueError(f"grid supports 1 or 2 dimensions, got {self.ndim}")
        for lo, hi, n in zip(self.lo, self.hi, self.counts):
            if not hi > lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
            if n < 3:
                raise ValueError(f"need at least 3 nodes per axis, got {n}")

    @property
    def ndim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def dx(self) -> tuple:
        return tuple(
            (hi - lo) / (n - 1) for lo, hi, n in zip(self.lo, self.hi, self.counts)
        )

    @property
    def axes(self) -> tuple:
        return tuple(
            np.linspace(lo, hi, n) for lo, hi, n in zip(self.lo, self.hi, self.counts)
        )

    def mesh(self) -> np.ndarray:
        """Node coordinates as an array of shape `shape + (ndim,)`."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def trapezoid_weights(self) -> np.ndarray:
        """Per-node quadrature weights, shape `shape`."""
        per_axis = []
        for ax, dx in zip(self.axes, self.dx):
            w = np.full(ax.shape, dx)
            w[0] = w[-1] = 0.5 * dx
            per_axis.append(w)
        if self.ndim == 1:
            return per_axis[0]
        return np.multiply.outer(per_axis[0], per_axis[1])

    def integrate(self, values: np.ndarray) -> float:
        if values.shape != self.shape:
            raise GridMismatchError(
                f"values shape {values.shape} does not match grid {self.shape}"
            )
        return float(np.sum(values * self.trapezoid_weights()))

    def matches(self, other: "SpatialGrid") -> bool:
        return (
            self.counts == other.counts
            and np.allclose(self.lo, other.lo, rtol=1e-12, atol=0.0)
            and np.allclose(self.hi, other.hi, rtol=1e-12, atol=0.0)
        )

    def require_match(self, other: "SpatialGrid") -> None:
        if not self.matches(other):
            raise GridMismatchError(
                f"spatial grids differ: {self.lo}/{self.hi}/{self.counts} vs "
                f"{other.lo}/{other.hi}/{other.counts}"
            )
