"""Weighted particle filter for the same model as the grid solver.

Particles carry unnormalized log weights; the running product of mean
weights is kept as a separate log-mass offset so the terminal mass
estimate survives resampling unchanged.  Weight updates mirror the
likelihood increments of the measure change: with c = gamma^-1 h evaluated
at the pre-propagation positions,

    log w += c . (gamma^-1 dY) - 0.5 |c|^2 dt.

Resampling is systematic, triggered when the effective sample size drops
below a fraction of the particle count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FilterCollapseError, GridMismatchError
from .results import EstimateSeries
from .scenario import Scenario
from .simulate import RngStream, _diffusion_term


def log_sum_exp(values: np.ndarray) -> float:
    m = float(np.max(values))
    if not np.isfinite(m):
        return -np.inf
    return m + float(np.log(np.sum(np.exp(values - m))))


@dataclass(eq=False)
class ParticleCloud:
    positions: np.ndarray
    log_weights: np.ndarray
    log_mass_offset: float = 0.0

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if len(self.log_weights) != len(self.positions):
            raise ValueError("one log weight per particle required")

    @property
    def size(self) -> int:
        return len(self.positions)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def normalized_weights(self) -> np.ndarray:
        m = np.max(self.log_weights)
        if not np.isfinite(m):
            raise FilterCollapseError("all particle weights vanished")
        w = np.exp(self.log_weights - m)
        return w / w.sum()

    def ess(self) -> float:
        w = self.normalized_weights()
        return 1.0 / float(w @ w)

    def log_mass(self) -> float:
        n = self.size
        return self.log_mass_offset + (log_sum_exp(self.log_weights) - np.log(float(n)))


def pf_init(s: Scenario, rng: np.random.Generator, n_particles: int) -> ParticleCloud:
    """Draw particles from the initial law and apply the initial jump."""
    s.require_valid()
    x = s.xi.sample(rng, int(n_particles))
    jump0 = s.nu.jump_at(0)
    if jump0 is not None:
        x = x + jump0
    return ParticleCloud(x, np.zeros(len(x)), 0.0)


def pf_step(
    s: Scenario,
    cloud: ParticleCloud,
    k: int,
    dy: np.ndarray,
    rng: np.random.Generator,
) -> ParticleCloud:
    """Advance one cell: weight with the observation, then propagate.

    The weight increment uses h at the node-k positions (left point); the
    particles then take an Euler step with fresh noise, the continuous
    steering increment, and the jump at node k+1 if there is one.
    """
    tg = s.time_grid
    t, dt = tg.nodes[k], tg.dt
    x = cloud.positions
    g = np.asarray(s.gamma(t), dtype=float)
    ginv = np.linalg.inv(g)
    c = np.asarray(s.h(t, x), dtype=float) @ ginv.T
    dbar = ginv @ np.asarray(dy, dtype=float)
    lw = cloud.log_weights + (c @ dbar - 0.5 * dt * np.einsum("ni,ni->n", c, c))

    dw = rng.standard_normal((cloud.size, s.d)) * np.sqrt(dt)
    dc, jump = s.nu.increment(k)
    x = x + s.b(t, x) * dt + _diffusion_term(s.sigma(t, x), dw) + dc
    if jump is not None:
        x = x + jump
    return ParticleCloud(x, lw, cloud.log_mass_offset)


def pf_resample(
    cloud: ParticleCloud, rng: np.random.Generator, threshold: float = 0.5
):
    """Systematic resampling when ESS / N falls below `threshold`.

    Returns (cloud, resampled).  The log-mass offset absorbs the mean
    weight, so the mass estimate is unchanged by resampling.
    """
    n = cloud.size
    w = cloud.normalized_weights()
    ess = 1.0 / float(w @ w)
    if ess / n >= threshold:
        return cloud, False
    new_offset = cloud.log_mass_offset + (log_sum_exp(cloud.log_weights) - np.log(float(n)))
    u0 = rng.uniform()
    pts = (u0 + np.arange(n)) / n
    idx = np.minimum(np.searchsorted(np.cumsum(w), pts), n - 1)
    return ParticleCloud(cloud.positions[idx].copy(), np.zeros(n), new_offset), True


def pf_estimate(cloud: ParticleCloud):
    """Weighted mean, covariance, log mass, and effective sample size."""
    w = cloud.normalized_weights()
    mean = w @ cloud.positions
    centered = cloud.positions - mean
    cov = np.einsum("n,ni,nj->ij", w, centered, centered)
    return mean, cov, cloud.log_mass(), 1.0 / float(w @ w)


def run_pf(
    s: Scenario,
    y_path: np.ndarray,
    rng,
    n_particles: int,
    resample_threshold: float = 0.5,
) -> EstimateSeries:
    """Filter a full observation path.

    `rng` may be an RngStream (separate init / propagation / resampling
    streams) or a plain generator used for everything.
    """
    tg = s.time_grid
    K = tg.steps
    y_path = np.asarray(y_path, dtype=float)
    if y_path.shape != (K + 1, s.n):
        raise GridMismatchError(
            f"observation path shape {y_path.shape}, expected ({K + 1}, {s.n})"
        )
    if isinstance(rng, RngStream):
        rng_init = rng.generator("pf-init")
        rng_prop = rng.generator("pf-prop")
        rng_res = rng.generator("pf-resample")
    else:
        rng_init = rng_prop = rng_res = rng

    cloud = pf_init(s, rng_init, n_particles)
    mean = np.empty((K + 1, s.m))
    cov = np.empty((K + 1, s.m, s.m))
    log_mass = np.empty(K + 1)
    ess = np.empty(K + 1)
    mean[0], cov[0], log_mass[0], ess[0] = pf_estimate(cloud)
    for k in range(K):
        cloud = pf_step(s, cloud, k, y_path[k + 1] - y_path[k], rng_prop)
        cloud, _ = pf_resample(cloud, rng_res, resample_threshold)
        mean[k + 1], cov[k + 1], log_mass[k + 1], ess[k + 1] = pf_estimate(cloud)
    return EstimateSeries(
        method="particle",
        time_grid=tg,
        mean=mean,
        cov=cov,
        log_mass=log_mass,
        extras={"ess": ess},
    )
