"""Path simulation: signal, observations under both measures, likelihood.

The signal follows dX = b dt + sigma dW + d(nu) with Euler-Maruyama steps;
jumps of nu are applied after the step at their node, so both the pre-jump
and post-jump states are available.  Observations come in two flavours:
under the reference measure Y is pure scaled noise, dY = gamma dBbar, while
under the physical measure dY = h(t, X) dt + gamma dB.  The exponential
change-of-measure density eta linking the two is accumulated in the log
domain with left-point increments, so eta_0 = 1 and

    log eta_{k+1} = log eta_k + (gamma^-1 h)(t_k, X_k) . dBbar_k
                    - 0.5 |gamma^-1 h|^2 (t_k, X_k) dt.

All samplers accept an optional leading batch of independent paths.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationError
from .scenario import Scenario


@dataclass(frozen=True)
class RngStream:
    """Reproducible, independent generator streams from one root seed.

    Streams are addressed by a key of ints and/or short labels; the same
    (seed, key) always yields the same generator, and distinct keys give
    statistically independent streams.
    """

    seed: int
    key: tuple = ()

    def _as_ints(self, key) -> tuple:
        out = []
        for part in key:
            if isinstance(part, str):
                out.append(zlib.crc32(part.encode()))
            else:
                out.append(int(part))
        return tuple(out)

    def child(self, *key) -> "RngStream":
        return RngStream(self.seed, self.key + self._as_ints(key))

    def generator(self, *key) -> np.random.Generator:
        full = self.key + self._as_ints(key)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=full))


def _diffusion_term(sigma_val: np.ndarray, dw: np.ndarray) -> np.ndarray:
    sigma_val = np.asarray(sigma_val, dtype=float)
    if sigma_val.ndim == 2:
        return np.einsum("ij,...j->...i", sigma_val, dw)
    return np.einsum("...ij,...j->...i", sigma_val, dw)


def _gamma_solve(gamma_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """gamma^-1 applied to vectors of shape (..., n)."""
    return np.linalg.solve(gamma_mat, rhs[..., None])[..., 0]


def simulate_signal(s: Scenario, rng: np.random.Generator, paths: int | None = None):
    """Sample the signal on the scenario's time grid.

    Returns (X, X_pre, W_inc).  X holds post-jump states at the nodes,
    X_pre the pre-jump states (they differ only at jump nodes; X_pre[0] is
    the draw from xi before any initial displacement).  Shapes are
    (steps+1, m) / (steps, d), with a leading `paths` axis when batched.
    """
    s.require_valid()
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    batch = () if paths is None else (int(paths),)
    nsamp = 1 if paths is None else int(paths)

    x_pre = np.empty(batch + (K + 1, s.m))
    x = np.empty(batch + (K + 1, s.m))
    w_inc = rng.standard_normal(batch + (K, s.d)) * np.sqrt(dt)

    draw = s.xi.sample(rng, nsamp)
    x_pre[..., 0, :] = draw if paths is not None else draw[0]
    jump0 = s.nu.jump_at(0)
    x[..., 0, :] = x_pre[..., 0, :] + (jump0 if jump0 is not None else 0.0)

    nodes = tg.nodes
    for k in range(K):
        t = nodes[k]
        xk = x[..., k, :]
        dc, jump = s.nu.increment(k)
        step = xk + s.b(t, xk) * dt + _diffusion_term(s.sigma(t, xk), w_inc[..., k, :]) + dc
        x_pre[..., k + 1, :] = step
        x[..., k + 1, :] = step + (jump if jump is not None else 0.0)
        if not np.all(np.isfinite(step)):
            raise SimulationError(f"signal left the representable range at step {k + 1} (t={nodes[k+1]:.6g})")
    return x, x_pre, w_inc


def simulate_observation_reference(s: Scenario, rng: np.random.Generator, paths: int | None = None):
    """Observation under the reference measure: dY = gamma dBbar.

    Returns (Y, Bbar_inc) with Y of shape (steps+1, n) (batched with a
    leading axis when `paths` is given).
    """
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    batch = () if paths is None else (int(paths),)
    bbar_inc = rng.standard_normal(batch + (K, s.n)) * np.sqrt(dt)
    y = np.empty(batch + (K + 1, s.n))
    y[..., 0, :] = s.y0
    nodes = tg.nodes
    for k in range(K):
        g = np.asarray(s.gamma(nodes[k]), dtype=float)
        y[..., k + 1, :] = y[..., k, :] + bbar_inc[..., k, :] @ g.T
    return y, bbar_inc


def simulate_observation_physical(s: Scenario, x_path: np.ndarray, rng: np.random.Generator):
    """Observation driven by a signal path: dY = h(t, X) dt + gamma dB.

    `x_path` must be sampled on the scenario's grid, shape (..., steps+1, m).
    Returns (Y, B_inc) with matching batch shape.
    """
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    x_path = np.asarray(x_path, dtype=float)
    if x_path.shape[-2] != K + 1 or x_path.shape[-1] != s.m:
        raise ValueError(
            f"signal path shape {x_path.shape} does not match grid "
            f"({K + 1} nodes) and state dimension {s.m}"
        )
    batch = x_path.shape[:-2]
    b_inc = rng.standard_normal(batch + (K, s.n)) * np.sqrt(dt)
    y = np.empty(batch + (K + 1, s.n))
    y[..., 0, :] = s.y0
    nodes = tg.nodes
    for k in range(K):
        g = np.asarray(s.gamma(nodes[k]), dtype=float)
        drift = s.h(nodes[k], x_path[..., k, :]) * dt
        y[..., k + 1, :] = y[..., k, :] + drift + b_inc[..., k, :] @ g.T
    return y, b_inc


def girsanov_log_density(s: Scenario, x_path: np.ndarray, bbar_inc: np.ndarray) -> np.ndarray:
    """Log of the measure-change density eta along a path, shape (..., steps+1).

    Left-point quadrature: the increment over [t_k, t_{k+1}] uses the
    post-jump state at t_k.  log eta[0] = 0.
    """
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    x_path = np.asarray(x_path, dtype=float)
    bbar_inc = np.asarray(bbar_inc, dtype=float)
    if x_path.shape[-2] != K + 1 or bbar_inc.shape[-2] != K:
        raise ValueError("path arrays do not match the scenario time grid")
    out = np.zeros(x_path.shape[:-2] + (K + 1,))
    nodes = tg.nodes
    for k in range(K):
        g = np.asarray(s.gamma(nodes[k]), dtype=float)
        c = _gamma_solve(g, np.asarray(s.h(nodes[k], x_path[..., k, :]), dtype=float))
        inc = np.einsum("...i,...i->...", c, bbar_inc[..., k, :])
        out[..., k + 1] = out[..., k] + inc - 0.5 * np.einsum("...i,...i->...", c, c) * dt
    if not np.all(np.isfinite(out[..., -1])):
        raise SimulationError("log eta overflowed along a path")
    return out


@dataclass
class PathBundle:
    """One joint draw of signal, observation, noise and likelihood."""

    scenario: Scenario
    x: np.ndarray
    x_pre: np.ndarray
    y: np.ndarray
    w_inc: np.ndarray
    bbar_inc: np.ndarray
    log_eta: np.ndarray
    measure: str


def sample_bundle(s: Scenario, rng_signal, rng_obs, measure: str = "physical") -> PathBundle:
    """Draw a consistent (X, Y, eta) triple under the requested measure.

    Under "reference", Y is independent scaled noise and Bbar is its driving
    Brownian motion.  Under "physical", Y feels the signal through h and the
    implied Bbar increments are gamma^-1 dY.
    """
    if measure not in ("physical", "reference"):
        raise ValueError(f"measure must be 'physical' or 'reference', got {measure!r}")
    x, x_pre, w_inc = simulate_signal(s, rng_signal)
    tg = s.time_grid
    if measure == "reference":
        y, bbar_inc = simulate_observation_reference(s, rng_obs)
    else:
        y, _ = simulate_observation_physical(s, x, rng_obs)
        dy = np.diff(y, axis=-2)
        bbar_inc = np.empty_like(dy)
        for k in range(tg.steps):
            g = np.asarray(s.gamma(tg.nodes[k]), dtype=float)
            bbar_inc[..., k, :] = _gamma_solve(g, dy[..., k, :])
    log_eta = girsanov_log_density(s, x, bbar_inc)
    return PathBundle(s, x, x_pre, y, w_inc, bbar_inc, log_eta, measure)
