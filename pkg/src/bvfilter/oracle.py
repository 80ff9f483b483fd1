"""Closed-form Gaussian filter for linear scenarios, used as a cross-check.

For b = A x + c, h = H x + g, constant sigma and gamma, and Gaussian initial
law, the conditional law stays Gaussian.  Mean and covariance follow the
Kalman-Bucy equations, integrated here with the same Euler step as the
other solvers:

    dm = (A m + c) dt + d nu^c + P H' (gamma gamma')^-1 (dY - (H m + g) dt)
    dP = (A P + P A' + sigma sigma' - P H' (gamma gamma')^-1 H P) dt

Steering jumps shift the mean only; the covariance never feels nu.  The
covariance is re-symmetrized after every step.  The log mass uses the same
left-point identity as the grid solver with pi(h) = H m + g.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .results import EstimateSeries
from .scenario import Scenario


@dataclass
class GaussianBelief:
    """Filter state at one instant: mean vector and covariance matrix."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        m = len(self.mean)
        if self.cov.shape != (m, m):
            raise ValueError("covariance shape does not match mean")


def kalman_run(s: Scenario, y_path: np.ndarray) -> EstimateSeries:
    """Euler-integrated Kalman-Bucy filter along an observation path."""
    s.require_valid()
    A, c, H, g, Sig, Gam, m0, P0 = s.linear_model()
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    y_path = np.asarray(y_path, dtype=float)
    if y_path.shape != (K + 1, s.n):
        raise GridMismatchError(
            f"observation path shape {y_path.shape}, expected ({K + 1}, {s.n})"
        )
    SigSig = Sig @ Sig.T
    Gam2inv = np.linalg.inv(Gam @ Gam.T)
    Gaminv = np.linalg.inv(Gam)

    mean = np.empty((K + 1, s.m))
    cov = np.empty((K + 1, s.m, s.m))
    log_mass = np.empty(K + 1)
    pi_h = np.empty((K + 1, s.n))

    m = m0.copy()
    jump0 = s.nu.jump_at(0)
    if jump0 is not None:
        m = m + jump0
    P = P0.copy()
    mean[0], cov[0], log_mass[0] = m, P, 0.0
    pi_h[0] = H @ m + g
    max_jump_cov_change = 0.0

    for k in range(K):
        dy = y_path[k + 1] - y_path[k]
        dc, jump = s.nu.increment(k)
        predicted = H @ m + g
        gain = P @ H.T @ Gam2inv
        m = m + (A @ m + c) * dt + dc + gain @ (dy - predicted * dt)
        P = P + dt * (A @ P + P @ A.T + SigSig - P @ H.T @ Gam2inv @ H @ P)
        P = 0.5 * (P + P.T)
        if jump is not None:
            P_before = P.copy()
            m = m + jump
            max_jump_cov_change = max(
                max_jump_cov_change, float(np.max(np.abs(P - P_before)))
            )
        cvec = Gaminv @ predicted
        dbar = Gaminv @ dy
        log_mass[k + 1] = log_mass[k] + float(cvec @ dbar) - 0.5 * float(cvec @ cvec) * dt
        mean[k + 1], cov[k + 1] = m, P
        pi_h[k + 1] = H @ m + g

    return EstimateSeries(
        method="kalman",
        time_grid=tg,
        mean=mean,
        cov=cov,
        log_mass=log_mass,
        extras={"pi_h": pi_h},
        diagnostics={"max_jump_cov_change": max_jump_cov_change},
    )


def kalman_jump_identity_check(result: EstimateSeries) -> float:
    """Largest covariance change recorded across steering jumps (must be 0)."""
    if "max_jump_cov_change" not in result.diagnostics:
        raise ValueError("result does not carry jump diagnostics; run kalman_run first")
    return float(result.diagnostics["max_jump_cov_change"])
