"""Grid solver for the unnormalized and normalized filtering densities.

The unnormalized conditional density is advanced over each time cell by an
operator split with three sub-steps:

1. explicit Fokker-Planck step  p <- p + dt * A*(t) p   (adjoint stencil,
   negatives from the explicit step clipped to zero),
2. transport by the continuous steering increment, p(x) <- p(x - d nu^c),
   realized as a linearly interpolated translation,
3. multiplicative observation update
   p <- p * exp{ (gamma^-1 h) . (gamma^-1 dY) - 0.5 |gamma^-1 h|^2 dt }.

Jumps of the steering path translate the density at their node:
p(x) <- p(x - jump).  Grid-aligned jumps reduce to an exact index shift.

`run_zakai` keeps the raw unnormalized density and records its trapezoidal
mass; `run_ks` performs the identical sub-steps but renormalizes to unit
mass after every cell, accumulating the log mass separately.  Up to
floating-point roundoff the two runs are related by exact normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CflError, FilterCollapseError, GridMismatchError
from .fields import DensityField, density_cov, density_mean
from .grids import SpatialGrid
from .results import EstimateSeries
from .scenario import GaussianMixture, GridDensity, Scenario

# ---------------------------------------------------------------------------
# shifted-copy helpers (zero fill outside the box)


def _rolled(values: np.ndarray, n: int, axis: int) -> np.ndarray:
    """Copy with entries moved n slots forward along `axis`, zeros filled in."""
    out = np.zeros_like(values)
    if n == 0:
        out[...] = values
        return out
    size = values.shape[axis]
    if abs(n) >= size:
        return out
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if n > 0:
        dst[axis] = slice(n, None)
        src[axis] = slice(None, size - n)
    else:
        dst[axis] = slice(None, size + n)
        src[axis] = slice(-n, None)
    out[tuple(dst)] = values[tuple(src)]
    return out


def _d1_zero(values: np.ndarray, dx: float, axis: int) -> np.ndarray:
    """Central first difference with zero extension beyond the boundary."""
    return (_rolled(values, -1, axis) - _rolled(values, 1, axis)) / (2.0 * dx)


def _d2_zero(values: np.ndarray, dx: float, axis: int) -> np.ndarray:
    return (_rolled(values, -1, axis) - 2.0 * values + _rolled(values, 1, axis)) / (dx * dx)


def _shift_axis(values: np.ndarray, s: float, axis: int) -> np.ndarray:
    """Translate by s grid cells along one axis: out[i] = values[i - s].

    Integer s (within 1e-9 of a whole number) is an exact index shift;
    otherwise two neighbouring shifts are blended linearly.
    """
    r = round(s)
    if abs(s - r) <= 1e-9:
        return _rolled(values, int(r), axis)
    n = int(np.floor(s))
    f = s - n
    return (1.0 - f) * _rolled(values, n, axis) + f * _rolled(values, n + 1, axis)


def shift_density(values: np.ndarray, delta: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Translated density p(. - delta) on the grid, zero outside the box."""
    out = np.asarray(values, dtype=float)
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    for axis, (d, dx) in enumerate(zip(delta, grid.dx)):
        if d != 0.0:
            out = _shift_axis(out, d / dx, axis)
    return out


def jump_reset(values: np.ndarray, jump: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Density after a steering jump: the whole field translated by the jump."""
    return shift_density(values, jump, grid)


# ---------------------------------------------------------------------------
# generator stencil


class GeneratorStencil:
    """Finite-difference action of the generator and its adjoint on a grid.

    The generator is A phi = b . D phi + sum_ij a_ij D^2_ij phi with
    a = sigma sigma* / 2; its adjoint acts on densities as
    A* p = sum_ij D^2_ij (a_ij p) - sum_i D_i (b_i p).  Both use central
    differences; the forward form falls back to one-sided stencils at the
    boundary while the adjoint treats the density as zero outside the box.

    When a time step is supplied the explicit-step stability bound
    sum_i max|a_ii| dt / dx_i^2 <= 1/2 is enforced at construction.
    """

    def __init__(self, s: Scenario, grid: SpatialGrid, dt: float | None = None):
        if grid.ndim != s.m:
            raise GridMismatchError(f"grid is {grid.ndim}-d but the state is {s.m}-d")
        self.scenario = s
        self.grid = grid
        self.dt = dt
        self.mesh = grid.mesh()
        self._static = not any(
            getattr(f, "time_dependent", True) for f in (s.b, s.sigma, s.h, s.gamma)
        )
        self._cache_t = None
        self._cache = None
        if dt is not None:
            _, a = self._coeffs(0.0)
            number = sum(
                float(np.max(np.abs(a[..., i, i]))) * dt / grid.dx[i] ** 2
                for i in range(grid.ndim)
            )
            if number > 0.5:
                raise CflError(
                    f"explicit step unstable: sum_i max|a_ii| dt/dx_i^2 = {number:.3f} > 0.5"
                )

    def _coeffs(self, t: float):
        """Drift and a = sigma sigma*/2 on the mesh: shapes (*grid, m), (*grid, m, m)."""
        if self._cache is not None and (self._static or t == self._cache_t):
            return self._cache
        s = self.scenario
        b = np.broadcast_to(np.asarray(s.b(t, self.mesh), float), self.mesh.shape).copy()
        sig = np.asarray(s.sigma(t, self.mesh), dtype=float)
        if sig.ndim == 2:
            a = np.broadcast_to(0.5 * sig @ sig.T, self.grid.shape + (s.m, s.m)).copy()
        else:
            a = 0.5 * np.einsum("...ik,...jk->...ij", sig, sig)
        self._cache_t = t
        self._cache = (b, a)
        return self._cache

    def obs_factors(self, t: float, dy: np.ndarray, dt: float) -> np.ndarray:
        """Pointwise likelihood tilt for one cell's observation increment."""
        s = self.scenario
        g = np.asarray(s.gamma(t), dtype=float)
        ginv = np.linalg.inv(g)
        h = np.asarray(s.h(t, self.mesh), dtype=float)
        c = np.einsum("ij,...j->...i", ginv, h)
        dbar = ginv @ np.asarray(dy, dtype=float)
        expo = np.einsum("...i,i->...", c, dbar) - 0.5 * dt * np.einsum("...i,...i->...", c, c)
        return np.exp(expo)

    def apply_forward(self, phi: np.ndarray, t: float) -> np.ndarray:
        """A phi on the grid (one-sided differences at the boundary)."""
        phi = np.asarray(phi, dtype=float)
        b, a = self._coeffs(t)
        ndim = self.grid.ndim
        out = np.zeros_like(phi)
        grads = [np.gradient(phi, dx, axis=i) for i, dx in enumerate(self.grid.dx)]
        for i in range(ndim):
            out += b[..., i] * grads[i]
        for i in range(ndim):
            for j in range(ndim):
                if i == j:
                    d2 = _second_diff_onesided(phi, self.grid.dx[i], i)
                else:
                    d2 = np.gradient(grads[i], self.grid.dx[j], axis=j)
                out += a[..., i, j] * d2
        return out

    def apply_adjoint(self, p: np.ndarray, t: float) -> np.ndarray:
        """A* p on the grid, density taken as zero outside the box."""
        p = np.asarray(p, dtype=float)
        b, a = self._coeffs(t)
        ndim = self.grid.ndim
        out = np.zeros_like(p)
        for i in range(ndim):
            out -= _d1_zero(b[..., i] * p, self.grid.dx[i], i)
            out += _d2_zero(a[..., i, i] * p, self.grid.dx[i], i)
        if ndim == 2:
            cross = a[..., 0, 1] * p
            out += 2.0 * _d1_zero(_d1_zero(cross, self.grid.dx[0], 0), self.grid.dx[1], 1)
        return out


def _second_diff_onesided(phi: np.ndarray, dx: float, axis: int) -> np.ndarray:
    out = (_rolled(phi, -1, axis) - 2.0 * phi + _rolled(phi, 1, axis)) / (dx * dx)
    # replace the invalid boundary rows by shifted three-point stencils
    first = [slice(None)] * phi.ndim
    second = [slice(None)] * phi.ndim
    third = [slice(None)] * phi.ndim
    first[axis], second[axis], third[axis] = 0, 1, 2
    out[tuple(first)] = (
        phi[tuple(first)] - 2.0 * phi[tuple(second)] + phi[tuple(third)]
    ) / (dx * dx)
    first[axis], second[axis], third[axis] = -1, -2, -3
    out[tuple(first)] = (
        phi[tuple(first)] - 2.0 * phi[tuple(second)] + phi[tuple(third)]
    ) / (dx * dx)
    return out


def generator_apply(s: Scenario, grid: SpatialGrid, phi: np.ndarray, t: float = 0.0) -> np.ndarray:
    return GeneratorStencil(s, grid).apply_forward(phi, t)


# ---------------------------------------------------------------------------
# stepping


def fokker_planck_step(stencil: GeneratorStencil, p: np.ndarray, t: float, dt: float) -> np.ndarray:
    """Sub-step 1: explicit adjoint step, negatives clipped to zero."""
    out = p + dt * stencil.apply_adjoint(p, t)
    np.clip(out, 0.0, None, out=out)
    if not np.all(np.isfinite(out)):
        raise FilterCollapseError(f"Fokker-Planck step produced non-finite values at t={t:.6g}")
    return out


def transport_step(p: np.ndarray, dcont: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Sub-step 2: translation by the continuous steering increment."""
    if np.all(np.asarray(dcont) == 0.0):
        return p
    return shift_density(p, dcont, grid)


def observation_step(
    stencil: GeneratorStencil, p: np.ndarray, t: float, dy: np.ndarray, dt: float
) -> np.ndarray:
    """Sub-step 3: multiplicative reweighting by the observation increment."""
    out = p * stencil.obs_factors(t, dy, dt)
    if not np.all(np.isfinite(out)):
        raise FilterCollapseError(f"observation update overflowed at t={t:.6g}")
    return out


def zakai_step(
    stencil: GeneratorStencil,
    p: np.ndarray,
    t: float,
    dy: np.ndarray,
    dcont: np.ndarray,
    dt: float,
) -> np.ndarray:
    """One full cell of the split scheme (no jump handling)."""
    p = fokker_planck_step(stencil, p, t, dt)
    p = transport_step(p, dcont, stencil.grid)
    return observation_step(stencil, p, t, dy, dt)


def initial_density(s: Scenario, grid: SpatialGrid) -> np.ndarray:
    """Initial law sampled on the grid, before any initial jump."""
    if isinstance(s.xi, GridDensity):
        return s.xi.density_on(grid)
    if isinstance(s.xi, GaussianMixture):
        return s.xi.density(grid.mesh())
    density = getattr(s.xi, "density", None)
    if density is None:
        raise ValueError("initial law cannot be evaluated on a grid")
    return np.asarray(density(grid.mesh()), dtype=float)


def _pi_h(stencil: GeneratorStencil, p: np.ndarray, t: float) -> np.ndarray:
    s = stencil.scenario
    h = np.asarray(s.h(t, stencil.mesh), dtype=float)
    w = stencil.grid.trapezoid_weights() * p
    mass = np.sum(w)
    return np.tensordot(w, h, axes=stencil.grid.ndim) / mass


def _run_grid_filter(
    s: Scenario,
    y_path: np.ndarray,
    normalize_each_step: bool,
    snapshot_every: int | None,
):
    s.require_valid()
    if s.space_grid is None:
        raise ValueError("grid solver needs a scenario with a spatial grid")
    grid = s.space_grid
    tg = s.time_grid
    K, dt = tg.steps, tg.dt
    y_path = np.asarray(y_path, dtype=float)
    if y_path.shape != (K + 1, s.n):
        raise GridMismatchError(
            f"observation path shape {y_path.shape}, expected ({K + 1}, {s.n})"
        )
    stencil = GeneratorStencil(s, grid, dt=dt)
    nodes = tg.nodes

    p = initial_density(s, grid)
    jump0 = s.nu.jump_at(0)
    if jump0 is not None:
        p = jump_reset(p, jump0, grid)

    mean = np.empty((K + 1, s.m))
    cov = np.empty((K + 1, s.m, s.m))
    log_mass = np.empty(K + 1)
    mass_col = np.empty(K + 1)
    pi_h = np.empty((K + 1, s.n))
    fields = []

    log_offset = 0.0
    if normalize_each_step:
        m0 = grid.integrate(p)
        if not m0 > 0:
            raise FilterCollapseError("initial density carries no mass on the grid")
        p = p / m0
        log_offset = np.log(m0)

    def record(k, p, log_offset):
        mass = grid.integrate(p)
        if not np.isfinite(mass) or mass <= 0.0:
            raise FilterCollapseError(f"filter mass vanished at t={nodes[k]:.6g}")
        mean[k] = density_mean(grid, p)
        cov[k] = density_cov(grid, p)
        pi_h[k] = _pi_h(stencil, p, nodes[k])
        log_mass[k] = log_offset + np.log(mass)
        mass_col[k] = np.exp(log_mass[k])
        if snapshot_every is not None and (k % snapshot_every == 0 or k == K):
            fields.append(DensityField(grid, p.copy(), nodes[k]))

    record(0, p, log_offset)
    for k in range(K):
        dy = y_path[k + 1] - y_path[k]
        dc, jump = s.nu.increment(k)
        p = zakai_step(stencil, p, nodes[k], dy, dc, dt)
        if jump is not None:
            p = jump_reset(p, jump, grid)
        if normalize_each_step:
            factor = grid.integrate(p)
            if not np.isfinite(factor) or factor < 1e-300:
                raise FilterCollapseError(
                    f"filter collapse: mass factor {factor:.3g} at t={nodes[k + 1]:.6g}"
                )
            p = p / factor
            log_offset += np.log(factor)
        record(k + 1, p, log_offset)

    series = EstimateSeries(
        method="ks" if normalize_each_step else "zakai",
        time_grid=tg,
        mean=mean,
        cov=cov,
        log_mass=log_mass,
        extras={"mass": mass_col, "pi_h": pi_h},
    )
    return series, (fields if snapshot_every is not None else None)


def run_zakai(s: Scenario, y_path: np.ndarray, snapshot_every: int | None = None):
    """Unnormalized filter over the whole horizon.

    Returns (series, fields); `fields` is None unless snapshots were asked
    for.  The recorded mean and covariance are normalized, the mass column
    is the raw trapezoidal integral of the evolving density.
    """
    return _run_grid_filter(s, y_path, normalize_each_step=False, snapshot_every=snapshot_every)


def run_ks(s: Scenario, y_path: np.ndarray, snapshot_every: int | None = None):
    """Normalized filter: same sub-steps, unit mass restored after each cell."""
    return _run_grid_filter(s, y_path, normalize_each_step=True, snapshot_every=snapshot_every)


def mass_formula_check(series: EstimateSeries, y_path: np.ndarray, s: Scenario):
    """Terminal log mass of a run against the innovation-form identity.

    The unnormalized mass satisfies
    rho_T(1) = exp{ int (gamma^-1 pi(h)) . dBbar - 0.5 int |gamma^-1 pi(h)|^2 dt }
    with dBbar = gamma^-1 dY; the right side is evaluated from the recorded
    pi(h) by left-point quadrature.  Returns (log_solver, log_formula,
    abs difference).
    """
    tg = s.time_grid
    series.time_grid.require_match(tg)
    y_path = np.asarray(y_path, dtype=float)
    pi_h = np.asarray(series.extras["pi_h"], dtype=float)
    log_formula = 0.0
    for k in range(tg.steps):
        g = np.asarray(s.gamma(tg.nodes[k]), dtype=float)
        c = np.linalg.solve(g, pi_h[k])
        dbar = np.linalg.solve(g, y_path[k + 1] - y_path[k])
        log_formula += float(c @ dbar) - 0.5 * float(c @ c) * tg.dt
    log_solver = float(series.log_mass[-1] - series.log_mass[0])
    return log_solver, log_formula, abs(log_solver - log_formula)
