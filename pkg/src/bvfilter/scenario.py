"""Scenario definition: coefficients, initial law, steering path, bounds.

A scenario bundles everything a solver needs: the signal drift b(t, x) and
diffusion sigma(t, x), the observation map h(t, x) and noise scale gamma(t),
the initial law xi, the steering path nu with its fuel budget, and the
constants entering the standing assumptions (gamma eigenvalue floor delta,
coefficient bounds K_b, K_sigma, K_h).

Coefficients are callables; the named presets below cover the linear /
clipped-cubic / tanh families used throughout and are what the JSON config
format maps onto.  Conventions: state arrays have shape (..., m), drift
returns (..., m), observation returns (..., n), sigma returns (m, d) or
(..., m, d), gamma returns (n, n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bvpath import BVPath
from .errors import ScenarioValidationError
from .grids import SpatialGrid, TimeGrid

# ---------------------------------------------------------------------------
# coefficient presets


@dataclass(eq=False)
class LinearDrift:
    """b(t, x) = A x + c."""

    A: np.ndarray
    c: np.ndarray
    time_dependent = False

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))

    def __call__(self, t, x):
        return np.einsum("ij,...j->...i", self.A, x) + self.c


@dataclass(eq=False)
class CubicClipDrift:
    """Componentwise b_i(t, x) = clip(-x_i^3, -bound, bound)."""

    bound: float
    time_dependent = False

    def __call__(self, t, x):
        return np.clip(-np.asarray(x) ** 3, -self.bound, self.bound)


@dataclass(eq=False)
class ConstantDiffusion:
    """sigma(t, x) = fixed m x d matrix."""

    matrix: np.ndarray
    time_dependent = False

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))

    def __call__(self, t, x):
        return self.matrix


@dataclass(eq=False)
class LinearObservation:
    """h(t, x) = H x + g."""

    H: np.ndarray
    g: np.ndarray
    time_dependent = False

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.g = np.atleast_1d(np.asarray(self.g, dtype=float))

    def __call__(self, t, x):
        return np.einsum("ij,...j->...i", self.H, x) + self.g


@dataclass(eq=False)
class TanhObservation:
    """Componentwise h_i(t, x) = scale * tanh(x_i); bounded by |scale|."""

    scale: float = 1.0
    time_dependent = False

    def __call__(self, t, x):
        return self.scale * np.tanh(np.asarray(x))


@dataclass(eq=False)
class ConstantGamma:
    """gamma(t) = fixed symmetric positive definite n x n matrix."""

    matrix: np.ndarray
    time_dependent = False

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))

    def __call__(self, t):
        return self.matrix


def zero_drift(m: int) -> LinearDrift:
    return LinearDrift(np.zeros((m, m)), np.zeros(m))


def zero_observation(n: int, m: int) -> LinearObservation:
    return LinearObservation(np.zeros((n, m)), np.zeros(n))


# ---------------------------------------------------------------------------
# initial laws


@dataclass(eq=False)
class GaussianMixture:
    """Finite mixture of Gaussians; the workhorse initial law.

    weights (C,), means (C, m), covs (C, m, m).  Weights are normalized at
    construction.
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        self.means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covs, dtype=float)
        if covs.ndim == 2:
            covs = covs[None]
        self.covs = covs
        if np.any(self.weights <= 0):
            raise ValueError("mixture weights must be positive")
        self.weights = self.weights / self.weights.sum()
        C, m = self.means.shape
        if self.weights.shape != (C,) or self.covs.shape != (C, m, m):
            raise ValueError("inconsistent mixture component shapes")
        # fail early on non-PD components
        self._chols = np.linalg.cholesky(self.covs)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @classmethod
    def single(cls, mean, cov) -> "GaussianMixture":
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        return cls(np.ones(1), mean[None], cov[None])

    def density(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        out = np.zeros(points.shape[:-1])
        m = self.dim
        for w, mu, cov in zip(self.weights, self.means, self.covs):
            diff = points - mu
            sol = np.linalg.solve(cov, diff[..., None])[..., 0]
            quad = np.einsum("...i,...i->...", diff, sol)
            det = np.linalg.det(cov)
            out += w * np.exp(-0.5 * quad) / np.sqrt((2.0 * np.pi) ** m * det)
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=size, p=self.weights)
        z = rng.standard_normal((size, self.dim))
        return self.means[comp] + np.einsum("nij,nj->ni", self._chols[comp], z)

    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def cov(self) -> np.ndarray:
        mu = self.mean()
        second = np.einsum("c,cij->ij", self.weights, self.covs)
        second += np.einsum("c,ci,cj->ij", self.weights, self.means, self.means)
        return second - np.outer(mu, mu)


@dataclass(eq=False)
class GridDensity:
    """Initial law given as nonnegative values on a spatial grid."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError("grid density shape mismatch")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("grid density must be finite and nonnegative")
        mass = self.grid.integrate(self.values)
        if not mass > 0:
            raise ValueError("grid density has no mass")
        self.values = self.values / mass

    @property
    def dim(self) -> int:
        return self.grid.ndim

    def density_on(self, grid: SpatialGrid) -> np.ndarray:
        self.grid.require_match(grid)
        return self.values.copy()

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # piecewise-constant cell sampling: pick a cell by its average
        # density, then place the point uniformly inside it
        v = self.values
        if self.grid.ndim == 1:
            cell = 0.5 * (v[1:] + v[:-1])
        else:
            cell = 0.25 * (v[1:, 1:] + v[1:, :-1] + v[:-1, 1:] + v[:-1, :-1])
        p = cell.ravel() / cell.sum()
        idx = rng.choice(cell.size, size=size, p=p)
        idx = np.unravel_index(idx, cell.shape)
        lo = np.asarray(self.grid.lo)
        dx = np.asarray(self.grid.dx)
        corners = np.stack([i.astype(float) for i in idx], axis=-1) * dx + lo
        return corners + rng.uniform(size=(size, self.grid.ndim)) * dx

    def mean(self) -> np.ndarray:
        from .fields import density_mean

        return density_mean(self.grid, self.values)

    def cov(self) -> np.ndarray:
        from .fields import density_cov

        return density_cov(self.grid, self.values)


# ---------------------------------------------------------------------------
# scenario


@dataclass(eq=False)
class Violation:
    code: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.message}"


@dataclass(eq=False)
class ValidationReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "scenario valid"
        return "\n".join(str(v) for v in self.violations)


@dataclass(eq=False)
class Scenario:
    m: int
    n: int
    d: int
    time_grid: TimeGrid
    b: object
    sigma: object
    h: object
    gamma: object
    xi: object
    space_grid: SpatialGrid | None = None
    nu_jumps: tuple = ()
    nu_knots: tuple = ()
    fuel: float = np.inf
    y0: np.ndarray = None
    delta: float = 1e-10
    K_b: float = np.inf
    K_sigma: float = np.inf
    K_h: float = np.inf
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        self.y0 = (
            np.zeros(self.n) if self.y0 is None else np.atleast_1d(np.asarray(self.y0, float))
        )
        if self.y0.shape != (self.n,):
            raise ValueError(f"y0 must have length n={self.n}")
        self.nu_jumps = tuple((float(t), np.atleast_1d(np.asarray(v, float))) for t, v in self.nu_jumps)
        self.nu_knots = tuple((float(t), np.atleast_1d(np.asarray(v, float))) for t, v in self.nu_knots)
        self._nu = None

    @property
    def nu(self) -> BVPath:
        if self._nu is None:
            if self.nu_jumps or self.nu_knots:
                self._nu = BVPath.from_knots(
                    self.time_grid, self.nu_jumps, self.nu_knots, self.fuel
                )
            else:
                self._nu = BVPath.zero(self.time_grid, self.m, self.fuel)
            if self._nu.m != self.m:
                raise ValueError(f"steering path has dimension {self._nu.m}, state has {self.m}")
        return self._nu

    def regrid(self, steps: int | None = None, space_grid: SpatialGrid | None = None) -> "Scenario":
        """Same model on a refined time grid and/or a different space grid.

        The steering path is rebuilt from its jump times and knots, so jump
        times must land on nodes of the new grid too.
        """
        tg = self.time_grid if steps is None else TimeGrid(self.time_grid.horizon, steps)
        if steps is not None:
            for t, _ in self.nu_jumps:
                k = t / tg.dt
                if abs(k - round(k)) > 1e-9:
                    raise ValueError(f"jump time {t} is not a node of the refined grid")
        return Scenario(
            m=self.m, n=self.n, d=self.d, time_grid=tg,
            b=self.b, sigma=self.sigma, h=self.h, gamma=self.gamma, xi=self.xi,
            space_grid=self.space_grid if space_grid is None else space_grid,
            nu_jumps=self.nu_jumps, nu_knots=self.nu_knots, fuel=self.fuel,
            y0=self.y0, delta=self.delta, K_b=self.K_b, K_sigma=self.K_sigma,
            K_h=self.K_h, seed=self.seed, label=self.label,
        )

    # -- linear-Gaussian structure -------------------------------------

    def linear_model(self):
        """Extract (A, c, H, g, Sigma, Gamma, xi_mean, xi_cov) or raise."""
        ok = (
            isinstance(self.b, LinearDrift)
            and isinstance(self.h, LinearObservation)
            and isinstance(self.sigma, ConstantDiffusion)
            and isinstance(self.gamma, ConstantGamma)
            and isinstance(self.xi, GaussianMixture)
            and len(self.xi.weights) == 1
        )
        if not ok:
            raise ValueError(
                "closed-form oracle needs linear drift and observation, constant "
                "sigma and gamma, and a single-component Gaussian initial law"
            )
        return (
            self.b.A, self.b.c, self.h.H, self.h.g,
            self.sigma.matrix, self.gamma.matrix,
            self.xi.means[0].copy(), self.xi.covs[0].copy(),
        )

    # -- validation ------------------------------------------------------

    def _sample_states(self) -> np.ndarray:
        """Representative state points for checking coefficient bounds."""
        if self.space_grid is not None:
            return self.space_grid.mesh().reshape(-1, self.m)
        rng = np.random.default_rng(self.seed)
        pts = self.xi.sample(rng, 1024)
        fuel = 0.0 if not np.isfinite(self.fuel) else self.fuel
        return np.concatenate([pts, pts + fuel, pts - fuel])

    def validate(self) -> ValidationReport:
        v: list[Violation] = []
        # dimensions
        if self.space_grid is not None and self.space_grid.ndim != self.m:
            v.append(Violation("dims", f"grid is {self.space_grid.ndim}-d, state is {self.m}-d"))
        try:
            nu = self.nu
        except ValueError as e:
            v.append(Violation("nu", str(e)))
            nu = None
        # fuel budget, per component
        if nu is not None:
            tv = nu.total_variation()
            if np.any(tv > self.fuel * (1 + 1e-12) + 1e-12):
                v.append(Violation(
                    "fuel", f"total variation {np.max(tv):.6g} exceeds fuel K={self.fuel:.6g}"
                ))
            if np.any(nu.continuous[0] != 0.0):
                v.append(Violation("nu", "continuous part must start at zero"))
        # gamma: symmetric, eigenvalues above the floor
        t_samples = (
            [0.0] if not getattr(self.gamma, "time_dependent", True)
            else list(np.linspace(0.0, self.time_grid.horizon, 33))
        )
        for t in t_samples:
            g = np.atleast_2d(np.asarray(self.gamma(t), dtype=float))
            if g.shape != (self.n, self.n):
                v.append(Violation("gamma", f"gamma({t}) has shape {g.shape}, expected ({self.n},{self.n})"))
                break
            if not np.allclose(g, g.T, rtol=0.0, atol=1e-10):
                v.append(Violation("gamma", f"gamma({t}) is not symmetric"))
                break
            lam = np.linalg.eigvalsh(g).min()
            if lam < self.delta:
                v.append(Violation(
                    "gamma", f"gamma({t}) eigenvalue {lam:.6g} below floor delta={self.delta:.6g}"
                ))
                break
        # coefficient bounds on representative states
        pts = self._sample_states()
        coeff_times = (
            [0.0]
            if not any(getattr(f, "time_dependent", True) for f in (self.b, self.sigma, self.h))
            else list(np.linspace(0.0, self.time_grid.horizon, 9))
        )
        for t in coeff_times:
            bx = np.asarray(self.b(t, pts), dtype=float)
            if bx.shape != pts.shape:
                v.append(Violation("b", f"b({t}, x) returned shape {bx.shape}"))
                break
            if np.max(np.abs(bx)) > self.K_b * (1 + 1e-12):
                v.append(Violation("b", f"|b| reaches {np.max(np.abs(bx)):.6g} > K_b={self.K_b:.6g}"))
                break
        for t in coeff_times:
            sig = np.asarray(self.sigma(t, pts), dtype=float)
            if sig.shape == (self.m, self.d):
                a = 0.5 * sig @ sig.T
            elif sig.shape == pts.shape[:-1] + (self.m, self.d):
                a = 0.5 * np.einsum("...ik,...jk->...ij", sig, sig)
            else:
                v.append(Violation("sigma", f"sigma({t}, x) returned shape {sig.shape}"))
                break
            if np.max(np.abs(a)) > self.K_sigma * (1 + 1e-12):
                v.append(Violation(
                    "sigma", f"|(sigma sigma*)/2| reaches {np.max(np.abs(a)):.6g} > K_sigma={self.K_sigma:.6g}"
                ))
                break
        for t in coeff_times:
            hx = np.asarray(self.h(t, pts), dtype=float)
            if hx.shape != pts.shape[:-1] + (self.n,):
                v.append(Violation("h", f"h({t}, x) returned shape {hx.shape}"))
                break
            if np.max(np.abs(hx)) > self.K_h * (1 + 1e-12):
                v.append(Violation("h", f"|h| reaches {np.max(np.abs(hx)):.6g} > K_h={self.K_h:.6g}"))
                break
        # initial law
        if getattr(self.xi, "dim", self.m) != self.m:
            v.append(Violation("xi", f"initial law dimension {self.xi.dim} != m={self.m}"))
        return ValidationReport(v)

    def require_valid(self) -> None:
        report = self.validate()
        if not report.ok:
            raise ScenarioValidationError(report.violations)


def validate_scenario(s: Scenario) -> ValidationReport:
    return s.validate()


# ---------------------------------------------------------------------------
# JSON config loading

_DRIFT_PRESETS = {"linear", "zero", "cubic_clip"}
_OBS_PRESETS = {"linear", "zero", "tanh"}


def _build_drift(cfg: dict, m: int):
    name = cfg.get("name")
    if name == "linear":
        return LinearDrift(cfg["A"], cfg.get("c", np.zeros(m)))
    if name == "zero":
        return zero_drift(m)
    if name == "cubic_clip":
        return CubicClipDrift(float(cfg["bound"]))
    raise ValueError(f"unknown drift preset {name!r}, expected one of {sorted(_DRIFT_PRESETS)}")


def _build_observation(cfg: dict, n: int, m: int):
    name = cfg.get("name")
    if name == "linear":
        return LinearObservation(cfg["H"], cfg.get("g", np.zeros(n)))
    if name == "zero":
        return zero_observation(n, m)
    if name == "tanh":
        return TanhObservation(float(cfg.get("scale", 1.0)))
    raise ValueError(f"unknown observation preset {name!r}, expected one of {sorted(_OBS_PRESETS)}")


def _build_sigma(cfg: dict):
    if cfg.get("name") != "constant":
        raise ValueError("sigma preset must be 'constant'")
    return ConstantDiffusion(cfg["matrix"])


def _build_gamma(cfg: dict):
    if cfg.get("name") != "constant":
        raise ValueError("gamma preset must be 'constant'")
    return ConstantGamma(cfg["matrix"])


def _build_xi(cfg: dict, grid: SpatialGrid | None):
    name = cfg.get("name")
    if name == "gaussian_mixture":
        comps = cfg["components"]
        return GaussianMixture(
            [c["weight"] for c in comps],
            [c["mean"] for c in comps],
            [c["cov"] for c in comps],
        )
    if name == "grid_density":
        if grid is None:
            raise ValueError("grid_density initial law needs a spatial grid")
        return GridDensity(grid, np.asarray(cfg["values"], dtype=float).reshape(grid.shape))
    raise ValueError(f"unknown initial law preset {name!r}")


def scenario_from_config(config) -> Scenario:
    """Build a Scenario from a config dict, JSON string, or file path."""
    if isinstance(config, (str, Path)):
        p = Path(config)
        if p.exists():
            config = json.loads(p.read_text())
        else:
            config = json.loads(str(config))
    dims = config["dims"]
    m, n, d = int(dims["m"]), int(dims["n"]), int(dims["d"])
    tg = TimeGrid(float(config["horizon"]), int(config["steps"]))
    grid = None
    if config.get("grid") is not None:
        gcfg = config["grid"]
        grid = SpatialGrid(tuple(gcfg["lo"]), tuple(gcfg["hi"]), tuple(gcfg["nodes"]))
    coeffs = config["coeffs"]
    nu_cfg = config.get("nu") or {}
    bounds = config.get("bounds") or {}
    return Scenario(
        m=m, n=n, d=d,
        time_grid=tg,
        space_grid=grid,
        b=_build_drift(coeffs["b"], m),
        sigma=_build_sigma(coeffs["sigma"]),
        h=_build_observation(coeffs["h"], n, m),
        gamma=_build_gamma(coeffs["gamma"]),
        xi=_build_xi(config["xi"], grid),
        nu_jumps=tuple((t, v) for t, v in nu_cfg.get("jumps", [])),
        nu_knots=tuple((t, v) for t, v in nu_cfg.get("continuous", [])),
        fuel=float(config.get("fuel_K", np.inf)),
        y0=np.asarray(config.get("y0", np.zeros(n)), dtype=float),
        delta=float(bounds.get("delta", 1e-10)),
        K_b=float(bounds.get("K_b", np.inf)),
        K_sigma=float(bounds.get("K_sigma", np.inf)),
        K_h=float(bounds.get("K_h", np.inf)),
        seed=int(config.get("seed", 0)),
        label=str(config.get("label", "")),
    )
