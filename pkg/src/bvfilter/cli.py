"""Command-line front end: simulate, filter, compare, checks.

All commands are deterministic given (scenario, seed, flags).  Outputs are
schema-tagged CSV files, JSON reports, and optional PNG figures written
next to the delimited output.  The default output directory comes from
BVFILTER_OUT (falling back to the working directory).
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import checks as checks_mod
from .errors import GridMismatchError, ScenarioValidationError
from .fileio import compare_estimates, read_csv, write_csv, write_density_bin, write_estimate_csv, write_json
from .oracle import kalman_run
from .particle import run_pf
from .scenario import Scenario, scenario_from_config
from .simulate import RngStream, sample_bundle
from .zakai import run_ks, run_zakai

EXIT_FAIL = 1
EXIT_MISSING = 2
EXIT_GRID = 3


def _load_scenario(path: str) -> Scenario:
    p = Path(path)
    if not p.exists():
        click.echo(f"error: scenario file not found: {p}", err=True)
        sys.exit(EXIT_MISSING)
    try:
        s = scenario_from_config(p)
        s.require_valid()
    except ScenarioValidationError as exc:
        click.echo("error: scenario failed validation:", err=True)
        for v in exc.violations:
            click.echo(f"  [{v.code}] {v.message}", err=True)
        sys.exit(EXIT_FAIL)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        click.echo(f"error: could not load scenario: {exc}", err=True)
        sys.exit(EXIT_FAIL)
    return s


def _out_dir(out: str | None) -> Path:
    d = Path(out) if out else Path(os.environ.get("BVFILTER_OUT", "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _path_columns(s: Scenario, bundle) -> dict:
    cols = {"t": s.time_grid.nodes}
    for i in range(s.m):
        cols[f"x_{i + 1}"] = bundle.x[:, i]
    for i in range(s.n):
        cols[f"y_{i + 1}"] = bundle.y[:, i]
    cols["log_eta"] = bundle.log_eta
    return cols


def _simulate_one(scenario_path: str, seed: int, index: int, measure: str, out_dir: str) -> str:
    """Worker for one replication; safe to run in a separate process."""
    s = scenario_from_config(Path(scenario_path))
    stream = RngStream(seed).child("path", index)
    bundle = sample_bundle(s, stream.generator("signal"), stream.generator("observation"),
                           measure=measure)
    target = Path(out_dir) / f"path_{index:03d}.csv"
    write_csv(target, _path_columns(s, bundle))
    return str(target)


@click.group()
def main() -> None:
    """Filtering experiments for diffusions steered by bounded-variation input."""


@main.command("simulate")
@click.argument("scenario", type=str)
@click.option("--paths", default=1, show_default=True, help="Number of replications.")
@click.option("--measure", type=click.Choice(["physical", "reference"]), default="physical",
              show_default=True, help="Law under which the observation path is drawn.")
@click.option("--seed", default=None, type=int, help="Override the scenario seed.")
@click.option("--out", default=None, type=str, help="Output directory.")
@click.option("--jobs", default=1, show_default=True, help="Parallel worker processes.")
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Render path figure next to the CSVs.")
def cmd_simulate(scenario, paths, measure, seed, out, jobs, plot) -> None:
    """Draw signal/observation paths and write per-path CSVs plus a summary."""
    s = _load_scenario(scenario)
    if seed is None:
        seed = s.seed
    out_dir = _out_dir(out)
    if jobs > 1 and paths > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_simulate_one, scenario, seed, i, measure, str(out_dir))
                       for i in range(paths)]
            files = [f.result() for f in futures]
    else:
        files = [_simulate_one(scenario, seed, i, measure, str(out_dir)) for i in range(paths)]

    x_term = np.empty((paths, s.m))
    x_all = np.empty((paths, s.time_grid.steps + 1, s.m))
    y_all = np.empty((paths, s.time_grid.steps + 1, s.n))
    for i, f in enumerate(files):
        cols = read_csv(f)
        for j in range(s.m):
            x_all[i, :, j] = cols[f"x_{j + 1}"]
        for j in range(s.n):
            y_all[i, :, j] = cols[f"y_{j + 1}"]
        x_term[i] = x_all[i, -1]
    summary = {
        "paths": paths,
        "measure": measure,
        "seed": seed,
        "horizon": s.time_grid.horizon,
        "steps": s.time_grid.steps,
        "terminal_mean": x_term.mean(axis=0).tolist(),
        "terminal_cov": np.atleast_2d(np.cov(x_term.T, ddof=1)).tolist() if paths > 1
        else [[0.0] * s.m for _ in range(s.m)],
        "files": [Path(f).name for f in files],
    }
    write_json(out_dir / "simulate_summary.json", summary)
    if plot:
        from .plots import plot_paths

        plot_paths(s.time_grid.nodes, x_all, y_all, out_dir / "paths.png")
    click.echo(f"wrote {paths} path file(s) and simulate_summary.json to {out_dir}")


def _read_observation(s: Scenario, obs_path: str) -> np.ndarray:
    p = Path(obs_path)
    if not p.exists():
        click.echo(f"error: observation file not found: {p}", err=True)
        sys.exit(EXIT_MISSING)
    cols = read_csv(p)
    t = cols["t"]
    if t.shape[0] != s.time_grid.steps + 1 or not np.allclose(
            t, s.time_grid.nodes, rtol=0.0, atol=1e-9 * max(1.0, s.time_grid.horizon)):
        raise GridMismatchError("observation time column does not match the scenario grid")
    try:
        y = np.column_stack([cols[f"y_{i + 1}"] for i in range(s.n)])
    except KeyError as exc:
        raise GridMismatchError(f"observation file lacks column {exc}") from exc
    return y


@main.command("filter")
@click.argument("scenario", type=str)
@click.option("--method", type=click.Choice(["zakai", "ks", "particle", "kalman"]),
              default="zakai", show_default=True)
@click.option("--obs", default=None, type=str,
              help="Observation CSV (from `simulate`); omit to generate one.")
@click.option("--measure", type=click.Choice(["physical", "reference"]), default="physical",
              show_default=True, help="Law for a generated observation path.")
@click.option("--particles", default=1000, show_default=True, help="Particle count.")
@click.option("--seed", default=None, type=int, help="Override the scenario seed.")
@click.option("--snapshot-every", default=None, type=int,
              help="Write density snapshots every k steps (grid methods only).")
@click.option("--out", default=None, type=str, help="Output directory.")
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Render estimate figure next to the CSV.")
def cmd_filter(scenario, method, obs, measure, particles, seed, snapshot_every, out, plot) -> None:
    """Run one filter on an observation path and write the estimate CSV."""
    s = _load_scenario(scenario)
    if seed is None:
        seed = s.seed
    out_dir = _out_dir(out)
    stream = RngStream(seed)
    try:
        if obs is not None:
            y = _read_observation(s, obs)
        else:
            bundle = sample_bundle(s, stream.generator("signal"),
                                   stream.generator("observation"), measure=measure)
            y = bundle.y
        fields = None
        if method == "zakai":
            series, fields = run_zakai(s, y, snapshot_every=snapshot_every)
        elif method == "ks":
            series, fields = run_ks(s, y, snapshot_every=snapshot_every)
        elif method == "particle":
            series = run_pf(s, y, stream.child("filter"), n_particles=particles)
        else:
            try:
                s.linear_model()
            except ValueError:
                click.echo("error: oracle requires linear-Gaussian scenario", err=True)
                sys.exit(EXIT_FAIL)
            series = kalman_run(s, y)
    except GridMismatchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_GRID)

    csv_path = out_dir / f"{method}_estimate.csv"
    write_estimate_csv(csv_path, series)
    if fields is not None:
        for field in fields:
            k = s.time_grid.index_of(field.t)
            write_density_bin(out_dir / f"{method}_density_{k:06d}.bin", field)
    if plot:
        from .plots import plot_estimate

        plot_estimate(series, out_dir / f"{method}_estimate.png")
    click.echo(f"wrote {csv_path.name} to {out_dir} "
               f"(terminal mean {np.array2string(series.mean[-1], precision=5)})")


@main.command("compare")
@click.argument("run_a", type=str)
@click.argument("run_b", type=str)
@click.option("--mean-rmse-tol", default=None, type=float, help="Fail if mean RMSE exceeds this.")
@click.option("--cov-sup-tol", default=None, type=float,
              help="Fail if sup covariance error exceeds this.")
@click.option("--mass-tol", default=None, type=float,
              help="Fail if sup |log mass difference| exceeds this.")
@click.option("--out", default=None, type=str, help="Write metrics JSON here.")
@click.option("--plot/--no-plot", default=False, show_default=True,
              help="Render overlay figure next to the metrics.")
def cmd_compare(run_a, run_b, mean_rmse_tol, cov_sup_tol, mass_tol, out, plot) -> None:
    """Diff two estimate CSVs on a shared time grid."""
    for f in (run_a, run_b):
        if not Path(f).exists():
            click.echo(f"error: estimate file not found: {f}", err=True)
            sys.exit(EXIT_MISSING)
    a, b = read_csv(run_a), read_csv(run_b)
    try:
        metrics = compare_estimates(a, b)
    except GridMismatchError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_GRID)
    thresholds = {
        "mean_rmse": mean_rmse_tol,
        "cov_sup": cov_sup_tol,
        "log_mass_sup": mass_tol,
    }
    failures = []
    for key, tol in thresholds.items():
        if tol is not None and metrics[key] > tol:
            failures.append(f"{key}={metrics[key]:.6e} > {tol:.6e}")
    report = {
        "run_a": str(run_a),
        "run_b": str(run_b),
        "metrics": metrics,
        "thresholds": {k: v for k, v in thresholds.items() if v is not None},
        "pass": not failures,
    }
    if out is not None:
        out_path = Path(out)
        if out_path.is_dir():
            out_path = out_path / "compare_metrics.json"
        out_path.parent.mkdir(parents=True, exist_ok=True)
        write_json(out_path, report)
        if plot:
            from .plots import plot_compare

            plot_compare({Path(run_a).stem: a, Path(run_b).stem: b},
                         out_path.with_name("compare.png"))
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    if failures:
        for f in failures:
            click.echo(f"FAIL {f}", err=True)
        sys.exit(EXIT_FAIL)


@main.command("checks")
@click.option("--suite", "suites", multiple=True,
              type=click.Choice(sorted(checks_mod.SUITES)),
              help="Suite to run (repeatable); default all.")
@click.option("--seed", default=None, type=int, help="Override suite seeds.")
@click.option("--out", default=None, type=str, help="Write report JSON here.")
def cmd_checks(suites, seed, out) -> None:
    """Run built-in invariant suites and report per-check results."""
    names = list(suites) if suites else sorted(checks_mod.SUITES)
    report = checks_mod.run_suites(names, seed=seed)
    for suite in report["suites"]:
        for check in suite["checks"]:
            status = "PASS" if check["pass"] else "FAIL"
            value = check.get("value", check.get("abs_error"))
            click.echo(f"[{status}] {suite['suite']}:{check['name']} value={value}")
    if out is not None:
        out_path = Path(out)
        if out_path.is_dir():
            out_path = out_path / "checks_report.json"
        out_path.parent.mkdir(parents=True, exist_ok=True)
        write_json(out_path, report)
    if not report["pass"]:
        sys.exit(EXIT_FAIL)
    click.echo("all suites passed")


if __name__ == "__main__":
    main()
