"""CLI tool to interact with choquard."""

import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import IO, Iterator, Optional, Sequence

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from choquard.diagnostics import (
    brezis_lieb_defect,
    bump_profile,
    classify_exponents,
    hls_exponents,
    identity_report,
    loglog_slope,
    pointwise_splitting_defect,
    predicted_vanishing_slope,
    vanishing_decay_test,
)
from choquard.errors import ChoquardError, RefusedRegimeError, SolverStalledError
from choquard.models import Field, Grid, KernelTable, Params, PhaseClassification, PhaseLabel
from choquard.snapshot import read_snapshot, write_snapshot
from choquard.solver import GroundStateSolver
from choquard.spectral_core import (
    build_riesz_kernel,
    direct_convolve_oracle,
    get_convolver,
    translate_field,
)
from choquardcli.config import ConfigError, RunConfig, load_run_config, thread_cap

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_SOLVER = 3

SNAPSHOT_NAME = "solution.choq"
PROFILE_NAME = "profile.csv"
DIAGNOSTICS_NAME = "diagnostics.json"


@contextmanager
def handle_errors() -> Iterator[None]:
    """Maps library failures onto the CLI exit codes."""
    try:
        yield
    except (RefusedRegimeError, SolverStalledError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_SOLVER)
    except (ChoquardError, ValueError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_VALIDATION)


def load_config(path: str) -> RunConfig:
    try:
        return load_run_config(path)
    except ConfigError as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_VALIDATION)


def output_dir(cfg: RunConfig, out: Optional[str]) -> str:
    directory = out or cfg.output
    os.makedirs(directory, exist_ok=True)
    return directory


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="") as csv_file:
        writer = csv.writer(csv_file)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {len(rows)} rows to {path}")


def format_classification(
    classification: PhaseClassification, params: Params, file: Optional[IO[str]] = None
) -> None:
    """Format a phase classification as a rich table."""
    console = Console(file=file)

    table = Table(title=f"Phase of N={params.N}, alpha={params.alpha:g}")
    table.add_column("p", style="cyan")
    table.add_column("q", style="cyan")
    table.add_column("p+q", style="magenta")
    table.add_column("Window", style="white")
    table.add_column("Label", style="yellow")
    table.add_column("a1", style="green")
    table.add_column("a2", style="green")
    table.add_row(
        f"{params.p:g}",
        f"{params.q:g}",
        f"{classification.degree:g}",
        f"({classification.lower:g}, {classification.upper:g})",
        classification.label.value,
        f"{classification.a1:.6g}",
        f"{classification.a2:.6g}",
    )
    console.print(table)


def format_diagnostics(diagnostics: dict, file: Optional[IO[str]] = None) -> None:
    """Format the solve diagnostics as a rich panel."""
    console = Console(file=file)
    energy = diagnostics["energy"]
    lines = [
        f"mp                 {diagnostics['mp']:.10g}",
        f"energy             {energy['energy']:.10g}",
        f"pohozaev           {diagnostics['pohozaev']:.3e}",
        f"nehari             {diagnostics['nehari']:.3e}",
        f"equation residual  {diagnostics['equation_residual']:.3e}",
        f"iterations         {diagnostics['iterations']}",
    ]
    style = "green" if diagnostics["converged"] else "red"
    title = "Converged" if diagnostics["converged"] else "Not converged"
    console.print(Panel("\n".join(lines), title=title, border_style=style))


# general command configs
@click.group(invoke_without_command=True)
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    help="Log every iteration (DEBUG level).",
    required=False,
)
@click.pass_context
def cli(ctx: click.core.Context, verbose: bool) -> None:
    """A CLI tool to compute Choquard ground states and their diagnostics."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )

    # if no subcommand is invoked, display help and exit
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())
        return


def config_options(command):
    command = click.option(
        "-o",
        "--out",
        metavar="dir",
        help="Output directory, overriding the config's 'output'.",
        required=False,
    )(command)
    command = click.option(
        "-c",
        "--config",
        "config_path",
        type=click.Path(exists=True, dir_okay=False),
        help="JSON run configuration.",
        required=True,
    )(command)
    return command


@cli.command()
@config_options
def solve(config_path: str, out: Optional[str]):
    """Compute the ground state and write snapshot, profile and diagnostics."""
    cfg = load_config(config_path)
    with handle_errors():
        params, grid = cfg.require_params(), cfg.require_grid()
        solver = GroundStateSolver(params, grid, cfg.solver, cfg.init, cfg.init_shift)
        diagnostics = solver.diagnostics()
        radii, values = solver.radial_profile()

    directory = output_dir(cfg, out)
    write_snapshot(solver.result.u, params, os.path.join(directory, SNAPSHOT_NAME))
    write_csv(
        os.path.join(directory, PROFILE_NAME),
        ["r", "u"],
        [(repr(float(r)), repr(float(v))) for r, v in zip(radii, values)],
    )
    with open(os.path.join(directory, DIAGNOSTICS_NAME), "w") as diagnostics_file:
        json.dump(diagnostics, diagnostics_file, indent=2)

    format_diagnostics(diagnostics)
    if not diagnostics["converged"]:
        click.echo("Error: the solver did not converge; outputs were written anyway.", err=True)
        sys.exit(EXIT_SOLVER)


@cli.command()
@config_options
def classify(config_path: str, out: Optional[str]):
    """Show where p + q lies relative to the existence window."""
    cfg = load_config(config_path)
    with handle_errors():
        params = cfg.require_params()
    format_classification(classify_exponents(params), params)


def _phase_solve(
    params: Params, grid: Grid, cfg: RunConfig, kernel: Optional[KernelTable]
) -> tuple[float, Optional[bool]]:
    try:
        solver = GroundStateSolver(params, grid, cfg.solver, cfg.init, cfg.init_shift, kernel)
        result = solver.result
    except ChoquardError as e:
        logger.warning(f"Solve failed for p={params.p:g}, q={params.q:g}: {e}")
        return float("nan"), False
    return result.mp, result.converged


@cli.command()
@config_options
def phase(config_path: str, out: Optional[str]):
    """Classify a rectangle of (p, q) and solve inside the existence window."""
    cfg = load_config(config_path)
    with handle_errors():
        base = cfg.require_params()
        block = cfg.phase
        workers = thread_cap()
        points = [
            Params(N=base.N, alpha=base.alpha, p=float(p), q=float(q))
            for p in np.linspace(block.p_min, block.p_max, block.p_steps)
            for q in np.linspace(block.q_min, block.q_max, block.q_steps)
        ]
        classifications = [classify_exponents(params) for params in points]
        grid = cfg.require_grid() if block.solve else None
        kernel = build_riesz_kernel(grid, base.alpha) if grid is not None else None

    solves: dict[int, tuple[float, Optional[bool]]] = {}
    if grid is not None:
        inside = [i for i, c in enumerate(classifications) if c.label == PhaseLabel.EXISTS]
        logger.info(f"Solving {len(inside)} points with {workers} worker(s)")
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {
                i: executor.submit(_phase_solve, points[i], grid, cfg, kernel) for i in inside
            }
            solves = {i: future.result() for i, future in futures.items()}

    rows = []
    counts: dict[str, int] = {}
    for i, (params, classification) in enumerate(zip(points, classifications)):
        mp, converged = solves.get(i, (float("nan"), None))
        label = classification.label.value
        counts[label] = counts.get(label, 0) + 1
        rows.append(
            (
                repr(params.p),
                repr(params.q),
                repr(params.degree),
                label,
                repr(classification.a1),
                repr(classification.a2),
                "" if np.isnan(mp) else repr(mp),
                "" if converged is None else str(converged).lower(),
            )
        )

    directory = output_dir(cfg, out)
    write_csv(
        os.path.join(directory, "phase.csv"),
        ["p", "q", "p+q", "label", "a1", "a2", "mp", "converged"],
        rows,
    )

    table = Table(title=f"Phase diagram of N={base.N}, alpha={base.alpha:g}")
    table.add_column("Label", style="yellow")
    table.add_column("Points", style="cyan")
    for label, count in sorted(counts.items()):
        table.add_row(label, str(count))
    Console().print(table)


@cli.command()
@config_options
@click.option(
    "-s",
    "--snapshot",
    "snapshot_path",
    metavar="file",
    help="Snapshot to check, overriding the config's 'check.snapshot'.",
    required=False,
)
def check(config_path: str, out: Optional[str], snapshot_path: Optional[str]):
    """Evaluate the Pohozaev and Nehari identities on a snapshot."""
    cfg = load_config(config_path)
    path = snapshot_path or cfg.snapshot
    with handle_errors():
        if path is None:
            raise ConfigError("Missing field 'check.snapshot' and no --snapshot given.")
        if not os.path.isfile(path):
            raise ConfigError(f"Could not find snapshot {path}.")
        u, params = read_snapshot(path)
        if cfg.params is not None and cfg.params != params:
            raise ConfigError(
                f"Snapshot parameters {params.to_dict()} differ from the config's "
                f"{cfg.params.to_dict()}."
            )
        if cfg.grid is not None and cfg.grid != u.grid:
            raise ConfigError(
                f"Snapshot grid (n={u.grid.n}, L={u.grid.length}) differs from the config's "
                f"(n={cfg.grid.n}, L={cfg.grid.length})."
            )
        kernel = build_riesz_kernel(u.grid, params.alpha)
        report = identity_report(u, params, kernel, cfg.solver.epsilon, cfg.solver.stencil)

    document = {
        **report.to_dict(),
        "n": u.grid.n,
        "L": u.grid.length,
        "stencil": cfg.solver.stencil,
    }
    directory = output_dir(cfg, out)
    with open(os.path.join(directory, "identity_report.json"), "w") as report_file:
        json.dump(document, report_file, indent=2)
    click.echo(json.dumps(document, indent=2))


def _source_field(grid: Grid, source: str, seed: int) -> Field:
    if source == "spike":
        data = np.zeros(grid.shape)
        data[grid.center_index] = 1.0
        return Field(grid, data)
    if source == "gaussian":
        return Field(grid, np.exp(-grid.radius_squared / 2))
    if source == "random":
        return Field(grid, np.random.default_rng(seed).standard_normal(grid.shape))
    raise ValueError(
        f"Unsupported source: {source}. Supported sources: ['gaussian', 'random', 'spike']"
    )


@cli.command()
@config_options
def convolve(config_path: str, out: Optional[str]):
    """Apply the Riesz potential to a source field and write it as CSV."""
    cfg = load_config(config_path)
    with handle_errors():
        params, grid = cfg.require_params(), cfg.require_grid()
        block = cfg.convolve
        f = _source_field(grid, block.source, block.seed)
        kernel = build_riesz_kernel(grid, params.alpha)
        g = get_convolver(block.method, kernel).convolve(f)
        if block.compare:
            oracle = direct_convolve_oracle(f, kernel)
            error = (g - oracle).l2_norm() / oracle.l2_norm()
            click.echo(f"relative L2 difference to the direct sum: {error:.3e}")

    indices = np.indices(grid.shape).reshape(grid.dim, -1).T
    rows = [
        (*map(int, index), repr(float(fv)), repr(float(gv)))
        for index, fv, gv in zip(indices, f.data.ravel(), g.data.ravel())
    ]
    directory = output_dir(cfg, out)
    write_csv(
        os.path.join(directory, "convolve.csv"),
        [f"i{axis}" for axis in range(grid.dim)] + ["f", "g"],
        rows,
    )


@cli.command()
@config_options
def bltest(config_path: str, out: Optional[str]):
    """Measure the splitting defect of two bumps drifting apart."""
    cfg = load_config(config_path)
    with handle_errors():
        params, grid = cfg.require_params(), cfg.require_grid()
        shifts = cfg.bltest_shifts(grid.dim)
        kernel = build_riesz_kernel(grid, params.alpha)
        bump = Field(grid, bump_profile(cfg.bltest.bump_radius)(grid.coords))
        defects = brezis_lieb_defect(bump, bump, shifts, params, kernel)
        _, t = hls_exponents(params)
        local_defects = [
            pointwise_splitting_defect(
                bump + translate_field(bump, shift, strict=True), bump, params.p, t
            )
            for shift in shifts
        ]

    distances = [float(np.linalg.norm(shift)) * grid.h for shift in shifts]
    rows = [
        (";".join(map(str, shift)), repr(d), repr(defect), repr(local))
        for shift, d, defect, local in zip(shifts, distances, defects, local_defects)
    ]
    directory = output_dir(cfg, out)
    write_csv(
        os.path.join(directory, "bltest.csv"),
        ["shift", "distance", "defect", "local_defect"],
        rows,
    )

    if len(shifts) > 1 and all(d > 0 for d in defects):
        slope = loglog_slope(distances, defects)
        click.echo(
            f"log-log slope {slope:.4f}, kernel decay {-(params.N - params.alpha):.4f}"
        )


@cli.command()
@config_options
def vanish(config_path: str, out: Optional[str]):
    """Measure D along L2-preserving dilations of a bump."""
    cfg = load_config(config_path)
    with handle_errors():
        params, grid = cfg.require_params(), cfg.require_grid()
        kernel = build_riesz_kernel(grid, params.alpha)
        samples = vanishing_decay_test(
            bump_profile(cfg.vanish.bump_radius), cfg.vanish.lambdas, params, kernel
        )

    rows = [
        (repr(s.lam), repr(s.d_value), repr(s.hls_ratio), repr(s.concentration))
        for s in samples
    ]
    directory = output_dir(cfg, out)
    write_csv(
        os.path.join(directory, "vanish.csv"),
        ["lambda", "d_value", "hls_ratio", "concentration"],
        rows,
    )

    if len(samples) > 1:
        slope = loglog_slope([s.lam for s in samples], [s.d_value for s in samples])
        click.echo(
            f"log-log slope {slope:.4f}, predicted {predicted_vanishing_slope(params):.4f}"
        )


if __name__ == "__main__":
    cli()  # pragma: no cover
