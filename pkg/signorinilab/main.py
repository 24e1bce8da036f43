#!/usr/bin/env python3
"""
Main module for signorinilab CLI application.

Author: David Diaz (https://github.com/alfdav)
Version: 1.0.0
"""
from pathlib import Path
from typing import Optional, Sequence

import typer
from rich.traceback import install as install_rich_traceback

from signorinilab.parser import ConfigError, alakazam_load_config
from signorinilab.pipeline import STAGES, PipelineResult, machamp_run_pipeline
from signorinilab.snapshot import SnapshotError, snorlax_inspect_snapshot, snorlax_load_snapshot
from signorinilab.solve import SolverConvergenceError
from signorinilab.utils import (
    console,
    create_section,
    create_table,
    hitmonchan_setup_logging,
    hitmonchan_show_banner,
    hitmonchan_show_progress,
    hitmonchan_show_success,
    kadabra_display_checks,
    primeape_show_error,
    primeape_show_warning,
)

# Install Rich traceback handler
install_rich_traceback(show_locals=True, width=120, word_wrap=True)

EXIT_ERROR = 1
EXIT_SOLVER = 2
EXIT_CHECKS = 3

# Create Typer app with rich formatting
app = typer.Typer(
    help="Solve, measure and certify the parabolic thin obstacle problem on space-time grids",
    add_completion=True,
    rich_markup_mode="rich",
    context_settings={"help_option_names": ["--help", "-h"]}
)

CONFIG_OPTION = typer.Option(..., "--config", "-c", help="Experiment configuration file (.cfg)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Output directory (overrides [output] dir)")
SEED_OPTION = typer.Option(None, "--seed", help="Random seed (overrides [run] seed)")
THREADS_OPTION = typer.Option(None, "--threads", help="Worker threads (overrides [run] threads)")
VERBOSE_OPTION = typer.Option(False, "--verbose", "-v", help="Show verbose output")


def _report(result: PipelineResult) -> None:
    checks = result.summary.get("checks", {})
    if checks:
        kadabra_display_checks(checks)
    hitmonchan_show_success(
        f"Wrote {len(result.artifacts)} artifacts to {result.artifacts[-1].parent}"
    )
    if not result.passed:
        failed = sorted(name for name, check in checks.items() if not check["passed"])
        primeape_show_warning(f"{len(failed)} checks failed: {', '.join(failed)}", title="Checks")


def machamp_execute(
    config_path: Path,
    stages: Sequence[str],
    out: Optional[Path],
    seed: Optional[int],
    threads: Optional[int],
    verbose: bool,
    snapshot: Optional[Path] = None,
) -> None:
    """
    Load a config, run the requested stages and map failures to exit codes.

    Exit code 1 covers config, snapshot and file errors; exit code 2 a solver
    that did not converge (the partial summary is still written); exit code 3
    a finished run with failed checks.
    """
    hitmonchan_setup_logging(verbose)
    hitmonchan_show_banner()
    console.print("")
    code = 0
    try:
        config = alakazam_load_config(config_path).with_overrides(seed=seed, out=out, threads=threads)
        if verbose:
            hitmonchan_show_progress(f"Loaded experiment '{config.name}' from {config_path}")
        field_in = None
        if snapshot is not None:
            field_in = snorlax_load_snapshot(snapshot)
            if verbose:
                hitmonchan_show_progress(f"Analyzing snapshot: {snapshot}")
        if verbose:
            hitmonchan_show_progress(f"Running stages: {', '.join(stages)}")
        result = machamp_run_pipeline(config, stages, field_in)
        _report(result)
        if not result.passed:
            code = EXIT_CHECKS
    except ConfigError as e:
        primeape_show_error("Invalid configuration", e)
        code = EXIT_ERROR
    except SnapshotError as e:
        primeape_show_error("Unreadable snapshot", e)
        code = EXIT_ERROR
    except SolverConvergenceError as e:
        primeape_show_error("Solver did not converge; partial summary written", e)
        code = EXIT_SOLVER
    except (OSError, ValueError) as e:
        primeape_show_error("Experiment failed", e)
        code = EXIT_ERROR
    if code:
        raise typer.Exit(code=code)


@app.command()
def solve(
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """
    Solve the configured problem and store the field snapshot.

    Examples:
        $ signorinilab solve -c configs/signorini_growth.cfg
        $ signorinilab solve -c configs/drift_gauge.cfg -o results/drift
    """
    machamp_execute(config, ("solve",), out, seed, threads, verbose)


@app.command()
def analyze(
    config: Path = CONFIG_OPTION,
    snapshot: Optional[Path] = typer.Option(
        None, "--snapshot", "-s", help="Analyze a stored field instead of solving"
    ),
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """
    Fit growth exponents of the configured functionals.

    Examples:
        $ signorinilab analyze -c configs/caloric_phi.cfg
        $ signorinilab analyze -c configs/signorini_growth.cfg -s results/field.sgnl
    """
    machamp_execute(config, ("analyze",), out, seed, threads, verbose, snapshot)


@app.command()
def certify(
    config: Path = CONFIG_OPTION,
    snapshot: Optional[Path] = typer.Option(
        None, "--snapshot", "-s", help="Certify a stored field instead of solving"
    ),
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """
    Measure the almost-minimizer gauge (and the frozen/deskewed transfer when configured).

    Examples:
        $ signorinilab certify -c configs/minimizer_sanity.cfg
        $ signorinilab certify -c configs/frozen_transfer.cfg --threads 4
    """
    machamp_execute(config, ("certify", "transfer"), out, seed, threads, verbose, snapshot)


@app.command()
def run(
    config: Path = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    verbose: bool = VERBOSE_OPTION,
) -> None:
    """
    Run every configured stage: solve, analyze, certify, transfer.

    Examples:
        $ signorinilab run -c configs/caloric_phi.cfg
        $ signorinilab run -c configs/drift_gauge.cfg --seed 7 -o results/seed7
    """
    machamp_execute(config, STAGES, out, seed, threads, verbose)


@app.command()
def info(
    path: Path = typer.Argument(..., help="Snapshot file"),
) -> None:
    """
    Show the header of a field snapshot.

    Examples:
        $ signorinilab info results/field.sgnl
    """
    try:
        header = snorlax_inspect_snapshot(path)
    except SnapshotError as e:
        primeape_show_error("Unreadable snapshot", e)
        raise typer.Exit(code=EXIT_ERROR)
    create_section(str(path))
    table = create_table("Snapshot header")
    table.add_column("Field", style="bold")
    table.add_column("Value", style="number")
    table.add_row("version", str(header.version))
    table.add_row("n", str(header.n))
    table.add_row("dims", " x ".join(str(d) for d in header.dims))
    table.add_row("tau", repr(header.spacings[0]))
    table.add_row("h", repr(header.spacings[1]))
    table.add_row("nodes", str(header.node_count))
    console.print(table)


def main() -> None:
    """Entry point for the application."""
    try:
        app(prog_name="signorinilab")
    except Exception as e:
        primeape_show_error("An unexpected error occurred", e)
        raise typer.Exit(code=EXIT_ERROR)


if __name__ == "__main__":
    main()
