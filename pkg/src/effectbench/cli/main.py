from __future__ import annotations
import json
import signal
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import typer
from rich import print
from rich.console import Console
from rich.markup import escape
from rich.table import Table

from effectbench import __version__
from effectbench.config.settings import BenchmarkConfig, load_config
from effectbench.errors import EffectBenchError, InputReadError, StageError, ValidationError
from effectbench.models.outcomes import Metric
from effectbench.pipeline import generate_dataset, posthoc_only, profile_only, run_benchmark, validate_inputs
from effectbench.stats.posthoc import format_apv
from effectbench.stats.profiles import Scale
from effectbench.stats.ranktest import format_p_value, ranking_order
from effectbench.utils.logging import setup_logging
from effectbench.utils.shutdown import (
    cleanup_staging_dirs,
    is_shutdown_requested,
    request_shutdown,
    reset_shutdown_state,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_INTERRUPTED = 130  # 128 + SIGINT


def _signal_handler(signum, frame):
    """First Ctrl-C: stop at the next stage boundary. Second: remove staging output and quit."""
    if is_shutdown_requested():
        print("\n[red]Force quit. Cleaning up...[/red]")
        cleanup_staging_dirs()
        raise SystemExit(EXIT_INTERRUPTED)
    request_shutdown()
    print("\n[yellow]Interrupt received. Stopping after the current stage... Press Ctrl-C again to force quit.[/yellow]")


app = typer.Typer(
    help="Benchmark causal-effect estimators with performance profiles and Bergmann-Hommel post-hoc tests",
    context_settings={"help_option_names": ["-h", "--help"]},
)


def version_callback(value: bool):
    if value:
        print(f"[bold cyan]effectbench v{__version__}[/bold cyan]")
        raise typer.Exit()


@app.callback()
def main(
    version: Optional[bool] = typer.Option(
        None, "--version", callback=version_callback, is_eager=True, help="Show version and exit."
    )
):
    """
    effectbench: performance profiles, Friedman ranks and Bergmann-Hommel
    adjusted p-values for causal-effect estimators.
    """


def format_duration(seconds: float) -> str:
    m, s = divmod(int(seconds), 60)
    h, m = divmod(m, 60)
    parts = []
    if h > 0:
        parts.append(f"{h}h")
    if m > 0:
        parts.append(f"{m}m")
    parts.append(f"{s}s")
    return " ".join(parts)


def _exit_code(error: BaseException) -> int:
    if isinstance(error, StageError):
        error = error.cause
    if isinstance(error, (ValidationError, InputReadError)):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


@contextmanager
def _command(verbose: int, cfg: Optional[dict] = None) -> Iterator[Console]:
    """Common setup and error-to-exit-code mapping for every command."""
    reset_shutdown_state()
    signal.signal(signal.SIGINT, _signal_handler)
    console = Console(stderr=True)
    setup_logging(cfg or {}, verbose=verbose, console=console)
    try:
        yield console
    except typer.Exit:
        raise
    except KeyboardInterrupt:
        cleanup_staging_dirs()
        print("[yellow]Interrupted. No report was written.[/yellow]")
        raise typer.Exit(code=EXIT_INTERRUPTED)
    except (EffectBenchError, OSError) as e:
        code = _exit_code(e)
        stage = f" in stage '{e.stage}'" if isinstance(e, StageError) else ""
        print(f"[red]Error{stage}:[/red] {escape(str(e))}")
        raise typer.Exit(code=code)


def _load(config: Optional[Path]) -> BenchmarkConfig:
    if config:
        return BenchmarkConfig.from_file(config)
    try:
        return load_config()
    except InputReadError:
        return BenchmarkConfig().apply_env_overrides()


def _verbose_option():
    return typer.Option(0, "--verbose", "-v", count=True, help="Verbosity level: 0=Standard, 1=Info, 2=Debug")


def _config_option():
    return typer.Option(None, "--config", "-c", help="Path to a YAML or JSON config file")


@app.command()
def run(
    config: Optional[Path] = _config_option(),
    metric: Optional[List[Metric]] = typer.Option(
        None, "--metric", "-m", case_sensitive=False, help="Metric(s) to analyse. Repeat for several. Overrides config."
    ),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Significance level in (0, 1). Overrides config."),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory. Overrides config and environment."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Synthetic data seed. Overrides config and environment."),
    scale: Optional[Scale] = typer.Option(None, "--scale", case_sensitive=False, help="Profile x-axis scale."),
    verbose: int = _verbose_option(),
):
    """
    Run the full benchmark and write the report bundle.

    Per metric the output directory holds profiles (CSV, SVG, summary), the
    Friedman ranking, Bergmann-Hommel APVs, the outperformance table, the
    mean-error summary and the error matrix; manifest.json sits at the root.
    """
    start = time.time()
    with _command(verbose) as console:
        settings = _load(config).with_overrides(
            output_dir=out, seed=seed, alpha=alpha, metrics=metric, scale=scale
        )
        setup_logging(settings.logging, verbose=verbose, console=console)
        bundle = run_benchmark(settings)

        table = Table(title="Benchmark summary")
        table.add_column("Metric")
        table.add_column("Best model")
        table.add_column("F_f", justify="right")
        table.add_column("p-value", justify="right")
        table.add_column("Rejected", justify="right")
        for m, report in bundle.reports.items():
            ranks = report.ranks
            table.add_row(
                m.value,
                ranking_order(ranks)[0],
                f"{ranks.statistic:.2f}",
                format_p_value(ranks.p_value),
                f"{len(report.posthoc.rejected)}/{len(report.posthoc.hypotheses)}",
            )
        print(table)
        print(f"[green]Report written to {bundle.output_dir}[/green] ({format_duration(time.time() - start)})")


@app.command()
def validate(
    config: Optional[Path] = _config_option(),
    verbose: int = _verbose_option(),
):
    """Check the configured inputs without running. Exits 2 if any problem is found."""
    with _command(verbose):
        settings = _load(config)
        diagnostics = validate_inputs(settings)
        if not diagnostics:
            print("[green]No problems found.[/green]")
            return
        table = Table(title=f"{len(diagnostics)} problem(s) found")
        table.add_column("Source")
        table.add_column("Row", justify="right")
        table.add_column("Column")
        table.add_column("Problem")
        for d in diagnostics:
            table.add_row(escape(d.source), "" if d.row is None else str(d.row), escape(d.column or ""), escape(d.message))
        print(table)
        raise typer.Exit(code=EXIT_VALIDATION)


@app.command("gen-synthetic")
def gen_synthetic(
    config: Optional[Path] = _config_option(),
    out: Path = typer.Option(Path("synthetic_data"), "--out", "-o", help="Directory for the realization CSV files"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the configured seed"),
    n_sims: Optional[int] = typer.Option(None, "--n-sims", help="Override the number of simulations"),
    n_units: Optional[int] = typer.Option(None, "--n-units", help="Override the units per simulation"),
    verbose: int = _verbose_option(),
):
    """Write synthetic hidden-confounder realizations in the IHDP/NPCI column layout."""
    with _command(verbose):
        settings = _load(config).with_overrides(seed=seed, n_sims=n_sims, n_units=n_units)
        paths = generate_dataset(settings.data.synthetic, out, max_workers=settings.concurrency.max_workers)
        print(f"[green]Wrote {len(paths)} realizations to {out}[/green]")


@app.command("profile-only")
def profile_only_cmd(
    errors: Path = typer.Option(..., "--errors", "-e", help="Error CSV: sim,<model1>,<model2>,..."),
    metric: Metric = typer.Option(Metric.PEHE, "--metric", "-m", case_sensitive=False, help="Metric the errors measure"),
    scale: Scale = typer.Option(Scale.LOG10, "--scale", case_sensitive=False, help="Profile x-axis scale"),
    out: Path = typer.Option(Path("reports/profiles"), "--out", "-o", help="Output directory"),
    verbose: int = _verbose_option(),
):
    """Performance profiles from precomputed per-simulation errors."""
    with _command(verbose):
        curves = profile_only(errors, out, metric=metric, scale=scale)
        print(f"[green]Wrote profiles for {len(curves)} models to {out}[/green]")


@app.command("posthoc-only")
def posthoc_only_cmd(
    errors: Optional[Path] = typer.Option(None, "--errors", "-e", help="Error CSV: sim,<model1>,<model2>,..."),
    p_values: Optional[Path] = typer.Option(None, "--p-values", "-p", help="Raw p-value CSV: model_a,model_b,p_raw"),
    alpha: float = typer.Option(0.05, "--alpha", help="Significance level in (0, 1)"),
    metric: Metric = typer.Option(Metric.PEHE, "--metric", "-m", case_sensitive=False, help="Metric the errors measure"),
    out: Path = typer.Option(Path("reports/posthoc"), "--out", "-o", help="Output directory"),
    verbose: int = _verbose_option(),
):
    """Bergmann-Hommel adjusted p-values from an error CSV or from raw pairwise p-values."""
    with _command(verbose):
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"--alpha must lie in (0, 1), got {alpha}")
        report = posthoc_only(out, alpha=alpha, errors_csv=errors, p_values_csv=p_values, metric=metric)
        table = Table(title=f"Bergmann-Hommel APVs (alpha = {alpha})")
        table.add_column("i")
        table.add_column("Hypothesis")
        table.add_column("p_Berg", justify="right")
        table.add_column("Decision")
        for h in report.ordered():
            table.add_row(f"H{h.index}", h.label, format_apv(h.apv), h.decision.label)
        print(table)
        print(f"[green]Wrote post-hoc tables to {out}[/green]")


@app.command()
def schema(
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the schema to this file instead of stdout"),
):
    """Print the JSON schema of the benchmark config file."""
    text = json.dumps(BenchmarkConfig.model_json_schema(), indent=2, sort_keys=True)
    if out:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
        print(f"[green]Schema written to {out}[/green]")
    else:
        typer.echo(text)


if __name__ == "__main__":
    app()
