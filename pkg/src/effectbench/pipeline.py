"""
End-to-end benchmark orchestration.

Stages run in order (load, estimate, then per metric: metrics, profiles,
ranktest, posthoc, export). Every output is written into a staging directory
beside the target and moved into place only once all stages succeed; any
failure removes the staging directory and surfaces as a StageError naming
the stage.
"""
from __future__ import annotations
import logging
import os
import shutil
import uuid
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple

from effectbench.config.settings import BenchmarkConfig, ConcurrencyConfig
from effectbench.data.ihdp import check_ihdp_schema, load_realizations, write_realization
from effectbench.data.synthetic import SyntheticConfig, generate_synthetic
from effectbench.errors import InputReadError, ParseError, StageError, ValidationError
from effectbench.estimators.baselines import predict_tables
from effectbench.io.csv_input import (
    check_error_csv,
    outcome_files,
    read_error_matrix,
    read_outcome_dir,
    read_outcome_table,
    read_p_values,
    write_error_matrix,
    write_outcome_table,
)
from effectbench.io.export import (
    export_profiles,
    write_error_summary,
    write_friedman_table,
    write_outperformance,
    write_posthoc_table,
    write_profile_summary,
)
from effectbench.models.diagnostic import Diagnostic
from effectbench.models.outcomes import ErrorMatrix, Metric, PotentialOutcomeTable
from effectbench.models.realization import DataSource
from effectbench.stats.metrics import build_error_matrix, summarize_errors
from effectbench.stats.outperformance import OutperformanceSummary, outperformance
from effectbench.stats.posthoc import (
    MAX_MODELS,
    PosthocReport,
    bergmann_hommel_apv,
    enumerate_exhaustive_sets,
    hypotheses_from_p_values,
    pairwise_p_values,
)
from effectbench.stats.profiles import ProfileCurve, ProfileSummary, Scale, performance_ratios, profile_curves, profile_summary
from effectbench.stats.ranktest import RankSummary, friedman_test
from effectbench.utils.logging import log_memory_usage
from effectbench.utils.manifest import MANIFEST_NAME, build_manifest, hash_file, hash_inputs, read_manifest, write_manifest
from effectbench.utils.shutdown import checkpoint, register_staging_dir, unregister_staging_dir

log = logging.getLogger(__name__)

STAGES = ("load", "estimate", "metrics", "profiles", "ranktest", "posthoc", "export")
PREDICTIONS_DIR = "predictions"


@dataclass
class MetricReport:
    metric: Metric
    errors: ErrorMatrix
    curves: List[ProfileCurve]
    profile_summary: List[ProfileSummary]
    ranks: RankSummary
    posthoc: PosthocReport
    outperformance: OutperformanceSummary


@dataclass
class ReportBundle:
    output_dir: Path
    reports: Dict[Metric, MetricReport] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)
    manifest_path: Optional[Path] = None


def metric_dirname(metric: Metric) -> str:
    return Metric(metric).value.lower()


@contextmanager
def _stage(name: str, context: str = "") -> Iterator[None]:
    if name not in STAGES:
        raise ValueError(f"Unknown stage '{name}'; expected one of {', '.join(STAGES)}")
    checkpoint(name)
    label = f"{name} {context}".strip()
    log.debug(f"Stage start: {label}")
    try:
        yield
    except (StageError, KeyboardInterrupt):
        raise
    except Exception as e:
        raise StageError(name, e) from e
    log_memory_usage(log, label)


@contextmanager
def _executor(concurrency: ConcurrencyConfig) -> Iterator[Optional[Executor]]:
    if concurrency.max_workers <= 1:
        yield None
        return
    pool_cls = ProcessPoolExecutor if concurrency.mode == "process" else ThreadPoolExecutor
    with pool_cls(max_workers=concurrency.max_workers) as ex:
        yield ex


@contextmanager
def _staging(out_dir: Path) -> Iterator[Path]:
    """Yield a fresh staging directory; publish it into ``out_dir`` on success."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    staging = out_dir.parent / f".{out_dir.name}.staging.{uuid.uuid4().hex[:8]}"
    staging.mkdir()
    register_staging_dir(staging)
    try:
        yield staging
        _publish(staging, out_dir)
    finally:
        unregister_staging_dir(staging)
        if staging.exists():
            shutil.rmtree(staging, ignore_errors=True)


def _previous_report_entries(out_dir: Path) -> List[str]:
    """Top-level names written by the report already in ``out_dir``, per its manifest."""
    path = out_dir / MANIFEST_NAME
    if not path.is_file():
        return []
    try:
        outputs = read_manifest(path).get("outputs", {})
    except (OSError, ValueError, AttributeError) as e:
        log.warning(f"Ignoring unreadable previous manifest {path}: {e}")
        return []
    tops = {Path(name).parts[0] for name in outputs if name and not Path(name).is_absolute()}
    return sorted((tops - {".", ".."}) | {MANIFEST_NAME})


def _publish(staging: Path, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    fresh = {item.name for item in staging.iterdir()}
    for name in _previous_report_entries(out_dir):
        stale = out_dir / name
        if name in fresh or not stale.exists():
            continue
        log.info(f"Removing {stale} left by the previous report")
        if stale.is_dir():
            shutil.rmtree(stale)
        else:
            stale.unlink()
    for item in sorted(staging.iterdir()):
        target = out_dir / item.name
        if target.is_dir():
            shutil.rmtree(target)
        elif target.exists():
            target.unlink()
        os.replace(item, target)
    log.info(f"Report written to {out_dir}")


def _written_files(staging: Path) -> Dict[str, str]:
    return {
        f.relative_to(staging).as_posix(): hash_file(f)
        for f in sorted(staging.rglob("*"))
        if f.is_file()
    }


def _canonical(errors: ErrorMatrix) -> ErrorMatrix:
    """Order models by name so report content does not depend on config order."""
    return errors.reorder(sorted(errors.models))


def _check_capacity(k: int, source: str) -> None:
    if k < 2:
        raise ValidationError(f"{source}: need at least 2 models to compare, got {k}")
    if k > MAX_MODELS:
        raise ValidationError(f"{source}: at most {MAX_MODELS} models are supported, got {k}")


def _load_tables(config: BenchmarkConfig, executor: Optional[Executor]) -> Tuple[List[PotentialOutcomeTable], List[Path]]:
    data = config.data
    if data.source == "outcomes":
        directory = config.resolve_path(data.outcomes_dir)
        with _stage("load", str(directory)):
            tables = read_outcome_dir(directory)
        return tables, [directory]

    inputs: List[Path] = []
    with _stage("load"):
        if data.source == "ihdp":
            path = config.resolve_path(data.ihdp_path)
            realizations = load_realizations(
                path, limit=data.ihdp_limit, n_covariates=data.n_covariates, truth=data.truth,
                source=DataSource.IHDP,
            )
            inputs.append(path)
        else:
            realizations = generate_synthetic(data.synthetic, executor=executor)
    with _stage("estimate"):
        _check_capacity(len(config.estimators), "estimators")
        tables = predict_tables(realizations, config.estimators, executor=executor)
    return tables, inputs


def _load_error_matrices(config: BenchmarkConfig) -> Tuple[Dict[Metric, ErrorMatrix], List[Path]]:
    matrices: Dict[Metric, ErrorMatrix] = {}
    inputs: List[Path] = []
    with _stage("load"):
        for metric in config.metrics:
            if metric not in config.data.error_files:
                raise ValidationError(f"No error file configured for metric {metric.value}")
            path = config.resolve_path(config.data.error_files[metric])
            matrices[metric] = read_error_matrix(path, metric)
            inputs.append(path)
    return matrices, inputs


def analyse_metric(errors: ErrorMatrix, alpha: float) -> MetricReport:
    errors = _canonical(errors)
    metric = errors.metric
    with _stage("profiles", metric.value):
        _check_capacity(errors.n_models, f"{metric.value} errors")
        ratios = performance_ratios(errors)
        curves = profile_curves(ratios)
        summary = profile_summary(ratios, curves)
    with _stage("ranktest", metric.value):
        ranks = friedman_test(errors)
    with _stage("posthoc", metric.value):
        family = enumerate_exhaustive_sets(ranks.k)
        report = bergmann_hommel_apv(pairwise_p_values(ranks), family, alpha=alpha)
        beats = outperformance(ranks, report)
    return MetricReport(
        metric=metric,
        errors=errors,
        curves=curves,
        profile_summary=summary,
        ranks=ranks,
        posthoc=report,
        outperformance=beats,
    )


def _write_metric_report(report: MetricReport, directory: Path, scale: Scale, root_pehe: bool) -> None:
    metric = report.metric
    directory.mkdir(parents=True, exist_ok=True)
    write_error_matrix(report.errors, directory / "errors.csv")
    export_profiles(
        report.curves, scale, directory / "profiles.csv", directory / "profiles.svg",
        title=f"Performance profiles: {metric.label}",
    )
    write_profile_summary(report.profile_summary, directory / "profiles.md", metric)
    write_friedman_table(report.ranks, directory / "friedman.md", directory / "friedman.csv", metric)
    write_posthoc_table(report.posthoc, directory / "posthoc.md", directory / "posthoc.csv", metric)
    write_outperformance(report.outperformance, directory / "outperformance.md", metric)
    write_error_summary(summarize_errors(report.errors), directory / "summary.md", metric, show_root=root_pehe)


def _write_predictions(tables: List[PotentialOutcomeTable], directory: Path) -> None:
    width = max(4, len(str(max(t.sim_id for t in tables))))
    for table in tables:
        checkpoint("export")
        write_outcome_table(table, directory / f"sim_{table.sim_id:0{width}d}.csv")
    log.info(f"Wrote {len(tables)} prediction tables to {directory.name}/")


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or value != value:
        return None
    return float(value)


def _ranks_statistics(ranks: RankSummary) -> Dict:
    return {
        "models": list(ranks.models),
        "avg_ranks": [float(r) for r in ranks.avg_ranks],
        "n_sims": ranks.n_sims,
        "dof": ranks.dof,
        "statistic": _finite_or_none(ranks.statistic),
        "p_value": _finite_or_none(ranks.p_value),
    }


def _posthoc_statistics(report: PosthocReport) -> Dict:
    return {
        "alpha": report.alpha,
        "acceptance_set": sorted(report.acceptance_set),
        "hypotheses": [
            {
                "index": h.index,
                "pair": list(h.pair),
                "z": _finite_or_none(h.z),
                "p_raw": h.p_raw,
                "apv": h.apv,
                "decision": h.decision.value,
            }
            for h in report.hypotheses
        ],
    }


def _metric_statistics(report: MetricReport) -> Dict:
    return {
        "friedman": _ranks_statistics(report.ranks),
        "posthoc": _posthoc_statistics(report.posthoc),
        "profiles": {
            s.model: {"efficiency": s.efficiency, "robustness": s.robustness, "failed": s.failed}
            for s in report.profile_summary
        },
    }


def run_benchmark(config: BenchmarkConfig) -> ReportBundle:
    """Run every stage and publish the report bundle under ``config.output_dir``."""
    out_dir = config.resolve_path(config.output_dir)
    log.info(f"Running benchmark: source={config.data.source}, metrics={[m.value for m in config.metrics]}")

    tables: List[PotentialOutcomeTable] = []
    with _executor(config.concurrency) as executor:
        if config.data.source == "errors":
            matrices, inputs = _load_error_matrices(config)
        else:
            tables, inputs = _load_tables(config, executor)
            matrices = {}
            for metric in config.metrics:
                with _stage("metrics", metric.value):
                    matrices[metric] = build_error_matrix(tables, metric)

    bundle = ReportBundle(output_dir=out_dir)
    for metric in config.metrics:
        bundle.reports[metric] = analyse_metric(matrices[metric], config.alpha)

    with _staging(out_dir) as staging:
        with _stage("export"):
            for metric, report in bundle.reports.items():
                _write_metric_report(report, staging / metric_dirname(metric), config.scale, config.root_pehe)
            if config.save_predictions and config.data.source in ("synthetic", "ihdp"):
                _write_predictions(tables, staging / PREDICTIONS_DIR)
            outputs = _written_files(staging)
            manifest = build_manifest(
                config=config.model_dump(mode="json"),
                seed=config.seed if config.data.source == "synthetic" else None,
                inputs=hash_inputs(inputs),
                statistics={metric_dirname(m): _metric_statistics(r) for m, r in bundle.reports.items()},
                outputs=outputs,
            )
            write_manifest(manifest, staging / MANIFEST_NAME)
        bundle.files = [out_dir / name for name in outputs] + [out_dir / MANIFEST_NAME]
    bundle.manifest_path = out_dir / MANIFEST_NAME
    return bundle


def validate_inputs(config: BenchmarkConfig) -> List[Diagnostic]:
    """Check inputs without running the benchmark. Missing paths raise InputReadError."""
    data = config.data
    diagnostics: List[Diagnostic] = []
    k = len(config.estimators)
    if data.source in ("synthetic", "ihdp") and not 2 <= k <= MAX_MODELS:
        diagnostics.append(Diagnostic("config", f"estimators: need 2 to {MAX_MODELS} models, got {k}"))

    if data.source == "ihdp":
        diagnostics += check_ihdp_schema(config.resolve_path(data.ihdp_path), data.ihdp_limit, data.n_covariates)

    elif data.source == "outcomes":
        directory = config.resolve_path(data.outcomes_dir)
        files = outcome_files(directory)
        if not files:
            diagnostics.append(Diagnostic(str(directory), "no outcome CSV files found"))
        first_models = None
        for f in files:
            try:
                table = read_outcome_table(f)
            except ParseError as e:
                diagnostics.append(Diagnostic(str(f), str(e), row=e.line))
                continue
            except ValidationError as e:
                diagnostics.append(Diagnostic(str(f), str(e)))
                continue
            if first_models is None:
                first_models = set(table.models)
                if not 2 <= len(first_models) <= MAX_MODELS:
                    diagnostics.append(
                        Diagnostic(str(f), f"need 2 to {MAX_MODELS} models, got {len(first_models)}", row=1)
                    )
            elif set(table.models) != first_models:
                diagnostics.append(
                    Diagnostic(str(f), f"model set {sorted(table.models)} differs from {sorted(first_models)}", row=1)
                )

    elif data.source == "errors":
        for metric in config.metrics:
            if metric not in data.error_files:
                diagnostics.append(Diagnostic("config", f"no error file configured for metric {metric.value}"))
                continue
            path = config.resolve_path(data.error_files[metric])
            if not path.exists():
                raise InputReadError(f"Error file not found: {path}")
            diagnostics += check_error_csv(path)

    for d in diagnostics:
        log.warning(str(d))
    return diagnostics


def profile_only(
    errors_csv: Path,
    out_dir: Path,
    metric: Metric = Metric.PEHE,
    scale: Scale = Scale.LOG10,
) -> List[ProfileCurve]:
    """Performance profiles from a precomputed error CSV."""
    with _stage("load", str(errors_csv)):
        errors = _canonical(read_error_matrix(Path(errors_csv), metric))
    with _stage("profiles", metric.value):
        ratios = performance_ratios(errors)
        curves = profile_curves(ratios)
        summary = profile_summary(ratios, curves)
    with _staging(Path(out_dir)) as staging:
        with _stage("export"):
            export_profiles(
                curves, scale, staging / "profiles.csv", staging / "profiles.svg",
                title=f"Performance profiles: {metric.label}",
            )
            write_profile_summary(summary, staging / "profiles.md", metric)
    return curves


def posthoc_only(
    out_dir: Path,
    alpha: float = 0.05,
    errors_csv: Optional[Path] = None,
    p_values_csv: Optional[Path] = None,
    metric: Metric = Metric.PEHE,
) -> PosthocReport:
    """Friedman and Bergmann-Hommel from an error CSV, or Bergmann-Hommel alone
    from raw pairwise p-values (``model_a,model_b,p_raw``)."""
    if (errors_csv is None) == (p_values_csv is None):
        raise ValidationError("Give exactly one of an error CSV or a p-value CSV")

    if errors_csv is not None:
        with _stage("load", str(errors_csv)):
            errors = read_error_matrix(Path(errors_csv), metric)
        report = analyse_metric(errors, alpha)
        with _staging(Path(out_dir)) as staging:
            with _stage("export"):
                write_friedman_table(report.ranks, staging / "friedman.md", staging / "friedman.csv", metric)
                write_posthoc_table(report.posthoc, staging / "posthoc.md", staging / "posthoc.csv", metric)
                write_outperformance(report.outperformance, staging / "outperformance.md", metric)
        return report.posthoc

    with _stage("load", str(p_values_csv)):
        models, p_values = read_p_values(Path(p_values_csv))
        _check_capacity(len(models), str(p_values_csv))
    with _stage("posthoc"):
        hypotheses = hypotheses_from_p_values(models, p_values)
        report = bergmann_hommel_apv(hypotheses, enumerate_exhaustive_sets(len(models)), alpha=alpha)
    with _staging(Path(out_dir)) as staging:
        with _stage("export"):
            write_posthoc_table(report, staging / "posthoc.md", staging / "posthoc.csv")
    return report


def generate_dataset(config: SyntheticConfig, out_dir: Path, max_workers: int = 1) -> List[Path]:
    """Write synthetic realizations as NPCI-layout CSV files, one per simulation."""
    concurrency = ConcurrencyConfig(max_workers=max_workers)
    with _executor(concurrency) as executor:
        with _stage("load", "synthetic"):
            realizations = generate_synthetic(config, executor=executor)
    width = max(4, len(str(config.n_sims)))
    names = []
    with _staging(Path(out_dir)) as staging:
        with _stage("export"):
            for r in realizations:
                checkpoint("export")
                name = f"synthetic_{r.sim_id:0{width}d}.csv"
                write_realization(r, staging / name)
                names.append(name)
    return [Path(out_dir) / n for n in names]


__all__ = [
    "STAGES",
    "MetricReport",
    "ReportBundle",
    "metric_dirname",
    "analyse_metric",
    "run_benchmark",
    "validate_inputs",
    "profile_only",
    "posthoc_only",
    "generate_dataset",
]
