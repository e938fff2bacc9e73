"""
Population and individual level error metrics.

Both metrics are computed from the residual individual effect
``(y1_true - y0_true) - (y1_hat - y0_hat)`` summed with ``math.fsum`` so the
result does not depend on unit order.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from effectbench.errors import ValidationError
from effectbench.models.outcomes import ErrorMatrix, Metric, PotentialOutcomeTable

log = logging.getLogger(__name__)


def _residual_ite(table: PotentialOutcomeTable, model: str) -> np.ndarray:
    pred = table.prediction(model)
    return (table.y1_true - table.y0_true) - (pred.y1_hat - pred.y0_hat)


def ate_error(table: PotentialOutcomeTable, model: str) -> float:
    """Absolute error on the average treatment effect."""
    residual = _residual_ite(table, model)
    return abs(math.fsum(residual) / residual.size)


def pehe(table: PotentialOutcomeTable, model: str) -> float:
    """Mean squared error between true and estimated individual effects.

    This is the mean of squares, not its root. Use ``root_pehe`` for display.
    """
    residual = _residual_ite(table, model)
    return math.fsum(residual * residual) / residual.size


def root_pehe(value: float) -> float:
    return math.sqrt(value)


_METRIC_FUNCS = {
    Metric.ATE_ABS: ate_error,
    Metric.PEHE: pehe,
}


def metric_value(table: PotentialOutcomeTable, model: str, metric: Metric) -> float:
    return _METRIC_FUNCS[Metric(metric)](table, model)


def build_error_matrix(tables: Sequence[PotentialOutcomeTable], metric: Metric) -> ErrorMatrix:
    """Assemble the per-simulation, per-model error grid for one metric.

    Simulations keep input order; models keep the declaration order of the
    first table. Every table must expose the same model set.
    """
    tables = list(tables)
    if not tables:
        raise ValidationError("Cannot build an error matrix from zero simulations")

    models = tables[0].models
    expected = set(models)
    offenders = [
        f"sim {t.sim_id} (models: {', '.join(t.models) or 'none'})"
        for t in tables
        if set(t.models) != expected
    ]
    if offenders:
        raise ValidationError(
            f"Inconsistent model sets; expected {', '.join(models)}. Offending: " + "; ".join(offenders)
        )

    metric = Metric(metric)
    values = np.array([[metric_value(t, m, metric) for m in models] for t in tables], dtype=np.float64)
    log.debug(f"Built {metric.value} error matrix: {len(tables)} sims x {len(models)} models")
    return ErrorMatrix(metric=metric, models=models, sims=tuple(t.sim_id for t in tables), values=values)


@dataclass(frozen=True)
class ErrorSummary:
    model: str
    mean: float
    std: float
    median: float
    maximum: float


def summarize_errors(errors: ErrorMatrix) -> List[ErrorSummary]:
    """Per-model mean/std/median/max: the plain mean-error comparison."""
    rows = []
    for j, model in enumerate(errors.models):
        col = errors.values[:, j]
        rows.append(
            ErrorSummary(
                model=model,
                mean=math.fsum(col) / col.size,
                std=float(np.std(col, ddof=1)) if col.size > 1 else 0.0,
                median=float(np.median(col)),
                maximum=float(col.max()),
            )
        )
    return rows


__all__ = [
    "ate_error",
    "pehe",
    "root_pehe",
    "metric_value",
    "build_error_matrix",
    "ErrorSummary",
    "summarize_errors",
]
