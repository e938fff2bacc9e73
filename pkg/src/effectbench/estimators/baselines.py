"""
Reference estimators used to exercise the benchmark end to end.

They are deliberately simple and of different quality:

- DIFF_IN_MEANS predicts the group means for every unit.
- S_LEARNER_LINEAR fits one least-squares model on [1, x, t] and predicts
  at t=0 and t=1.
- KNN_MATCHING keeps the factual outcome and imputes the counterfactual from
  the nearest units of the opposite group.
"""
from __future__ import annotations
import logging
from concurrent.futures import Executor
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field, field_validator
from scipy.spatial.distance import cdist

from effectbench.errors import EstimationError, ValidationError
from effectbench.models.outcomes import ModelPrediction, PotentialOutcomeTable
from effectbench.models.realization import SimulationRealization

log = logging.getLogger(__name__)

RIDGE_JITTER = 1e-10


class EstimatorKind(str, Enum):
    DIFF_IN_MEANS = "DIFF_IN_MEANS"
    S_LEARNER_LINEAR = "S_LEARNER_LINEAR"
    KNN_MATCHING = "KNN_MATCHING"


class EstimatorSpec(BaseModel):
    name: str = Field(..., min_length=1)
    kind: EstimatorKind
    hyperparams: Dict[str, float] = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def check_name(cls, v):
        if v.strip() != v or "," in v:
            raise ValueError("estimator names cannot contain commas or surrounding spaces")
        return v

    @property
    def n_neighbors(self) -> int:
        return int(self.hyperparams.get("n_neighbors", 1))


DEFAULT_ESTIMATORS = [
    EstimatorSpec(name="diff_in_means", kind=EstimatorKind.DIFF_IN_MEANS),
    EstimatorSpec(name="s_learner_linear", kind=EstimatorKind.S_LEARNER_LINEAR),
    EstimatorSpec(name="knn_matching", kind=EstimatorKind.KNN_MATCHING, hyperparams={"n_neighbors": 1}),
]


def _diff_in_means(r: SimulationRealization) -> Tuple[np.ndarray, np.ndarray]:
    treated = r.treated
    mu1 = float(r.y_factual[treated].mean())
    mu0 = float(r.y_factual[~treated].mean())
    return np.full(r.n_units, mu0), np.full(r.n_units, mu1)


def _solve_normal_equations(design: np.ndarray, y: np.ndarray) -> np.ndarray:
    gram = design.T @ design
    rhs = design.T @ y
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        log.debug("Singular design in S-learner; adding ridge jitter")
        gram = gram + RIDGE_JITTER * np.eye(gram.shape[0])
    try:
        return scipy.linalg.solve(gram, rhs, assume_a="sym")
    except np.linalg.LinAlgError as e:
        raise EstimationError(f"Least-squares fit failed: {e}") from e


def _s_learner_linear(r: SimulationRealization) -> Tuple[np.ndarray, np.ndarray]:
    ones = np.ones((r.n_units, 1))
    x = r.covariates
    design = np.hstack([ones, x, r.t[:, None]])
    beta = _solve_normal_equations(design, r.y_factual)
    base = np.hstack([ones, x]) @ beta[:-1]
    return base, base + beta[-1]


def _knn_matching(r: SimulationRealization, n_neighbors: int) -> Tuple[np.ndarray, np.ndarray]:
    if n_neighbors < 1:
        raise ValidationError(f"n_neighbors must be >= 1, got {n_neighbors}")
    treated_idx = np.flatnonzero(r.treated)
    control_idx = np.flatnonzero(~r.treated)
    y0 = r.y_factual.copy()
    y1 = r.y_factual.copy()

    def impute(units: np.ndarray, pool: np.ndarray) -> np.ndarray:
        k = min(n_neighbors, pool.size)
        dist = cdist(r.covariates[units], r.covariates[pool], metric="euclidean")
        # Stable sort: equal distances keep the lowest unit index first.
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
        return r.y_factual[pool][nearest].mean(axis=1)

    y0[treated_idx] = impute(treated_idx, control_idx)
    y1[control_idx] = impute(control_idx, treated_idx)
    return y0, y1


def fit_predict(spec: EstimatorSpec, realization: SimulationRealization) -> Tuple[np.ndarray, np.ndarray]:
    """Return per-unit (y0_hat, y1_hat) for one realization."""
    if realization.n_treated == 0 or realization.n_control == 0:
        raise EstimationError(
            f"Simulation {realization.sim_id}: estimator '{spec.name}' needs treated and control units "
            f"(treated={realization.n_treated}, control={realization.n_control})"
        )
    if spec.kind is EstimatorKind.DIFF_IN_MEANS:
        return _diff_in_means(realization)
    if spec.kind is EstimatorKind.S_LEARNER_LINEAR:
        return _s_learner_linear(realization)
    if spec.kind is EstimatorKind.KNN_MATCHING:
        return _knn_matching(realization, spec.n_neighbors)
    raise ValidationError(f"Unknown estimator kind: {spec.kind}")


def check_unique_names(specs: Sequence[EstimatorSpec]) -> None:
    names = [s.name for s in specs]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise ValidationError(f"Estimator names must be unique; duplicated: {', '.join(dupes)}")


def predict_table(realization: SimulationRealization, specs: Sequence[EstimatorSpec]) -> PotentialOutcomeTable:
    check_unique_names(specs)
    predictions = {}
    for spec in specs:
        y0_hat, y1_hat = fit_predict(spec, realization)
        predictions[spec.name] = ModelPrediction(y0_hat=y0_hat, y1_hat=y1_hat)
    return PotentialOutcomeTable(
        sim_id=realization.sim_id,
        y0_true=realization.y0_true,
        y1_true=realization.y1_true,
        predictions=predictions,
        t=realization.t,
    )


def predict_tables(
    realizations: Sequence[SimulationRealization],
    specs: Sequence[EstimatorSpec],
    executor: Optional[Executor] = None,
) -> List[PotentialOutcomeTable]:
    check_unique_names(specs)
    if executor is None:
        return [predict_table(r, specs) for r in realizations]
    return list(executor.map(predict_table, realizations, [list(specs)] * len(realizations)))


__all__ = [
    "EstimatorKind",
    "EstimatorSpec",
    "DEFAULT_ESTIMATORS",
    "fit_predict",
    "check_unique_names",
    "predict_table",
    "predict_tables",
]
