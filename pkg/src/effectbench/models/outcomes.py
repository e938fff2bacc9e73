from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from effectbench.errors import ModelLookupError, ValidationError


class Metric(str, Enum):
    ATE_ABS = "ATE_ABS"
    PEHE = "PEHE"

    @property
    def label(self) -> str:
        return "|eps_ATE|" if self is Metric.ATE_ABS else "eps_PEHE"


def _frozen_vector(values, name: str, n: Optional[int] = None) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if n is not None and arr.size != n:
        raise ValidationError(f"{name} has length {arr.size}, expected {n}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise ValidationError(f"{name} contains a non-finite value at unit {bad}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelPrediction:
    y0_hat: np.ndarray
    y1_hat: np.ndarray


@dataclass(frozen=True)
class PotentialOutcomeTable:
    """True and estimated potential outcomes of one simulation.

    ``predictions`` maps model name to its estimates and keeps declaration
    order. ``t`` is carried for provenance only and must be binary.
    """
    sim_id: int
    y0_true: np.ndarray
    y1_true: np.ndarray
    predictions: Dict[str, ModelPrediction] = field(default_factory=dict)
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        y0 = _frozen_vector(self.y0_true, "y0_true")
        n = y0.size
        object.__setattr__(self, "y0_true", y0)
        object.__setattr__(self, "y1_true", _frozen_vector(self.y1_true, "y1_true", n))
        checked: Dict[str, ModelPrediction] = {}
        for name, pred in self.predictions.items():
            checked[name] = ModelPrediction(
                y0_hat=_frozen_vector(pred.y0_hat, f"{name}_y0", n),
                y1_hat=_frozen_vector(pred.y1_hat, f"{name}_y1", n),
            )
        object.__setattr__(self, "predictions", checked)
        if self.t is not None:
            t = _frozen_vector(self.t, "t", n)
            if not np.all((t == 0.0) | (t == 1.0)):
                raise ValidationError("t must only contain 0 or 1")
            object.__setattr__(self, "t", t)

    @property
    def n_units(self) -> int:
        return int(self.y0_true.size)

    @property
    def models(self) -> Tuple[str, ...]:
        return tuple(self.predictions)

    def prediction(self, model: str) -> ModelPrediction:
        try:
            return self.predictions[model]
        except KeyError:
            raise ModelLookupError(
                f"Model '{model}' not found in simulation {self.sim_id} "
                f"(available: {', '.join(self.models) or 'none'})"
            ) from None


@dataclass(frozen=True)
class ErrorMatrix:
    """n_sims x n_models grid of nonnegative error scores for one metric."""
    metric: Metric
    models: Tuple[str, ...]
    sims: Tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        models = tuple(str(m) for m in self.models)
        sims = tuple(int(s) for s in self.sims)
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValidationError(f"Error values must be 2-D, got shape {values.shape}")
        if len(models) < 2:
            raise ValidationError(f"At least 2 models are required, got {len(models)}")
        if len(set(models)) != len(models):
            raise ValidationError(f"Duplicate model names: {models}")
        if len(sims) < 1:
            raise ValidationError("At least 1 simulation is required")
        if values.shape != (len(sims), len(models)):
            raise ValidationError(
                f"Error values have shape {values.shape}, expected {(len(sims), len(models))}"
            )
        bad = ~np.isfinite(values) | (values < 0)
        if bad.any():
            s, m = (int(i) for i in np.argwhere(bad)[0])
            raise ValidationError(
                f"Error for sim {sims[s]}, model '{models[m]}' is {values[s, m]!r}; "
                "errors must be finite and >= 0"
            )
        values.setflags(write=False)
        object.__setattr__(self, "metric", Metric(self.metric))
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "sims", sims)
        object.__setattr__(self, "values", values)

    @property
    def n_sims(self) -> int:
        return len(self.sims)

    @property
    def n_models(self) -> int:
        return len(self.models)

    def column(self, model: str) -> np.ndarray:
        return self.values[:, self.model_index(model)]

    def model_index(self, model: str) -> int:
        try:
            return self.models.index(model)
        except ValueError:
            raise ModelLookupError(f"Model '{model}' not in error matrix") from None

    def scaled(self, factor: float) -> "ErrorMatrix":
        return ErrorMatrix(self.metric, self.models, self.sims, self.values * factor)

    def reorder(self, models: Sequence[str]) -> "ErrorMatrix":
        idx = [self.model_index(m) for m in models]
        return ErrorMatrix(self.metric, tuple(models), self.sims, self.values[:, idx])


__all__ = ["Metric", "ModelPrediction", "PotentialOutcomeTable", "ErrorMatrix"]
