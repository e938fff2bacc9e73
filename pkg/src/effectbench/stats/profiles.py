"""
Dolan-More performance ratios and cumulative performance profiles.

A ratio compares a model's error on one simulation with the best error on
that simulation. When the best error is exactly zero, models that also reach
zero get ratio 1 and every other model is marked FAILED (infinite ratio),
which profiles never count.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np

from effectbench.errors import DomainError, ModelLookupError
from effectbench.models.outcomes import ErrorMatrix, Metric

log = logging.getLogger(__name__)

FAILED = math.inf


class Scale(str, Enum):
    LINEAR = "LINEAR"
    LOG10 = "LOG10"


@dataclass(frozen=True)
class RatioMatrix:
    metric: Metric
    models: Tuple[str, ...]
    sims: Tuple[int, ...]
    values: np.ndarray

    @property
    def failed(self) -> np.ndarray:
        return np.isinf(self.values)

    @property
    def n_sims(self) -> int:
        return len(self.sims)

    def column(self, model: str) -> np.ndarray:
        try:
            return self.values[:, self.models.index(model)]
        except ValueError:
            raise ModelLookupError(f"Model '{model}' not in ratio matrix") from None


@dataclass(frozen=True)
class ProfileCurve:
    """Right-continuous step function p_m(a).

    ``breakpoints`` holds (ratio, cumulative fraction) pairs sorted by ratio.
    """
    model: str
    breakpoints: Tuple[Tuple[float, float], ...]
    n_sims: int

    @property
    def ratios(self) -> List[float]:
        return [a for a, _ in self.breakpoints]

    @property
    def fractions(self) -> List[float]:
        return [p for _, p in self.breakpoints]


def performance_ratios(errors: ErrorMatrix) -> RatioMatrix:
    values = errors.values
    row_min = values.min(axis=1, keepdims=True)
    ratios = np.empty_like(values)
    positive = row_min[:, 0] > 0
    # Tiny positive minima can overflow; clamp so only zero-minimum rows yield FAILED.
    with np.errstate(over="ignore"):
        ratios[positive] = np.minimum(values[positive] / row_min[positive], np.finfo(np.float64).max)
    zero_rows = ~positive
    if zero_rows.any():
        sub = values[zero_rows]
        ratios[zero_rows] = np.where(sub == 0.0, 1.0, FAILED)
        log.debug(f"{int(zero_rows.sum())} simulations have a zero best error; positive errors marked FAILED")
    # Division can round the row minimum itself to something other than 1.0.
    ratios[values == row_min] = 1.0
    ratios.setflags(write=False)
    return RatioMatrix(metric=errors.metric, models=errors.models, sims=errors.sims, values=ratios)


def profile_curve(ratios: RatioMatrix, model: str) -> ProfileCurve:
    col = ratios.column(model)
    finite = np.sort(col[np.isfinite(col)])
    distinct, counts = np.unique(finite, return_counts=True)
    cumulative = np.cumsum(counts)
    n = ratios.n_sims
    breakpoints = tuple((float(a), float(c) / n) for a, c in zip(distinct, cumulative))
    return ProfileCurve(model=model, breakpoints=breakpoints, n_sims=n)


def profile_curves(ratios: RatioMatrix) -> List[ProfileCurve]:
    return [profile_curve(ratios, m) for m in ratios.models]


def profile_value(curve: ProfileCurve, a: float) -> float:
    if not a >= 1.0:
        raise DomainError(f"Profile argument must be >= 1, got {a}")
    ratios = curve.ratios
    idx = int(np.searchsorted(ratios, a, side="right"))
    if idx == 0:
        return 0.0
    return curve.breakpoints[idx - 1][1]


def max_finite_ratio(curves: Sequence[ProfileCurve]) -> float:
    ratios = [a for c in curves for a in c.ratios]
    return max(ratios) if ratios else 1.0


@dataclass(frozen=True)
class ProfileSummary:
    model: str
    efficiency: float  # p_m(1): share of simulations where the model is best
    robustness: float  # p_m at the largest finite ratio of any model
    failed: int


def profile_summary(ratios: RatioMatrix, curves: Sequence[ProfileCurve]) -> List[ProfileSummary]:
    a_max = max_finite_ratio(curves)
    failed: Dict[str, int] = {m: int(np.isinf(ratios.column(m)).sum()) for m in ratios.models}
    return [
        ProfileSummary(
            model=c.model,
            efficiency=profile_value(c, 1.0),
            robustness=profile_value(c, a_max),
            failed=failed.get(c.model, 0),
        )
        for c in curves
    ]


__all__ = [
    "FAILED",
    "Scale",
    "RatioMatrix",
    "ProfileCurve",
    "performance_ratios",
    "profile_curve",
    "profile_curves",
    "profile_value",
    "max_finite_ratio",
    "ProfileSummary",
    "profile_summary",
]
