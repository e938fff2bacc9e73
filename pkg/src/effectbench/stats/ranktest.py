"""
Friedman rank test.

Ranks are computed within each simulation (smaller error, better rank) with
ties sharing the mean of the ranks they span. The statistic is the chi-square
form, without the Iman-Davenport correction.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gammaincc
from scipy.stats import rankdata

from effectbench.errors import DomainError, ValidationError
from effectbench.models.outcomes import ErrorMatrix

log = logging.getLogger(__name__)

P_VALUE_DISPLAY_FLOOR = 1e-16


@dataclass(frozen=True)
class RankSummary:
    models: Tuple[str, ...]
    per_sim_ranks: np.ndarray
    avg_ranks: np.ndarray
    n_sims: int
    statistic: Optional[float] = None
    p_value: Optional[float] = None

    @property
    def k(self) -> int:
        return len(self.models)

    @property
    def dof(self) -> int:
        return self.k - 1

    def avg_rank(self, model: str) -> float:
        return float(self.avg_ranks[self.models.index(model)])


def friedman_ranks(errors: ErrorMatrix) -> RankSummary:
    k, n = errors.n_models, errors.n_sims
    if k < 2 or n < 2:
        raise ValidationError(f"Friedman test needs at least 2 models and 2 simulations (got k={k}, n={n})")

    ranks = rankdata(errors.values, method="average", axis=1).astype(np.float64)

    # Ranks are multiples of 0.5, so each row sum is exact.
    expected = k * (k + 1) / 2
    row_sums = ranks.sum(axis=1)
    if not np.all(row_sums == expected):
        bad = int(np.flatnonzero(row_sums != expected)[0])
        raise ValidationError(f"Rank row {bad} sums to {row_sums[bad]}, expected {expected}")

    avg = np.array([math.fsum(ranks[:, j]) / n for j in range(k)], dtype=np.float64)
    ranks.setflags(write=False)
    avg.setflags(write=False)
    return RankSummary(models=errors.models, per_sim_ranks=ranks, avg_ranks=avg, n_sims=n)


def friedman_statistic(ranks: RankSummary) -> RankSummary:
    k, n = ranks.k, ranks.n_sims
    sum_sq = math.fsum(float(r) * float(r) for r in ranks.avg_ranks)
    stat = (12.0 * n / (k * (k + 1))) * (sum_sq - k * (k + 1) ** 2 / 4.0)
    # Rounding can push an all-tie statistic a hair below zero.
    stat = max(stat, 0.0)
    p_value = chi_square_sf(stat, ranks.dof)
    log.info(f"Friedman F_f={stat:.6g} (dof={ranks.dof}, n={n}), p={p_value:.6g}")
    return replace(ranks, statistic=stat, p_value=p_value)


def friedman_test(errors: ErrorMatrix) -> RankSummary:
    return friedman_statistic(friedman_ranks(errors))


def chi_square_sf(x: float, dof: int) -> float:
    """Chi-square survival function, Q(dof/2, x/2).

    Evaluated with the regularized upper incomplete gamma function, which
    uses the power series for x/2 < dof/2 (or x/2 < 1) and the continued
    fraction otherwise.
    """
    if int(dof) != dof or dof < 1:
        raise DomainError(f"Degrees of freedom must be a positive integer, got {dof}")
    if math.isnan(x) or x < 0:
        raise DomainError(f"Chi-square argument must be >= 0, got {x}")
    if x == 0:
        return 1.0
    return float(min(max(gammaincc(dof / 2.0, x / 2.0), 0.0), 1.0))


def ranking_order(ranks: RankSummary) -> List[str]:
    """Models from best (lowest) to worst average rank; ties by model name."""
    return [m for _, m in sorted(zip(ranks.avg_ranks.tolist(), ranks.models))]


def format_p_value(p: float) -> str:
    return f"{max(p, P_VALUE_DISPLAY_FLOOR):.6g}"


__all__ = [
    "RankSummary",
    "friedman_ranks",
    "friedman_statistic",
    "friedman_test",
    "chi_square_sf",
    "ranking_order",
    "format_p_value",
    "P_VALUE_DISPLAY_FLOOR",
]
