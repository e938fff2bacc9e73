"""
Bergmann-Hommel multiple comparison procedure.

Pairwise hypotheses H_1..H_m (m = k(k-1)/2) are indexed lexicographically by
model declaration order. An index set is exhaustive when it is exactly the
set of pairs that fall inside a common block of some partition of the
models. The acceptance set is the union of exhaustive sets I with
min p(I) > alpha/|I|; the adjusted p-value of H_i is the largest
|I| * min p(I) over exhaustive sets containing i, capped at 1.
"""
from __future__ import annotations
import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import erfc

from effectbench.errors import CapacityError, DomainError, ValidationError
from effectbench.stats.ranktest import RankSummary

log = logging.getLogger(__name__)

MAX_MODELS = 9  # Bell(9) = 21147 partitions
APV_DISPLAY_ZERO = 5e-7


class Decision(str, Enum):
    REJECTED = "REJECTED"
    RETAINED = "RETAINED"

    @property
    def label(self) -> str:
        return "Rejected" if self is Decision.REJECTED else "Failed to be rejected"


@dataclass(frozen=True)
class PairHypothesis:
    index: int  # 1-based
    pair: Tuple[str, str]
    positions: Tuple[int, int]
    z: float
    p_raw: float
    apv: Optional[float] = None
    decision: Optional[Decision] = None

    @property
    def label(self) -> str:
        return f"{self.pair[0]} vs {self.pair[1]}"


@dataclass(frozen=True)
class ExhaustiveSet:
    indices: Tuple[int, ...]  # sorted, 1-based hypothesis indices
    partition: Tuple[Tuple[int, ...], ...]  # blocks of model positions


@dataclass(frozen=True)
class ExhaustiveSetFamily:
    k: int
    sets: Tuple[ExhaustiveSet, ...]

    @property
    def m(self) -> int:
        return self.k * (self.k - 1) // 2

    @property
    def nonempty(self) -> Tuple[ExhaustiveSet, ...]:
        return tuple(s for s in self.sets if s.indices)

    def membership(self) -> np.ndarray:
        """Boolean (n_nonempty_sets x m) matrix; column i-1 marks sets holding H_i."""
        sets = self.nonempty
        mask = np.zeros((len(sets), self.m), dtype=bool)
        for row, s in enumerate(sets):
            mask[row, [i - 1 for i in s.indices]] = True
        return mask


@dataclass(frozen=True)
class PosthocReport:
    hypotheses: Tuple[PairHypothesis, ...]  # index order
    alpha: float
    acceptance_set: FrozenSet[int]

    def ordered(self) -> List[PairHypothesis]:
        """Most to least significant: ascending APV, ties by index."""
        return sorted(self.hypotheses, key=lambda h: (h.apv, h.index))

    @property
    def rejected(self) -> List[PairHypothesis]:
        return [h for h in self.hypotheses if h.decision is Decision.REJECTED]


def pair_index(i: int, j: int, k: int) -> int:
    """1-based lexicographic index of the pair (i, j), 0 <= i < j < k."""
    return i * k - i * (i + 1) // 2 + (j - i)


def _normal_two_sided_p(z: float) -> float:
    # 2 * Phi(-|z|) == erfc(|z| / sqrt(2))
    return float(min(erfc(abs(z) / math.sqrt(2.0)), 1.0))


def pairwise_p_values(ranks: RankSummary) -> List[PairHypothesis]:
    k, n = ranks.k, ranks.n_sims
    se = math.sqrt(k * (k + 1) / (6.0 * n))
    out = []
    for i, j in itertools.combinations(range(k), 2):
        z = (float(ranks.avg_ranks[i]) - float(ranks.avg_ranks[j])) / se
        out.append(
            PairHypothesis(
                index=pair_index(i, j, k),
                pair=(ranks.models[i], ranks.models[j]),
                positions=(i, j),
                z=z,
                p_raw=_normal_two_sided_p(z),
            )
        )
    return out


def hypotheses_from_p_values(models: Sequence[str], p_values: Sequence[float]) -> List[PairHypothesis]:
    """Build hypotheses from externally supplied raw p-values in pair-index order."""
    k = len(models)
    m = k * (k - 1) // 2
    if len(p_values) != m:
        raise ValidationError(f"{k} models need {m} pairwise p-values, got {len(p_values)}")
    out = []
    for (i, j), p in zip(itertools.combinations(range(k), 2), p_values):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"p-value for {models[i]} vs {models[j]} is {p}, outside [0, 1]")
        out.append(
            PairHypothesis(
                index=pair_index(i, j, k),
                pair=(models[i], models[j]),
                positions=(i, j),
                z=math.nan,
                p_raw=float(p),
            )
        )
    return out


def _set_partitions(n: int) -> Iterator[List[int]]:
    """Yield restricted growth strings: labels[i] is the block of element i."""
    labels = [0] * n
    maxima = [0] * n

    def rec(pos: int) -> Iterator[List[int]]:
        if pos == n:
            yield labels
            return
        for b in range(maxima[pos - 1] + 2):
            labels[pos] = b
            maxima[pos] = max(maxima[pos - 1], b)
            yield from rec(pos + 1)

    if n == 0:
        yield []
        return
    yield from rec(1)


def enumerate_exhaustive_sets(k: int) -> ExhaustiveSetFamily:
    if k < 2:
        raise ValidationError(f"Need at least 2 models for pairwise comparisons, got {k}")
    if k > MAX_MODELS:
        raise CapacityError(
            f"Exhaustive-set enumeration supports at most {MAX_MODELS} models (got {k}); "
            f"the number of set partitions grows as the Bell numbers"
        )

    seen: Dict[Tuple[int, ...], ExhaustiveSet] = {}
    for labels in _set_partitions(k):
        blocks: Dict[int, List[int]] = {}
        for pos, b in enumerate(labels):
            blocks.setdefault(b, []).append(pos)
        indices = tuple(sorted(
            pair_index(i, j, k)
            for block in blocks.values()
            for i, j in itertools.combinations(block, 2)
        ))
        if indices not in seen:
            seen[indices] = ExhaustiveSet(indices=indices, partition=tuple(tuple(b) for b in blocks.values()))

    sets = tuple(sorted(seen.values(), key=lambda s: (len(s.indices), s.indices)))
    log.debug(f"Enumerated {len(sets)} exhaustive sets for k={k}")
    return ExhaustiveSetFamily(k=k, sets=sets)


def _check_family(hypotheses: Sequence[PairHypothesis], family: ExhaustiveSetFamily) -> np.ndarray:
    if len(hypotheses) != family.m:
        raise ValidationError(
            f"Family for k={family.k} expects {family.m} hypotheses, got {len(hypotheses)}"
        )
    by_index = sorted(hypotheses, key=lambda h: h.index)
    if [h.index for h in by_index] != list(range(1, family.m + 1)):
        raise ValidationError("Hypothesis indices must be exactly 1..m")
    return np.array([h.p_raw for h in by_index], dtype=np.float64)


def _set_scores(p: np.ndarray, family: ExhaustiveSetFamily) -> Tuple[np.ndarray, np.ndarray]:
    """|I| * min p(I) per nonempty exhaustive set, plus the membership mask."""
    mask = family.membership()
    sizes = mask.sum(axis=1)
    mins = np.where(mask, p[np.newaxis, :], np.inf).min(axis=1)
    return sizes * mins, mask


def acceptance_set(
    hypotheses: Sequence[PairHypothesis], family: ExhaustiveSetFamily, alpha: float
) -> FrozenSet[int]:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    p = _check_family(hypotheses, family)
    # min p(I) > alpha/|I| evaluated as |I| * min p(I) > alpha, the same
    # product the adjusted p-values maximise.
    scores, mask = _set_scores(p, family)
    accepted = mask[scores > alpha].any(axis=0)
    return frozenset(int(i) + 1 for i in np.flatnonzero(accepted))


def bergmann_hommel_apv(
    hypotheses: Sequence[PairHypothesis], family: ExhaustiveSetFamily, alpha: float = 0.05
) -> PosthocReport:
    p = _check_family(hypotheses, family)
    scores, mask = _set_scores(p, family)
    v = np.where(mask, scores[:, np.newaxis], -np.inf).max(axis=0)
    apv = np.minimum(v, 1.0)

    accepted = acceptance_set(hypotheses, family, alpha)
    adjusted = []
    for h in sorted(hypotheses, key=lambda h: h.index):
        value = float(apv[h.index - 1])
        decision = Decision.REJECTED if value <= alpha else Decision.RETAINED
        if (decision is Decision.REJECTED) == (h.index in accepted):
            raise AssertionError(
                f"H{h.index}: APV={value} at alpha={alpha} disagrees with the acceptance set"
            )
        adjusted.append(replace(h, apv=value, decision=decision))

    log.info(
        f"Bergmann-Hommel: {sum(h.decision is Decision.REJECTED for h in adjusted)} of "
        f"{len(adjusted)} hypotheses rejected at alpha={alpha}"
    )
    return PosthocReport(hypotheses=tuple(adjusted), alpha=alpha, acceptance_set=accepted)


def format_apv(apv: float) -> str:
    if apv < APV_DISPLAY_ZERO:
        return "0"
    return f"{apv:.6f}"


__all__ = [
    "MAX_MODELS",
    "Decision",
    "PairHypothesis",
    "ExhaustiveSet",
    "ExhaustiveSetFamily",
    "PosthocReport",
    "pair_index",
    "pairwise_p_values",
    "hypotheses_from_p_values",
    "enumerate_exhaustive_sets",
    "acceptance_set",
    "bergmann_hommel_apv",
    "format_apv",
]
