from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, List, Tuple

from effectbench.stats.posthoc import Decision, PosthocReport
from effectbench.stats.ranktest import RankSummary, ranking_order


@dataclass(frozen=True)
class OutperformanceSummary:
    """For each model, best Friedman rank first, the models it significantly beats."""
    order: Tuple[str, ...]
    avg_ranks: Dict[str, float]
    outperforms: Dict[str, Tuple[str, ...]]
    alpha: float


def outperformance(ranks: RankSummary, report: PosthocReport) -> OutperformanceSummary:
    order = ranking_order(ranks)
    position = {m: i for i, m in enumerate(order)}
    avg = {m: ranks.avg_rank(m) for m in ranks.models}
    beaten: Dict[str, List[str]] = {m: [] for m in order}
    for h in report.hypotheses:
        if h.decision is not Decision.REJECTED:
            continue
        a, b = h.pair
        if avg[a] < avg[b]:
            beaten[a].append(b)
        elif avg[b] < avg[a]:
            beaten[b].append(a)
    return OutperformanceSummary(
        order=tuple(order),
        avg_ranks=avg,
        outperforms={m: tuple(sorted(beaten[m], key=position.__getitem__)) for m in order},
        alpha=report.alpha,
    )


__all__ = ["OutperformanceSummary", "outperformance"]
