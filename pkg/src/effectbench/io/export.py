from __future__ import annotations
import csv
import logging
import math
from pathlib import Path
from typing import Any, List, Optional, Sequence

import matplotlib
from matplotlib.figure import Figure

from effectbench.errors import ValidationError
from effectbench.models.outcomes import Metric
from effectbench.stats.metrics import ErrorSummary, root_pehe
from effectbench.stats.outperformance import OutperformanceSummary
from effectbench.stats.posthoc import PosthocReport, format_apv
from effectbench.stats.profiles import ProfileCurve, ProfileSummary, Scale, max_finite_ratio
from effectbench.stats.ranktest import RankSummary, format_p_value, ranking_order

log = logging.getLogger(__name__)

SVG_RC = {
    "svg.hashsalt": "effectbench",
    "svg.fonttype": "none",
}
TIE_FOOTER = "Models with equal average rank are listed in lexicographic order."


def _num(value: float) -> str:
    """Shortest repr that round-trips exactly."""
    return repr(float(value))


def _markdown_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join("---" for _ in headers) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _metric_title(metric: Metric) -> str:
    return metric.label


def export_profiles(
    curves: Sequence[ProfileCurve],
    scale: Scale,
    csv_path: Path,
    svg_path: Path,
    title: Optional[str] = None,
) -> None:
    """Write step points (CSV) and a step rendering (SVG) of performance profiles.

    The SVG draws each curve exactly through its breakpoints. Under LOG10 the
    x axis shows log10(ratio).
    """
    curves = list(curves)
    if not curves:
        raise ValidationError("No profile curves to export")
    n_sims = {c.n_sims for c in curves}
    if len(n_sims) != 1:
        raise ValidationError(f"Profile curves disagree on simulation count: {sorted(n_sims)}")
    scale = Scale(scale)

    header = ["model", "ratio", "fraction"]
    if scale is Scale.LOG10:
        header = ["model", "ratio", "log10_ratio", "fraction"]
    rows = []
    for c in curves:
        for a, p in c.breakpoints:
            if scale is Scale.LOG10:
                rows.append([c.model, _num(a), _num(math.log10(a)), _num(p)])
            else:
                rows.append([c.model, _num(a), _num(p)])
    _write_csv(Path(csv_path), header, rows)

    a_max = max_finite_ratio(curves)
    if a_max <= 1.0:
        a_max = 10.0 if scale is Scale.LOG10 else 2.0
    to_x = (lambda a: math.log10(a)) if scale is Scale.LOG10 else (lambda a: a)

    with matplotlib.rc_context(SVG_RC):
        fig = Figure(figsize=(8, 5))
        ax = fig.add_subplot(1, 1, 1)
        for c in curves:
            xs = [to_x(1.0)] + [to_x(a) for a in c.ratios] + [to_x(a_max)]
            last = c.fractions[-1] if c.breakpoints else 0.0
            ys = [0.0] + c.fractions + [last]
            ax.step(xs, ys, where="post", label=c.model, linewidth=1.5)
        ax.set_xlim(to_x(1.0), to_x(a_max))
        ax.set_ylim(0.0, 1.05)
        ax.set_xlabel("log10(a)" if scale is Scale.LOG10 else "a (performance ratio)")
        ax.set_ylabel("p(a): fraction of simulations")
        if title:
            ax.set_title(title)
        ax.grid(True, linewidth=0.3)
        ax.legend(loc="lower right")
        fig.tight_layout()
        Path(svg_path).parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    log.debug(f"Wrote profiles to {csv_path} and {svg_path}")


def write_profile_summary(summary: Sequence[ProfileSummary], md_path: Path, metric: Metric) -> None:
    rows = [
        [s.model, f"{100 * s.efficiency:.1f}%", f"{100 * s.robustness:.1f}%", s.failed]
        for s in sorted(summary, key=lambda s: (-s.efficiency, s.model))
    ]
    text = f"# Performance profile summary ({_metric_title(metric)})\n\n"
    text += _markdown_table(["Model", "Best on (p(1))", "Within max ratio", "Failed"], rows)
    Path(md_path).write_text(text, encoding="utf-8")


def write_friedman_table(ranks: RankSummary, md_path: Path, csv_path: Path, metric: Metric) -> None:
    if ranks.statistic is None or ranks.p_value is None:
        raise ValidationError("Friedman statistic has not been computed")
    order = ranking_order(ranks)

    rows = [[m, f"{ranks.avg_rank(m):.3f}"] for m in order]
    text = f"# Friedman average rankings ({_metric_title(metric)})\n\n"
    text += _markdown_table(["Algorithm", "Ranking"], rows)
    text += (
        f"\nF_f = {ranks.statistic:.2f} with {ranks.dof} degrees of freedom, "
        f"p-value = {format_p_value(ranks.p_value)} (n = {ranks.n_sims} simulations)\n\n"
        f"{TIE_FOOTER}\n"
    )
    Path(md_path).write_text(text, encoding="utf-8")

    _write_csv(
        Path(csv_path),
        ["model", "avg_rank", "statistic", "dof", "p_value", "n_sims"],
        [
            [m, _num(ranks.avg_rank(m)), _num(ranks.statistic), ranks.dof, _num(ranks.p_value), ranks.n_sims]
            for m in order
        ],
    )


def write_posthoc_table(report: PosthocReport, md_path: Path, csv_path: Path, metric: Optional[Metric] = None) -> None:
    ordered = report.ordered()
    title = f" ({_metric_title(metric)})" if metric is not None else ""
    text = f"# Multiple comparison test: Bergmann-Hommel APVs{title}\n\n"
    text += _markdown_table(
        ["i", "Hypothesis", "p_Berg", "Decision"],
        [[f"H{h.index}", h.label, format_apv(h.apv), h.decision.label] for h in ordered],
    )
    text += f"\nalpha = {report.alpha}; {len(report.rejected)} of {len(ordered)} hypotheses rejected.\n"
    Path(md_path).write_text(text, encoding="utf-8")

    _write_csv(
        Path(csv_path),
        ["index", "hypothesis", "model_a", "model_b", "z", "p_raw", "apv", "decision"],
        [
            [h.index, h.label, h.pair[0], h.pair[1], _num(h.z), _num(h.p_raw), _num(h.apv), h.decision.value]
            for h in ordered
        ],
    )


def write_outperformance(summary: OutperformanceSummary, md_path: Path, metric: Metric) -> None:
    rows = [
        [m, f"{summary.avg_ranks[m]:.3f}", ", ".join(summary.outperforms[m]) or "-"]
        for m in summary.order
    ]
    text = f"# Statistically outperformed models ({_metric_title(metric)}, alpha = {summary.alpha})\n\n"
    text += _markdown_table(["Model (by Friedman rank)", "Avg rank", "Outperforms"], rows)
    text += f"\n{TIE_FOOTER}\n"
    Path(md_path).write_text(text, encoding="utf-8")


def write_error_summary(summary: Sequence[ErrorSummary], md_path: Path, metric: Metric, show_root: bool = False) -> None:
    headers = ["Model", "Mean", "Std", "Median", "Max"]
    show_root = show_root and Metric(metric) is Metric.PEHE
    if show_root:
        headers.append("sqrt(mean PEHE) (display only)")
    rows = []
    for s in summary:
        row = [s.model, f"{s.mean:.6g}", f"{s.std:.6g}", f"{s.median:.6g}", f"{s.maximum:.6g}"]
        if show_root:
            row.append(f"{root_pehe(s.mean):.6g}")
        rows.append(row)
    text = f"# Mean error summary ({_metric_title(metric)})\n\n"
    text += _markdown_table(headers, rows)
    Path(md_path).write_text(text, encoding="utf-8")


__all__ = [
    "export_profiles",
    "write_profile_summary",
    "write_friedman_table",
    "write_posthoc_table",
    "write_outperformance",
    "write_error_summary",
]
