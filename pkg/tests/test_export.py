import csv
import math

import pytest

from effectbench.errors import ValidationError
from effectbench.io.csv_input import read_p_values
from effectbench.io.export import (
    TIE_FOOTER,
    export_profiles,
    write_error_summary,
    write_friedman_table,
    write_outperformance,
    write_posthoc_table,
    write_profile_summary,
)
from effectbench.models.outcomes import Metric
from effectbench.stats.metrics import summarize_errors
from effectbench.stats.outperformance import outperformance
from effectbench.stats.posthoc import (
    bergmann_hommel_apv,
    enumerate_exhaustive_sets,
    hypotheses_from_p_values,
    pairwise_p_values,
)
from effectbench.stats.profiles import Scale, performance_ratios, profile_curves, profile_summary
from effectbench.stats.ranktest import friedman_test


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def _profile_points(path):
    points = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            points.setdefault(row["model"], []).append((float(row["ratio"]), float(row["fraction"])))
    return points


def _friedman_columns(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    avg = {row["model"]: float(row["avg_rank"]) for row in rows}
    return avg, float(rows[-1]["statistic"]), float(rows[-1]["p_value"])


def test_profiles_csv_log10(tmp_path, worked_errors):
    curves = profile_curves(performance_ratios(worked_errors))
    export_profiles(curves, Scale.LOG10, tmp_path / "p.csv", tmp_path / "p.svg")
    rows = _rows(tmp_path / "p.csv")
    assert rows[0] == ["model", "ratio", "log10_ratio", "fraction"]
    assert ["B", "1.0", "0.0", repr(2 / 3)] in rows
    assert ["B", "2.0", repr(math.log10(2.0)), "1.0"] in rows

    back = _profile_points(tmp_path / "p.csv")
    assert back["A"][0] == (1.0, 2 / 3)
    assert [p for _, p in back["C"]] == [1 / 3, 2 / 3, 1.0]


def test_profiles_csv_linear(tmp_path, worked_errors):
    curves = profile_curves(performance_ratios(worked_errors))
    export_profiles(curves, Scale.LINEAR, tmp_path / "p.csv", tmp_path / "p.svg")
    assert _rows(tmp_path / "p.csv")[0] == ["model", "ratio", "fraction"]


def test_profiles_svg_is_deterministic(tmp_path, worked_errors):
    curves = profile_curves(performance_ratios(worked_errors))
    export_profiles(curves, Scale.LOG10, tmp_path / "a.csv", tmp_path / "a.svg", title="eps_PEHE")
    export_profiles(curves, Scale.LOG10, tmp_path / "b.csv", tmp_path / "b.svg", title="eps_PEHE")
    first = (tmp_path / "a.svg").read_bytes()
    assert first.startswith(b"<?xml")
    assert first == (tmp_path / "b.svg").read_bytes()


def test_export_profiles_rejects_empty(tmp_path):
    with pytest.raises(ValidationError):
        export_profiles([], Scale.LOG10, tmp_path / "p.csv", tmp_path / "p.svg")


def test_profile_summary_table(tmp_path, worked_errors):
    ratios = performance_ratios(worked_errors)
    write_profile_summary(profile_summary(ratios, profile_curves(ratios)), tmp_path / "s.md", Metric.PEHE)
    text = (tmp_path / "s.md").read_text()
    assert "eps_PEHE" in text
    assert "| A | 66.7% | 100.0% | 0 |" in text


def test_friedman_table_round_trip(tmp_path, worked_errors):
    ranks = friedman_test(worked_errors)
    write_friedman_table(ranks, tmp_path / "f.md", tmp_path / "f.csv", Metric.PEHE)
    avg, statistic, p = _friedman_columns(tmp_path / "f.csv")
    assert list(avg) == ["A", "B", "C"]
    assert avg == {m: ranks.avg_rank(m) for m in ranks.models}
    assert avg["A"] == pytest.approx(11 / 6, abs=1e-12)
    assert avg["C"] == pytest.approx(7 / 3, abs=1e-12)
    assert statistic == pytest.approx(0.5, abs=1e-12)
    assert p == pytest.approx(math.exp(-0.25), abs=1e-12)

    md = (tmp_path / "f.md").read_text()
    assert "F_f = 0.50 with 2 degrees of freedom" in md
    assert "n = 3 simulations" in md
    assert TIE_FOOTER in md


def test_friedman_table_needs_statistic(tmp_path, worked_errors):
    from effectbench.stats.ranktest import friedman_ranks

    with pytest.raises(ValidationError):
        write_friedman_table(friedman_ranks(worked_errors), tmp_path / "f.md", tmp_path / "f.csv", Metric.PEHE)


def test_posthoc_table_from_p_values(tmp_path, p_values_csv):
    models, p = read_p_values(p_values_csv)
    hypotheses = hypotheses_from_p_values(models, p)
    report = bergmann_hommel_apv(hypotheses, enumerate_exhaustive_sets(len(models)), alpha=0.05)
    write_posthoc_table(report, tmp_path / "h.md", tmp_path / "h.csv")

    md = (tmp_path / "h.md").read_text()
    assert "| H1 | A vs B | 0.030000 | Rejected |" in md
    assert "| H3 | B vs C | 0.500000 | Failed to be rejected |" in md
    assert "2 of 3 hypotheses rejected" in md

    rows = _rows(tmp_path / "h.csv")
    assert rows[0] == ["index", "hypothesis", "model_a", "model_b", "z", "p_raw", "apv", "decision"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]
    assert rows[3][-1] == "RETAINED"
    assert rows[1][4] == "nan"


def test_outperformance_and_error_summary(tmp_path, worked_errors):
    ranks = friedman_test(worked_errors)
    report = bergmann_hommel_apv(pairwise_p_values(ranks), enumerate_exhaustive_sets(3))
    write_outperformance(outperformance(ranks, report), tmp_path / "o.md", Metric.PEHE)
    text = (tmp_path / "o.md").read_text()
    assert "| A | 1.833 | - |" in text
    assert TIE_FOOTER in text

    write_error_summary(summarize_errors(worked_errors), tmp_path / "pehe.md", Metric.PEHE, show_root=True)
    assert "sqrt(mean PEHE)" in (tmp_path / "pehe.md").read_text()
    write_error_summary(summarize_errors(worked_errors), tmp_path / "ate.md", Metric.ATE_ABS, show_root=True)
    assert "sqrt" not in (tmp_path / "ate.md").read_text()
