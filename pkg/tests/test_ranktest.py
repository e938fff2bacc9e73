import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import random_error_matrix
from effectbench.errors import DomainError, ValidationError
from effectbench.models.outcomes import ErrorMatrix, Metric
from effectbench.stats.ranktest import (
    RankSummary,
    chi_square_sf,
    format_p_value,
    friedman_ranks,
    friedman_statistic,
    friedman_test,
    ranking_order,
)


def chi_square_sf_oracle(x, dof):
    """Closed-form chi-square tail for integer dof, summed term by term in log space."""
    if x == 0:
        return 1.0
    h = x / 2.0
    if dof % 2 == 0:
        terms = [math.exp(j * math.log(h) - h - math.lgamma(j + 1)) for j in range(dof // 2)]
        return math.fsum(terms)
    terms = [math.erfc(math.sqrt(h))]
    terms += [math.exp((j - 0.5) * math.log(h) - h - math.lgamma(j + 0.5)) for j in range(1, (dof + 1) // 2)]
    return math.fsum(terms)


def test_worked_example_ranks_and_statistic(worked_errors):
    ranks = friedman_test(worked_errors)
    np.testing.assert_array_equal(ranks.per_sim_ranks, [[1, 2, 3], [3, 2, 1], [1.5, 1.5, 3]])
    np.testing.assert_allclose(ranks.avg_ranks, [11 / 6, 11 / 6, 7 / 3], rtol=0, atol=1e-12)
    assert ranks.statistic == pytest.approx(0.5, abs=1e-12)
    assert ranks.dof == 2
    assert ranks.p_value == pytest.approx(math.exp(-0.25), abs=1e-12)


def test_full_tie_gives_zero_statistic_and_unit_p_value():
    errors = ErrorMatrix(metric=Metric.PEHE, models=("a", "b", "c", "d"), sims=(1, 2, 3), values=np.full((3, 4), 0.7))
    ranks = friedman_test(errors)
    assert list(ranks.avg_ranks) == [2.5] * 4
    assert ranks.statistic == 0.0
    assert ranks.p_value == 1.0


def test_dominant_model_has_rank_one():
    rng = np.random.default_rng(3)
    values = rng.uniform(1.0, 2.0, size=(20, 4))
    values[:, 2] = 0.5
    errors = ErrorMatrix(metric=Metric.PEHE, models=("a", "b", "c", "d"), sims=tuple(range(20)), values=values)
    ranks = friedman_ranks(errors)
    assert ranks.avg_rank("c") == 1.0
    assert ranking_order(ranks)[0] == "c"


def test_friedman_needs_two_simulations():
    errors = ErrorMatrix(metric=Metric.PEHE, models=("a", "b"), sims=(1,), values=[[1.0, 2.0]])
    with pytest.raises(ValidationError):
        friedman_ranks(errors)


def test_statistic_matches_exact_formula_for_free_rank_vector():
    avg = [Fraction(3, 2), Fraction(5, 2), Fraction(3), Fraction(4), Fraction(9, 2), Fraction(11, 2)]
    assert sum(avg) == 21
    k, n = 6, 10
    expected = Fraction(12 * n, k * (k + 1)) * (sum(r * r for r in avg) - Fraction(k * (k + 1) ** 2, 4))
    ranks = RankSummary(
        models=tuple("abcdef"),
        per_sim_ranks=np.zeros((n, k)),
        avg_ranks=np.array([float(r) for r in avg]),
        n_sims=n,
    )
    assert friedman_statistic(ranks).statistic == pytest.approx(float(expected), abs=1e-12)


def test_ranks_unchanged_by_increasing_transform_within_rows():
    rng = np.random.default_rng(9)
    errors = random_error_matrix(rng, 30, 5)
    transformed = ErrorMatrix(errors.metric, errors.models, errors.sims, np.log1p(errors.values) ** 3)
    np.testing.assert_array_equal(friedman_ranks(errors).per_sim_ranks, friedman_ranks(transformed).per_sim_ranks)


def test_column_permutation_permutes_ranks_and_keeps_statistic():
    rng = np.random.default_rng(10)
    errors = random_error_matrix(rng, 25, 5)
    order = ["m3", "m0", "m4", "m1", "m2"]
    a = friedman_test(errors)
    b = friedman_test(errors.reorder(order))
    assert [b.avg_rank(m) for m in order] == [a.avg_rank(m) for m in order]
    assert a.statistic == b.statistic


def test_rank_rows_sum_exactly():
    rng = np.random.default_rng(12)
    values = rng.integers(0, 3, size=(50, 6)).astype(float)  # many ties
    errors = ErrorMatrix(metric=Metric.ATE_ABS, models=tuple("abcdef"), sims=tuple(range(50)), values=values)
    ranks = friedman_ranks(errors)
    assert np.all(ranks.per_sim_ranks.sum(axis=1) == 21.0)
    assert friedman_statistic(ranks).statistic >= 0.0


def test_chi_square_sf_examples():
    assert chi_square_sf(0.0, 3) == 1.0
    assert chi_square_sf(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-12)
    assert chi_square_sf(11.0705, 5) == pytest.approx(0.05, abs=1e-4)


def test_chi_square_sf_domain_errors():
    with pytest.raises(DomainError):
        chi_square_sf(-1.0, 2)
    with pytest.raises(DomainError):
        chi_square_sf(1.0, 0)
    with pytest.raises(DomainError):
        chi_square_sf(1.0, 2.5)


def test_chi_square_sf_against_series_oracle():
    for dof in range(1, 21):
        for x in np.linspace(0.0, 100.0, 201):
            assert abs(chi_square_sf(float(x), dof) - chi_square_sf_oracle(float(x), dof)) <= 1e-10, (x, dof)


def test_chi_square_sf_monotonicity():
    xs = np.linspace(0.0, 60.0, 121)
    for dof in (1, 4, 9):
        values = [chi_square_sf(float(x), dof) for x in xs]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))
    for x in (0.5, 5.0, 25.0):
        values = [chi_square_sf(x, dof) for dof in range(1, 30)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))


def test_ranking_order_breaks_ties_by_name(worked_errors):
    relabelled = ErrorMatrix(worked_errors.metric, ("B", "A", "C"), worked_errors.sims, worked_errors.values)
    assert ranking_order(friedman_ranks(relabelled)) == ["A", "B", "C"]


def test_p_value_display_floor():
    assert format_p_value(0.0) == "1e-16"
    assert format_p_value(0.5) == "0.5"
