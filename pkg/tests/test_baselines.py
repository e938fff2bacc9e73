from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pydantic
import pytest

from effectbench.data.synthetic import SyntheticConfig, generate_synthetic
from effectbench.errors import EstimationError, ValidationError
from effectbench.estimators.baselines import (
    DEFAULT_ESTIMATORS,
    EstimatorKind,
    EstimatorSpec,
    check_unique_names,
    fit_predict,
    predict_table,
    predict_tables,
)
from effectbench.models.realization import DataSource, SimulationRealization


def _realization(x, t, y, sim_id=1):
    y = np.asarray(y, dtype=float)
    return SimulationRealization(
        sim_id=sim_id,
        covariates=np.asarray(x, dtype=float),
        t=np.asarray(t, dtype=float),
        y_factual=y,
        y0_true=y,
        y1_true=y,
        source=DataSource.SYNTHETIC,
    )


DIM = EstimatorSpec(name="dim", kind=EstimatorKind.DIFF_IN_MEANS)
LIN = EstimatorSpec(name="lin", kind=EstimatorKind.S_LEARNER_LINEAR)
KNN = EstimatorSpec(name="knn", kind=EstimatorKind.KNN_MATCHING)


def test_diff_in_means_uses_group_means():
    r = _realization([[0.0], [1.0], [2.0], [3.0]], [1, 1, 0, 0], [4.0, 6.0, 1.0, 3.0])
    y0, y1 = fit_predict(DIM, r)
    np.testing.assert_array_equal(y0, [2.0] * 4)
    np.testing.assert_array_equal(y1, [5.0] * 4)


def test_constant_outcomes_give_zero_effect():
    r = _realization(np.arange(6.0).reshape(-1, 1), [1, 0, 1, 0, 1, 0], [3.0] * 6)
    for spec in DEFAULT_ESTIMATORS:
        y0, y1 = fit_predict(spec, r)
        np.testing.assert_allclose(y1 - y0, 0.0, atol=1e-9)


def test_linear_learner_recovers_constant_effect():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 2))
    t = np.tile([0.0, 1.0], 25)
    y = 2.0 * t + x[:, 0] - 0.5 * x[:, 1]
    y0, y1 = fit_predict(LIN, _realization(x, t, y))
    np.testing.assert_allclose(y1 - y0, 2.0, atol=1e-8)
    np.testing.assert_allclose(np.where(t == 1.0, y1, y0), y, atol=1e-8)


def test_linear_learner_survives_collinear_covariates():
    x = np.column_stack([np.arange(8.0), 2.0 * np.arange(8.0)])
    t = np.tile([0.0, 1.0], 4)
    y0, y1 = fit_predict(LIN, _realization(x, t, 1.0 + t + x[:, 0]))
    assert np.all(np.isfinite(y0)) and np.all(np.isfinite(y1))


def test_knn_with_one_unit_per_group():
    r = _realization([[0.0], [1.0]], [1, 0], [5.0, 1.0])
    y0, y1 = fit_predict(KNN, r)
    np.testing.assert_array_equal(y0, [1.0, 1.0])
    np.testing.assert_array_equal(y1, [5.0, 5.0])


def test_knn_ties_pick_lowest_index_and_average_neighbours():
    r = _realization([[0.0], [-1.0], [1.0]], [1, 0, 0], [0.0, 10.0, 20.0])
    y0, _ = fit_predict(KNN, r)
    assert y0[0] == 10.0
    two = EstimatorSpec(name="knn2", kind=EstimatorKind.KNN_MATCHING, hyperparams={"n_neighbors": 2})
    y0, _ = fit_predict(two, r)
    assert y0[0] == 15.0
    zero = EstimatorSpec(name="knn0", kind=EstimatorKind.KNN_MATCHING, hyperparams={"n_neighbors": 0})
    with pytest.raises(ValidationError):
        fit_predict(zero, r)


def test_single_group_cannot_be_estimated():
    r = _realization([[0.0], [1.0], [2.0]], [1, 1, 1], [1.0, 2.0, 3.0])
    for spec in (DIM, LIN, KNN):
        with pytest.raises(EstimationError, match="treated and control"):
            fit_predict(spec, r)


def test_estimator_names_are_validated():
    with pytest.raises(ValidationError, match="dim"):
        check_unique_names([DIM, EstimatorSpec(name="dim", kind=EstimatorKind.KNN_MATCHING)])
    with pytest.raises(pydantic.ValidationError):
        EstimatorSpec(name="a,b", kind=EstimatorKind.DIFF_IN_MEANS)
    with pytest.raises(pydantic.ValidationError):
        EstimatorSpec(name="", kind=EstimatorKind.DIFF_IN_MEANS)


def test_predict_table_carries_truth_and_models():
    sims = generate_synthetic(SyntheticConfig(n_units=40, n_sims=1, seed=2))
    table = predict_table(sims[0], DEFAULT_ESTIMATORS)
    assert table.models == ("diff_in_means", "s_learner_linear", "knn_matching")
    np.testing.assert_array_equal(table.y0_true, sims[0].y0_true)
    assert table.sim_id == sims[0].sim_id


def test_predictions_do_not_depend_on_executor():
    sims = generate_synthetic(SyntheticConfig(n_units=50, n_sims=4, seed=11))
    sequential = predict_tables(sims, DEFAULT_ESTIMATORS)
    with ThreadPoolExecutor(max_workers=3) as pool:
        threaded = predict_tables(sims, DEFAULT_ESTIMATORS, executor=pool)
    for a, b in zip(sequential, threaded):
        assert a.sim_id == b.sim_id
        for m in a.models:
            np.testing.assert_array_equal(a.prediction(m).y0_hat, b.prediction(m).y0_hat)
            np.testing.assert_array_equal(a.prediction(m).y1_hat, b.prediction(m).y1_hat)


def test_linear_learner_ignores_affine_covariate_rescaling():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(40, 3))
    t = (rng.random(40) < 0.5).astype(float)
    t[:2] = [0.0, 1.0]
    y = 1.5 * t + x @ np.array([0.5, -1.0, 2.0]) + rng.normal(scale=0.1, size=40)
    base = fit_predict(LIN, _realization(x, t, y))
    scaled = x.copy()
    scaled[:, 1] = 1000.0 * scaled[:, 1] - 7.0
    moved = fit_predict(LIN, _realization(scaled, t, y))
    np.testing.assert_allclose(moved[0], base[0], atol=1e-6)
    np.testing.assert_allclose(moved[1], base[1], atol=1e-6)


def test_diff_in_means_effect_is_exact_mean_difference():
    sims = generate_synthetic(SyntheticConfig(n_units=30, n_sims=1, seed=6))
    r = sims[0]
    y0, y1 = fit_predict(DIM, r)
    expected = r.y_factual[r.treated].mean() - r.y_factual[~r.treated].mean()
    assert y1[0] - y0[0] == expected
