import csv

import numpy as np
import pytest
import yaml

from effectbench.models.outcomes import ErrorMatrix, Metric, ModelPrediction, PotentialOutcomeTable

# Worked Friedman example: ranks (1,2,3), (3,2,1), (1.5,1.5,3).
WORKED_ROWS = [[0.1, 0.2, 0.3], [0.3, 0.2, 0.1], [0.1, 0.1, 0.2]]
WORKED_MODELS = ("A", "B", "C")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def make_table(sim_id=1, y0=(1.0, 2.0), y1=(3.0, 2.0), **models):
    """Outcome table; each keyword is model=(y0_hat, y1_hat)."""
    predictions = {name: ModelPrediction(y0_hat=p[0], y1_hat=p[1]) for name, p in models.items()}
    return PotentialOutcomeTable(sim_id=sim_id, y0_true=y0, y1_true=y1, predictions=predictions)


def random_error_matrix(rng, n_sims, k, metric=Metric.PEHE):
    values = rng.exponential(1.0, size=(n_sims, k))
    return ErrorMatrix(
        metric=metric,
        models=tuple(f"m{j}" for j in range(k)),
        sims=tuple(range(1, n_sims + 1)),
        values=values,
    )


def write_npci(path, t, y_factual, y_cfactual, mu0, mu1, x, header=False):
    rows = np.column_stack([t, y_factual, y_cfactual, mu0, mu1, x])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        if header:
            writer.writerow(["treatment", "y_factual", "y_cfactual", "mu0", "mu1"] + [f"x{j + 1}" for j in range(x.shape[1])])
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])
    return path


def npci_arrays(seed=0, n=40, d=25, n_treated=10):
    rng = np.random.default_rng(seed)
    t = np.zeros(n)
    t[:n_treated] = 1.0
    x = rng.normal(size=(n, d))
    mu0 = x[:, 0] + 1.0
    mu1 = mu0 + 4.0
    y0 = mu0 + rng.normal(scale=0.1, size=n)
    y1 = mu1 + rng.normal(scale=0.1, size=n)
    yf = np.where(t == 1.0, y1, y0)
    ycf = np.where(t == 1.0, y0, y1)
    return t, yf, ycf, mu0, mu1, x


@pytest.fixture
def worked_errors():
    return ErrorMatrix(metric=Metric.PEHE, models=WORKED_MODELS, sims=(1, 2, 3), values=WORKED_ROWS)


@pytest.fixture
def worked_errors_csv(tmp_path):
    rows = [[i + 1, *r] for i, r in enumerate(WORKED_ROWS)]
    return write_csv(tmp_path / "errors.csv", ["sim", *WORKED_MODELS], rows)


@pytest.fixture
def p_values_csv(tmp_path):
    rows = [["A", "B", 0.01], ["A", "C", 0.02], ["B", "C", 0.5]]
    return write_csv(tmp_path / "pvalues.csv", ["model_a", "model_b", "p_raw"], rows)


@pytest.fixture
def ihdp_dir(tmp_path):
    directory = tmp_path / "ihdp"
    directory.mkdir()
    for i in (1, 2, 10):
        write_npci(directory / f"ihdp_npci_{i}.csv", *npci_arrays(seed=i))
    return directory


@pytest.fixture
def synthetic_config_path(tmp_path):
    config_data = {
        "data": {"source": "synthetic", "synthetic": {"n_units": 60, "n_sims": 8, "seed": 7}},
        "metrics": ["PEHE", "ATE_ABS"],
        "alpha": 0.05,
        "output_dir": "reports",
        "scale": "LOG10",
        "logging": {"level": "INFO"},
    }
    config_file = tmp_path / "config.yaml"
    with open(config_file, "w") as f:
        yaml.dump(config_data, f)
    return config_file


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("EFFECTBENCH_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("EFFECTBENCH_SEED", raising=False)
