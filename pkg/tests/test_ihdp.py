import numpy as np
import pytest

from conftest import npci_arrays, write_npci
from effectbench.data.ihdp import (
    check_ihdp_schema,
    load_ihdp,
    load_realization_file,
    load_realizations,
    realization_files,
    write_realization,
)
from effectbench.data.synthetic import SyntheticConfig, generate_simulation
from effectbench.errors import InputReadError, ParseError, SchemaError, ValidationError
from effectbench.models.realization import DataSource


def test_load_ihdp_directory_in_natural_order(ihdp_dir):
    assert [p.name for p in realization_files(ihdp_dir)] == ["ihdp_npci_1.csv", "ihdp_npci_2.csv", "ihdp_npci_10.csv"]
    sims = load_ihdp(ihdp_dir)
    assert [s.sim_id for s in sims] == [1, 2, 3]
    for s in sims:
        assert s.n_units == 40
        assert s.n_covariates == 25
        assert s.n_treated == 10
        assert s.source is DataSource.IHDP


def test_full_size_realization_counts(tmp_path):
    path = write_npci(tmp_path / "r.csv", *npci_arrays(n=747, n_treated=139))
    sim = load_realization_file(path, sim_id=1, n_covariates=25)
    assert (sim.n_units, sim.n_covariates) == (747, 25)
    assert (sim.n_treated, sim.n_control) == (139, 608)


def test_truth_modes(tmp_path):
    t, yf, ycf, mu0, mu1, x = npci_arrays()
    path = write_npci(tmp_path / "r.csv", t, yf, ycf, mu0, mu1, x)
    mu = load_realization_file(path, sim_id=1)
    np.testing.assert_array_equal(mu.y0_true, mu0)
    np.testing.assert_array_equal(mu.y1_true, mu1)

    sampled = load_realization_file(path, sim_id=1, truth="outcomes")
    np.testing.assert_array_equal(sampled.y1_true[t == 1.0], yf[t == 1.0])
    np.testing.assert_array_equal(sampled.y1_true[t == 0.0], ycf[t == 0.0])
    np.testing.assert_array_equal(sampled.y_factual, yf)

    with pytest.raises(ValidationError):
        load_realization_file(path, sim_id=1, truth="bogus")


def test_header_row_is_optional(tmp_path):
    arrays = npci_arrays()
    plain = load_realization_file(write_npci(tmp_path / "a.csv", *arrays), sim_id=1)
    headed = load_realization_file(write_npci(tmp_path / "b.csv", *arrays, header=True), sim_id=1)
    np.testing.assert_array_equal(plain.covariates, headed.covariates)
    np.testing.assert_array_equal(plain.y0_true, headed.y0_true)


def test_wrong_covariate_count_is_schema_error(tmp_path):
    t, yf, ycf, mu0, mu1, x = npci_arrays()
    path = write_npci(tmp_path / "short.csv", t, yf, ycf, mu0, mu1, x[:, :24])
    with pytest.raises(SchemaError, match="24 covariates"):
        load_ihdp(path)
    diagnostics = check_ihdp_schema(path)
    assert len(diagnostics) == 1
    assert "24 covariates" in diagnostics[0].message


def test_truncated_row_names_line(tmp_path):
    path = write_npci(tmp_path / "r.csv", *npci_arrays())
    lines = path.read_text().splitlines()
    lines[6] = ",".join(lines[6].split(",")[:10])
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        load_ihdp(path)
    assert exc.value.line == 7
    assert ":7:" in str(exc.value)
    assert check_ihdp_schema(path)[0].row == 7


def test_single_group_is_rejected(tmp_path):
    t, yf, ycf, mu0, mu1, x = npci_arrays()
    path = write_npci(tmp_path / "r.csv", np.ones_like(t), yf, ycf, mu0, mu1, x)
    with pytest.raises(ValidationError, match="treated and control"):
        load_realization_file(path, sim_id=1)


def test_limit_and_missing_path(ihdp_dir, tmp_path):
    assert len(load_ihdp(ihdp_dir, limit=2)) == 2
    with pytest.raises(InputReadError):
        load_ihdp(tmp_path / "does-not-exist")
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(InputReadError):
        load_realizations(empty)


def test_written_synthetic_realization_reads_back(tmp_path):
    sim = generate_simulation(SyntheticConfig(n_units=30, seed=4, n_proxies=2), 0)
    path = tmp_path / "synthetic_0001.csv"
    write_realization(sim, path)
    assert path.read_text().splitlines()[0].startswith("treatment,y_factual,y_cfactual,mu0,mu1,x1,x2")

    back = load_realization_file(path, sim_id=sim.sim_id, n_covariates=None, source=DataSource.SYNTHETIC)
    for field in ("covariates", "t", "y_factual", "y0_true", "y1_true"):
        np.testing.assert_array_equal(getattr(back, field), getattr(sim, field))
