"""
Loader for IHDP / NPCI realization files.

Each realization is one CSV file whose rows are

    treatment, y_factual, y_cfactual, mu0, mu1, x1 .. x25

with or without a header row (the NPCI files ship without one). ``mu0`` and
``mu1`` are the noiseless potential outcome means.
"""
from __future__ import annotations
import csv
import logging
import re
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from effectbench.errors import InputReadError, ParseError, SchemaError, ValidationError
from effectbench.models.diagnostic import Diagnostic
from effectbench.models.realization import DataSource, SimulationRealization

log = logging.getLogger(__name__)

OUTCOME_COLUMNS = ["treatment", "y_factual", "y_cfactual", "mu0", "mu1"]
IHDP_COVARIATES = 25
TRUTH_MODES = ("mu", "outcomes")


def _natural_key(path: Path):
    return [int(tok) if tok.isdigit() else tok for tok in re.split(r"(\d+)", path.name)]


def realization_files(path: Path) -> List[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(path.glob("*.csv"), key=_natural_key)
    if path.exists():
        return [path]
    raise InputReadError(f"Realization path not found: {path}")


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _read_rows(path: Path, n_covariates: Optional[int]) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as f:
            rows = [(i, row) for i, row in enumerate(csv.reader(f), start=1) if row and any(c.strip() for c in row)]
    except OSError as e:
        raise InputReadError(f"Cannot read {path}: {e}") from e
    if not rows:
        raise ParseError("file is empty", path)

    header_line, first = rows[0]
    order: Optional[List[int]] = None
    if not _is_number(first[0].strip()):
        names = [h.strip().lower() for h in first]
        missing = [c for c in OUTCOME_COLUMNS if c not in names]
        if missing:
            raise SchemaError(f"{path}: missing columns {', '.join(missing)}")
        covs = [i for i, h in enumerate(names) if re.fullmatch(r"x\d+", h)]
        order = [names.index(c) for c in OUTCOME_COLUMNS] + covs
        rows = rows[1:]
        width = len(first)
    else:
        width = len(first)
        if width < len(OUTCOME_COLUMNS) + 1:
            raise SchemaError(
                f"{path}: {width} columns; expected {', '.join(OUTCOME_COLUMNS)} followed by covariates"
            )
        order = list(range(width))

    d = len(order) - len(OUTCOME_COLUMNS)
    if n_covariates is not None and d != n_covariates:
        raise SchemaError(f"{path}: found {d} covariates, expected {n_covariates}")

    data = np.empty((len(rows), len(order)), dtype=np.float64)
    for r, (line, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", path, line)
        try:
            data[r] = [float(row[c]) for c in order]
        except ValueError as e:
            raise ParseError(f"non-numeric value ({e})", path, line) from None
        if not np.all(np.isfinite(data[r])):
            raise ParseError("NaN or infinite value", path, line)
    if data.shape[0] == 0:
        raise ParseError("no data rows", path, header_line)
    return data


def load_realization_file(
    path: Path,
    sim_id: int,
    n_covariates: Optional[int] = None,
    truth: str = "mu",
    source: DataSource = DataSource.IHDP,
) -> SimulationRealization:
    if truth not in TRUTH_MODES:
        raise ValidationError(f"truth must be one of {TRUTH_MODES}, got '{truth}'")
    data = _read_rows(Path(path), n_covariates)
    t, yf, ycf, mu0, mu1 = (data[:, i] for i in range(len(OUTCOME_COLUMNS)))
    if not np.all((t == 0.0) | (t == 1.0)):
        raise ValidationError(f"{path}: treatment column must be 0 or 1")
    n_treated = int(t.sum())
    if n_treated == 0 or n_treated == t.size:
        raise ValidationError(f"{path}: needs both treated and control units (treated={n_treated}, n={t.size})")

    if truth == "mu":
        y0_true, y1_true = mu0, mu1
    else:
        y0_true = np.where(t == 1.0, ycf, yf)
        y1_true = np.where(t == 1.0, yf, ycf)

    return SimulationRealization(
        sim_id=sim_id,
        covariates=data[:, len(OUTCOME_COLUMNS):],
        t=t,
        y_factual=yf,
        y0_true=y0_true,
        y1_true=y1_true,
        source=source,
        y_cfactual=ycf,
    )


def load_realizations(
    path: Path,
    limit: Optional[int] = None,
    n_covariates: Optional[int] = None,
    truth: str = "mu",
    source: DataSource = DataSource.IHDP,
) -> List[SimulationRealization]:
    files = realization_files(path)
    if limit is not None:
        files = files[:limit]
    if not files:
        raise InputReadError(f"No realization CSV files found in {path}")
    sims = [
        load_realization_file(f, sim_id=i, n_covariates=n_covariates, truth=truth, source=source)
        for i, f in enumerate(files, start=1)
    ]
    log.info(f"Loaded {len(sims)} realizations from {path}")
    return sims


def load_ihdp(path: Path, limit: Optional[int] = None, truth: str = "mu") -> List[SimulationRealization]:
    sims = load_realizations(path, limit=limit, n_covariates=IHDP_COVARIATES, truth=truth)
    for s in sims:
        log.debug(f"IHDP realization {s.sim_id}: {s.n_units} units, {s.n_treated} treated, {s.n_control} control")
    return sims


def check_ihdp_schema(
    path: Path, limit: Optional[int] = None, n_covariates: Optional[int] = IHDP_COVARIATES
) -> List[Diagnostic]:
    diagnostics: List[Diagnostic] = []
    files = realization_files(path)
    if limit is not None:
        files = files[:limit]
    if not files:
        return [Diagnostic(str(path), "no realization CSV files found")]
    for i, f in enumerate(files, start=1):
        try:
            load_realization_file(f, sim_id=i, n_covariates=n_covariates)
        except ParseError as e:
            diagnostics.append(Diagnostic(str(f), str(e), row=e.line))
        except (SchemaError, ValidationError) as e:
            diagnostics.append(Diagnostic(str(f), str(e)))
    return diagnostics


def write_realization(realization: SimulationRealization, path: Path) -> None:
    """Write a realization in the NPCI column layout, with a header row.

    When no sampled counterfactual exists, ``y_cfactual`` carries the
    counterfactual arm's ground truth.
    """
    treated = realization.treated
    ycf = realization.y_cfactual
    if ycf is None:
        ycf = np.where(treated, realization.y0_true, realization.y1_true)
    header = OUTCOME_COLUMNS + [f"x{j + 1}" for j in range(realization.n_covariates)]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i in range(realization.n_units):
            row: Sequence[float] = [
                realization.t[i],
                realization.y_factual[i],
                ycf[i],
                realization.y0_true[i],
                realization.y1_true[i],
                *realization.covariates[i],
            ]
            writer.writerow([repr(float(v)) for v in row])


__all__ = [
    "OUTCOME_COLUMNS",
    "IHDP_COVARIATES",
    "realization_files",
    "load_realization_file",
    "load_realizations",
    "load_ihdp",
    "check_ihdp_schema",
    "write_realization",
]
