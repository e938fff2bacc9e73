"""
CSV ingestion for potential outcomes and precomputed errors.

Format A, one file per simulation:
    unit,t,y0_true,y1_true,<model>_y0,<model>_y1,...
Format B, one file per metric:
    sim,<model1>,<model2>,...
Headers are case-sensitive for model names; fixed columns are matched
case-insensitively.
"""
from __future__ import annotations
import csv
import logging
import math
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from effectbench.errors import InputReadError, ParseError, SchemaError, ValidationError
from effectbench.models.diagnostic import Diagnostic
from effectbench.models.outcomes import ErrorMatrix, Metric, ModelPrediction, PotentialOutcomeTable

log = logging.getLogger(__name__)

OUTCOME_FIXED = ["unit", "t", "y0_true", "y1_true"]


def _open_rows(path: Path) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    path = Path(path)
    if not path.exists():
        raise InputReadError(f"Input file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8-sig", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            rows = [(i, row) for i, row in enumerate(reader, start=2) if row]
    except OSError as e:
        raise InputReadError(f"Cannot read {path}: {e}") from e
    if not header:
        raise ParseError("missing header row", path, 1)
    return [h.strip() for h in header], rows


def _parse_float(text: str, path: Path, line: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"column '{column}': cannot parse '{text}' as a number", path, line) from None
    if not math.isfinite(value):
        raise ParseError(f"column '{column}': NaN or infinite value", path, line)
    return value


def _sim_id_from_name(path: Path, default: int) -> int:
    digits = re.findall(r"\d+", path.stem)
    return int(digits[-1]) if digits else default


def read_outcome_table(path: Path, sim_id: Optional[int] = None) -> PotentialOutcomeTable:
    path = Path(path)
    header, rows = _open_rows(path)
    lower = [h.lower() for h in header]
    missing = [c for c in OUTCOME_FIXED if c not in lower]
    if missing:
        raise SchemaError(f"{path}: missing columns {', '.join(missing)}")

    models: List[str] = []
    columns: Dict[str, Dict[str, int]] = {}
    for idx, name in enumerate(header):
        if name.lower() in OUTCOME_FIXED:
            continue
        m = re.fullmatch(r"(.+)_(y0|y1)", name)
        if not m:
            raise SchemaError(f"{path}: column '{name}' is neither fixed nor '<model>_y0'/'<model>_y1'")
        model, arm = m.groups()
        if model not in columns:
            models.append(model)
            columns[model] = {}
        columns[model][arm] = idx
    incomplete = [m for m in models if set(columns[m]) != {"y0", "y1"}]
    if incomplete:
        raise SchemaError(f"{path}: models missing a _y0 or _y1 column: {', '.join(incomplete)}")
    if not rows:
        raise ParseError("no data rows", path, 1)

    data = np.empty((len(rows), len(header)), dtype=np.float64)
    for r, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        data[r] = [_parse_float(v, path, line, header[c]) for c, v in enumerate(row)]

    col = {name: lower.index(name) for name in OUTCOME_FIXED}
    predictions = {
        m: ModelPrediction(y0_hat=data[:, columns[m]["y0"]], y1_hat=data[:, columns[m]["y1"]])
        for m in models
    }
    return PotentialOutcomeTable(
        sim_id=sim_id if sim_id is not None else _sim_id_from_name(path, 1),
        y0_true=data[:, col["y0_true"]],
        y1_true=data[:, col["y1_true"]],
        predictions=predictions,
        t=data[:, col["t"]],
    )


def outcome_files(directory: Path) -> List[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise InputReadError(f"Outcome directory not found: {directory}")
    return sorted(directory.glob("*.csv"), key=lambda p: (_sim_id_from_name(p, 0), p.name))


def read_outcome_dir(directory: Path) -> List[PotentialOutcomeTable]:
    files = outcome_files(directory)
    if not files:
        raise InputReadError(f"No outcome CSV files in {directory}")
    tables = [read_outcome_table(f, sim_id=_sim_id_from_name(f, i)) for i, f in enumerate(files, start=1)]
    seen: Dict[int, Path] = {}
    for f, table in zip(files, tables):
        if table.sim_id in seen:
            raise ValidationError(f"{f}: simulation id {table.sim_id} already taken by {seen[table.sim_id].name}")
        seen[table.sim_id] = f
    log.info(f"Loaded {len(tables)} potential-outcome tables from {directory}")
    return tables


def write_outcome_table(table: PotentialOutcomeTable, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(OUTCOME_FIXED)
    for m in table.models:
        header += [f"{m}_y0", f"{m}_y1"]
    t = table.t if table.t is not None else np.zeros(table.n_units)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i in range(table.n_units):
            row = [str(i), str(int(t[i])), repr(float(table.y0_true[i])), repr(float(table.y1_true[i]))]
            for m in table.models:
                pred = table.predictions[m]
                row += [repr(float(pred.y0_hat[i])), repr(float(pred.y1_hat[i]))]
            writer.writerow(row)


def read_error_matrix(path: Path, metric: Metric) -> ErrorMatrix:
    path = Path(path)
    header, rows = _open_rows(path)
    if header[0].lower() != "sim":
        raise SchemaError(f"{path}: first column must be 'sim', found '{header[0]}'")
    models = header[1:]
    if not rows:
        raise ParseError("no data rows", path, 1)
    sims: List[int] = []
    values = np.empty((len(rows), len(models)), dtype=np.float64)
    for r, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", path, line)
        try:
            sims.append(int(row[0]))
        except ValueError:
            raise ParseError(f"sim id '{row[0]}' is not an integer", path, line) from None
        values[r] = [_parse_float(v, path, line, models[c]) for c, v in enumerate(row[1:])]
    return ErrorMatrix(metric=metric, models=tuple(models), sims=tuple(sims), values=values)


def write_error_matrix(errors: ErrorMatrix, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sim", *errors.models])
        for s, row in zip(errors.sims, errors.values):
            writer.writerow([str(s), *(repr(float(v)) for v in row)])


def check_error_csv(path: Path) -> List[Diagnostic]:
    """Scan a format-B file and report every problem instead of stopping at the first."""
    header, rows = _open_rows(path)
    source = str(path)
    diagnostics: List[Diagnostic] = []
    if not header or header[0].lower() != "sim":
        diagnostics.append(Diagnostic(source, "first column must be 'sim'", row=1))
    models = header[1:]
    if len(models) < 2:
        diagnostics.append(Diagnostic(source, f"at least 2 model columns required, found {len(models)}", row=1))
    if len(set(models)) != len(models):
        diagnostics.append(Diagnostic(source, "duplicate model columns", row=1))
    if not rows:
        diagnostics.append(Diagnostic(source, "no data rows"))
    for line, row in rows:
        if len(row) != len(header):
            diagnostics.append(Diagnostic(source, f"expected {len(header)} fields, found {len(row)}", row=line))
            continue
        for name, text in zip(models, row[1:]):
            try:
                value = float(text)
            except ValueError:
                diagnostics.append(Diagnostic(source, f"not a number: '{text}'", row=line, column=name))
                continue
            if math.isnan(value) or math.isinf(value):
                diagnostics.append(Diagnostic(source, "NaN or infinite value", row=line, column=name))
            elif value < 0:
                diagnostics.append(Diagnostic(source, f"negative error {value}", row=line, column=name))
    return diagnostics


def read_p_values(path: Path) -> Tuple[List[str], List[float]]:
    """Read injected raw pairwise p-values: ``model_a,model_b,p_raw``.

    Rows must be in lexicographic pair order of the models' first appearance.
    """
    path = Path(path)
    header, rows = _open_rows(path)
    if [h.lower() for h in header[:3]] != ["model_a", "model_b", "p_raw"]:
        raise SchemaError(f"{path}: expected header model_a,model_b,p_raw")
    models: List[str] = []
    pairs = []
    for line, row in rows:
        if len(row) < 3:
            raise ParseError("expected model_a,model_b,p_raw", path, line)
        a, b = row[0].strip(), row[1].strip()
        for m in (a, b):
            if m not in models:
                models.append(m)
        pairs.append(((a, b), _parse_float(row[2], path, line, "p_raw"), line))
    order = {m: i for i, m in enumerate(models)}
    keyed = {}
    for (a, b), p, line in pairs:
        i, j = sorted((order[a], order[b]))
        keyed[(i, j)] = p
    expected = [(i, j) for i in range(len(models)) for j in range(i + 1, len(models))]
    if len(pairs) != len(expected) or sorted(keyed) != expected:
        raise SchemaError(f"{path}: p-values must cover every model pair exactly once")
    return models, [keyed[ij] for ij in expected]


__all__ = [
    "read_outcome_table",
    "outcome_files",
    "read_outcome_dir",
    "write_outcome_table",
    "read_error_matrix",
    "write_error_matrix",
    "check_error_csv",
    "read_p_values",
]
