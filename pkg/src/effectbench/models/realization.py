from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from effectbench.errors import ValidationError


class DataSource(str, Enum):
    SYNTHETIC = "SYNTHETIC"
    IHDP = "IHDP"


@dataclass(frozen=True)
class SimulationRealization:
    sim_id: int
    covariates: np.ndarray  # n x d
    t: np.ndarray
    y_factual: np.ndarray
    y0_true: np.ndarray
    y1_true: np.ndarray
    source: DataSource
    y_cfactual: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.array(self.covariates, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        n = x.shape[0]
        fields = {"t": self.t, "y_factual": self.y_factual, "y0_true": self.y0_true, "y1_true": self.y1_true}
        if self.y_cfactual is not None:
            fields["y_cfactual"] = self.y_cfactual
        for name, values in fields.items():
            arr = np.array(values, dtype=np.float64).reshape(-1)
            if arr.size != n:
                raise ValidationError(f"Simulation {self.sim_id}: {name} has {arr.size} units, expected {n}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"Simulation {self.sim_id}: {name} contains non-finite values")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(x)):
            raise ValidationError(f"Simulation {self.sim_id}: covariates contain non-finite values")
        if not np.all((self.t == 0.0) | (self.t == 1.0)):
            raise ValidationError(f"Simulation {self.sim_id}: treatment must be 0 or 1")
        x.setflags(write=False)
        object.__setattr__(self, "covariates", x)
        object.__setattr__(self, "source", DataSource(self.source))

    @property
    def n_units(self) -> int:
        return int(self.covariates.shape[0])

    @property
    def n_covariates(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def treated(self) -> np.ndarray:
        return self.t == 1.0

    @property
    def n_treated(self) -> int:
        return int(self.treated.sum())

    @property
    def n_control(self) -> int:
        return self.n_units - self.n_treated

    @property
    def ite_true(self) -> np.ndarray:
        return self.y1_true - self.y0_true


__all__ = ["DataSource", "SimulationRealization"]
