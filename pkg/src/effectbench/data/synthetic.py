"""
Synthetic hidden-confounder dataset.

Per unit:
    z ~ Bern(0.5)
    t | z ~ Bern(0.75 z + 0.25 (1 - z))
    x | z ~ Normal(z, sigma_z1^2 z + sigma_z0^2 (1 - z))
    y | t, z ~ Bern(sigmoid(3 (z + 2 (2 t - 1))))

Each simulation draws from its own Philox stream spawned from the config
seed, so simulations can be generated in any order with identical output.
"""
from __future__ import annotations
import logging
from concurrent.futures import Executor
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import expit

from effectbench.models.realization import DataSource, SimulationRealization

log = logging.getLogger(__name__)


class SyntheticConfig(BaseModel):
    n_units: int = Field(500, ge=2)
    n_sims: int = Field(200, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    # Proxy noise scale for z=0 units and for z=1 units.
    sigma_z0: float = Field(3.0, gt=0)
    sigma_z1: float = Field(5.0, gt=0)
    noiseless_truth: bool = True
    n_proxies: int = Field(1, ge=1)


def outcome_probability(z: np.ndarray, t) -> np.ndarray:
    return expit(3.0 * (z + 2.0 * (2.0 * np.asarray(t, dtype=np.float64) - 1.0)))


def simulation_rng(seed: int, sim_index: int) -> np.random.Generator:
    child = np.random.SeedSequence(seed, spawn_key=(sim_index,))
    return np.random.Generator(np.random.Philox(child))


def generate_simulation(config: SyntheticConfig, sim_index: int) -> SimulationRealization:
    rng = simulation_rng(config.seed, sim_index)
    n = config.n_units

    z = rng.binomial(1, 0.5, size=n).astype(np.float64)
    t = rng.binomial(1, 0.75 * z + 0.25 * (1.0 - z)).astype(np.float64)
    scale = np.where(z == 1.0, config.sigma_z1, config.sigma_z0)
    x = z[:, None] + scale[:, None] * rng.standard_normal((n, config.n_proxies))

    q0 = outcome_probability(z, 0)
    q1 = outcome_probability(z, 1)
    if config.noiseless_truth:
        y0_true, y1_true = q0, q1
        y_factual = rng.binomial(1, np.where(t == 1.0, q1, q0)).astype(np.float64)
        y_cfactual = None
    else:
        y0_true = rng.binomial(1, q0).astype(np.float64)
        y1_true = rng.binomial(1, q1).astype(np.float64)
        y_factual = np.where(t == 1.0, y1_true, y0_true)
        y_cfactual = np.where(t == 1.0, y0_true, y1_true)

    return SimulationRealization(
        sim_id=sim_index + 1,
        covariates=x,
        t=t,
        y_factual=y_factual,
        y0_true=y0_true,
        y1_true=y1_true,
        source=DataSource.SYNTHETIC,
        y_cfactual=y_cfactual,
    )


def generate_synthetic(config: SyntheticConfig, executor: Optional[Executor] = None) -> List[SimulationRealization]:
    indices = range(config.n_sims)
    if executor is None:
        sims = [generate_simulation(config, i) for i in indices]
    else:
        sims = list(executor.map(generate_simulation, [config] * config.n_sims, indices))
    log.info(
        f"Generated {len(sims)} synthetic simulations of {config.n_units} units "
        f"(seed={config.seed}, noiseless_truth={config.noiseless_truth})"
    )
    return sims


__all__ = [
    "SyntheticConfig",
    "outcome_probability",
    "simulation_rng",
    "generate_simulation",
    "generate_synthetic",
]
