from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, List, Optional
import os
import sys
from dotenv import load_dotenv
import yaml
import pydantic
from pydantic import BaseModel, Field, field_validator, model_validator

from effectbench.data.ihdp import IHDP_COVARIATES, TRUTH_MODES
from effectbench.data.synthetic import SyntheticConfig
from effectbench.errors import InputReadError, ValidationError
from effectbench.estimators.baselines import DEFAULT_ESTIMATORS, EstimatorSpec, check_unique_names
from effectbench.models.outcomes import Metric
from effectbench.stats.profiles import Scale

ENV_OUTPUT_DIR = "EFFECTBENCH_OUTPUT_DIR"
ENV_SEED = "EFFECTBENCH_SEED"
CONFIG_NAMES = ("config.yaml", "config.json")


class DataConfig(BaseModel):
    source: str = Field("synthetic", pattern="^(synthetic|ihdp|outcomes|errors)$")
    synthetic: SyntheticConfig = SyntheticConfig()
    ihdp_path: Optional[str] = None
    ihdp_limit: Optional[int] = Field(None, ge=1)
    # null accepts any covariate count (e.g. files written by gen-synthetic)
    n_covariates: Optional[int] = Field(IHDP_COVARIATES, ge=1)
    # "mu": noiseless mu0/mu1 columns; "outcomes": factual + counterfactual draws
    truth: str = "mu"
    outcomes_dir: Optional[str] = None
    # metric name -> precomputed error CSV (sim,<model>,...)
    error_files: Dict[Metric, str] = Field(default_factory=dict)

    @field_validator("truth")
    @classmethod
    def check_truth(cls, v):
        if v not in TRUTH_MODES:
            raise ValueError(f"truth must be one of {', '.join(TRUTH_MODES)}")
        return v

    @model_validator(mode="after")
    def check_source_inputs(self):
        if self.source == "ihdp" and not self.ihdp_path:
            raise ValueError("data.source 'ihdp' requires data.ihdp_path")
        if self.source == "outcomes" and not self.outcomes_dir:
            raise ValueError("data.source 'outcomes' requires data.outcomes_dir")
        if self.source == "errors" and not self.error_files:
            raise ValueError("data.source 'errors' requires data.error_files")
        return self


class ConcurrencyConfig(BaseModel):
    mode: str = Field("thread", pattern="^(process|thread)$")
    # 0 or 1 runs everything in the calling thread
    max_workers: int = Field(1, ge=0)


class BenchmarkConfig(BaseModel):
    data: DataConfig = DataConfig()
    metrics: List[Metric] = Field(default_factory=lambda: [Metric.ATE_ABS, Metric.PEHE], min_length=1)
    estimators: List[EstimatorSpec] = Field(default_factory=lambda: list(DEFAULT_ESTIMATORS))
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    output_dir: str = "reports"
    scale: Scale = Scale.LOG10
    root_pehe: bool = False
    # write each simulation's baseline predictions as outcome tables under predictions/
    save_predictions: bool = False
    concurrency: ConcurrencyConfig = ConcurrencyConfig()
    logging: dict = Field(default_factory=lambda: {"level": "INFO"})

    _config_base_path: Optional[Path] = None

    @field_validator("metrics")
    @classmethod
    def unique_metrics(cls, v):
        seen: List[Metric] = []
        for m in v:
            if m not in seen:
                seen.append(m)
        return seen

    @field_validator("estimators")
    @classmethod
    def unique_estimators(cls, v):
        check_unique_names(v)
        return v

    @property
    def seed(self) -> int:
        return self.data.synthetic.seed

    def resolve_path(self, path_str: str | Path) -> Path:
        """Resolve a relative path against the project root.

        A config at /proj/config/config.yaml resolves 'reports' to
        /proj/reports; a config anywhere else resolves next to itself.
        """
        p = Path(path_str)
        if p.is_absolute():
            return p
        if self._config_base_path:
            if self._config_base_path.name == "config":
                return self._config_base_path.parent / p
            return self._config_base_path / p
        return Path.cwd() / p

    def with_overrides(
        self,
        output_dir: Optional[str | Path] = None,
        seed: Optional[int] = None,
        alpha: Optional[float] = None,
        metrics: Optional[List[Metric]] = None,
        scale: Optional[Scale] = None,
        n_sims: Optional[int] = None,
        n_units: Optional[int] = None,
    ) -> "BenchmarkConfig":
        """Return a re-validated copy with the given fields replaced."""
        data: Dict[str, Any] = self.model_dump()
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        if seed is not None:
            data["data"]["synthetic"]["seed"] = seed
        if n_sims is not None:
            data["data"]["synthetic"]["n_sims"] = n_sims
        if n_units is not None:
            data["data"]["synthetic"]["n_units"] = n_units
        if alpha is not None:
            data["alpha"] = alpha
        if metrics:
            data["metrics"] = list(metrics)
        if scale is not None:
            data["scale"] = scale
        cfg = _validate(data, source="overrides")
        cfg._config_base_path = self._config_base_path
        return cfg

    def apply_env_overrides(self) -> "BenchmarkConfig":
        # .env next to the config wins over one in CWD; neither overrides
        # variables already present in the environment.
        if self._config_base_path:
            env_path = self._config_base_path / ".env"
            if env_path.exists():
                load_dotenv(env_path)
        env_path_cwd = Path(".env")
        if env_path_cwd.exists():
            load_dotenv(env_path_cwd)

        out = os.getenv(ENV_OUTPUT_DIR)
        seed_text = os.getenv(ENV_SEED)
        seed = None
        if seed_text:
            try:
                seed = int(seed_text)
            except ValueError:
                raise ValidationError(f"{ENV_SEED} must be an integer, got '{seed_text}'") from None
        if out is None and seed is None:
            return self
        return self.with_overrides(output_dir=out or None, seed=seed)

    @classmethod
    def from_file(cls, path: str | Path) -> "BenchmarkConfig":
        """Load a YAML or JSON config file and apply environment overrides."""
        path = Path(path)
        if not path.exists():
            raise InputReadError(f"Config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ValidationError(f"{path}: cannot parse config ({e})") from e
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a mapping, got {type(data).__name__}")
        cfg = _validate(data, source=str(path))
        cfg._config_base_path = path.parent.absolute()
        return cfg.apply_env_overrides()


def _validate(data: Dict[str, Any], source: str) -> BenchmarkConfig:
    try:
        return BenchmarkConfig.model_validate(data)
    except pydantic.ValidationError as e:
        raise ValidationError(f"{source}: invalid configuration\n{e}") from e


def load_config(config_name: Optional[str] = None) -> BenchmarkConfig:
    """
    Search for a config file in priority order:
    1. ./config/config.yaml or ./config/config.json
    2. {exe_dir}/config/ for portable installs
    3. ./config.yaml (legacy)
    """
    names = [config_name] if config_name else list(CONFIG_NAMES)
    candidates = [Path.cwd() / "config" / n for n in names]
    candidates += [Path(sys.executable).parent / "config" / n for n in names]
    candidates += [Path.cwd() / n for n in names]
    for c in candidates:
        if c.exists():
            return BenchmarkConfig.from_file(c)
    raise InputReadError(
        f"Could not find {' or '.join(names)} in ./config, the executable directory or the working directory. "
        "Pass --config explicitly."
    )


__all__ = ["BenchmarkConfig", "DataConfig", "ConcurrencyConfig", "load_config", "ENV_OUTPUT_DIR", "ENV_SEED"]
