"""Configuration: YAML defaults, an optional user file and one environment override."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import yaml

from core.bootstrap import CostParams, ExperimentConfig
from core.constants import DEFAULT_SEED, ORACLE_REL_TOL, POOLED_REL_TOL
from core.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).resolve().parent.parent / "config" / "defaults.yaml"
OUTPUT_FORMAT_ENV = "BOOTSIM_OUTPUT_FORMAT"
OUTPUT_FORMATS = ("json", "csv", "text")


@dataclass(frozen=True)
class Settings:
    dataset_size: int
    num_resamples: int
    num_processes: int
    seed: int
    bandwidth: float
    compute_speed: float
    output_format: str
    oracle_rel_tol: float
    pooled_rel_tol: float

    def experiment(self) -> ExperimentConfig:
        return ExperimentConfig(self.dataset_size, self.num_resamples, self.num_processes, self.seed)

    def cost_params(self) -> CostParams:
        return CostParams(self.bandwidth, self.compute_speed)


def _read_yaml(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r") as f:
            loaded = yaml.safe_load(f) or {}
    except OSError as exc:
        raise ConfigurationError(f"Cannot read configuration file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"Malformed YAML in {path}: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigurationError(f"{path} must hold a mapping at top level")
    return loaded


def _merge(base: Dict[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_settings(
    path: Optional[Union[str, Path]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> Settings:
    """Defaults, then ``path`` if given, then the output-format environment variable."""
    raw = _read_yaml(DEFAULTS_PATH)
    if path is not None:
        raw = _merge(raw, _read_yaml(Path(path)))
        logger.info(f"Loaded configuration overrides from {path}")

    env = os.environ if environ is None else environ
    experiment = raw.get("experiment", {})
    cost = raw.get("cost", {})
    tolerances = raw.get("tolerances", {})
    output_format = str(env.get(OUTPUT_FORMAT_ENV) or raw.get("report", {}).get("format", "json")).lower()
    if output_format not in OUTPUT_FORMATS:
        raise ConfigurationError(
            f"Output format must be one of {OUTPUT_FORMATS}, got {output_format!r}"
        )

    try:
        return Settings(
            dataset_size=int(experiment["dataset_size"]),
            num_resamples=int(experiment["num_resamples"]),
            num_processes=int(experiment["num_processes"]),
            seed=int(experiment.get("seed", DEFAULT_SEED)),
            bandwidth=float(cost["bandwidth"]),
            compute_speed=float(cost["compute_speed"]),
            output_format=output_format,
            oracle_rel_tol=float(tolerances.get("oracle_rel", ORACLE_REL_TOL)),
            pooled_rel_tol=float(tolerances.get("pooled_rel", POOLED_REL_TOL)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"Incomplete or invalid configuration: {exc}") from exc
