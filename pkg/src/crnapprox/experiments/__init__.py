"""
Bundled experiments.

Each experiment module exposes a pydantic settings model and
``run(settings, output_dir, workers) -> list[Path]``. Defaults come from
``config/experiments.yml`` and are overridden by ``key=value`` tokens.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import ModuleType
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..config import load_experiment_defaults
from ..errors import ConfigurationError
from . import basins, convergence, coupled_demo, kmt_demo, metabolism

LOGGER = logging.getLogger(__name__)


class ExperimentName(str, Enum):
    METABOLISM = "metabolism"
    BISTABLE_BASINS = "bistable-basins"
    KMT_DEMO = "kmt-demo"
    CONVERGENCE = "convergence"
    COUPLED_DEMO = "coupled-demo"


REGISTRY: dict[ExperimentName, tuple[ModuleType, type[BaseModel]]] = {
    ExperimentName.METABOLISM: (metabolism, metabolism.MetabolismSettings),
    ExperimentName.BISTABLE_BASINS: (basins, basins.BasinSettings),
    ExperimentName.KMT_DEMO: (kmt_demo, kmt_demo.KmtDemoSettings),
    ExperimentName.CONVERGENCE: (convergence, convergence.ConvergenceSettings),
    ExperimentName.COUPLED_DEMO: (coupled_demo, coupled_demo.CoupledDemoSettings),
}


class ExperimentSpec(BaseModel):
    """Which experiment to run, with parameter overrides and the output directory."""

    model_config = ConfigDict(extra="forbid")

    name: ExperimentName
    overrides: dict[str, Any] = Field(default_factory=dict)
    output_dir: Path = Path("results")


@dataclass
class ExperimentResult:
    name: ExperimentName
    settings: BaseModel
    files: list[Path] = field(default_factory=list)
    elapsed: float = 0.0


def resolve_settings(spec: ExperimentSpec, defaults_path: str | Path | None = None) -> BaseModel:
    """
    Merge file defaults and overrides into the experiment's settings model.

    Raises:
        ConfigurationError: If an override names an unknown parameter or a value is invalid
    """
    _, settings_model = REGISTRY[spec.name]
    try:
        defaults = load_experiment_defaults(defaults_path).get(spec.name.value, {})
    except FileNotFoundError:
        if defaults_path is not None:
            raise
        LOGGER.debug("No experiment defaults file; using built-in defaults")
        defaults = {}
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    unknown = sorted(set(spec.overrides) - set(settings_model.model_fields))
    if unknown:
        known = ", ".join(sorted(settings_model.model_fields))
        raise ConfigurationError(f"unknown parameter(s) for {spec.name.value}: {', '.join(unknown)} (known: {known})")
    try:
        return settings_model.model_validate({**defaults, **spec.overrides})
    except ValidationError as e:
        raise ConfigurationError(f"invalid settings for {spec.name.value}: {e}") from e


def run_experiment(
    spec: ExperimentSpec, defaults_path: str | Path | None = None, workers: int = 1
) -> ExperimentResult:
    """
    Run one bundled experiment and write its CSV outputs.

    Args:
        spec: Experiment name, overrides and output directory
        defaults_path: Experiment defaults YAML (default: ``config/experiments.yml``)
        workers: Processes used for replications

    Returns:
        ExperimentResult listing the written files

    Raises:
        ConfigurationError: On unknown or invalid parameters
    """
    module, _ = REGISTRY[spec.name]
    settings = resolve_settings(spec, defaults_path)
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    LOGGER.info("Running experiment %s -> %s", spec.name.value, spec.output_dir)
    start = time.perf_counter()
    files = module.run(settings, spec.output_dir, workers=workers)
    elapsed = time.perf_counter() - start
    LOGGER.info("Experiment %s finished in %.2f s (%d files)", spec.name.value, elapsed, len(files))
    return ExperimentResult(name=spec.name, settings=settings, files=files, elapsed=elapsed)


__all__ = ["ExperimentName", "ExperimentResult", "ExperimentSpec", "REGISTRY", "resolve_settings", "run_experiment"]
