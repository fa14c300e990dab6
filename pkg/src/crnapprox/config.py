"""
Simulation configuration and experiment defaults.

``SimConfig`` is the typed run configuration shared by every simulator.
Experiment defaults live in ``config/experiments.yml`` and are loaded through a
cached, lock-guarded reader that picks up edits to the file.
"""

from __future__ import annotations

import logging
import math
import threading
from enum import Enum
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

LOGGER = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DEFAULT_EXPERIMENTS_PATH = PROJECT_ROOT / "config" / "experiments.yml"

_DEFAULTS_LOCK = threading.Lock()
_DEFAULTS_CACHE: dict[Path, tuple[float, dict[str, dict[str, Any]]]] = {}


class BoundaryPolicy(str, Enum):
    """What the diffusion integrator does near the boundary of the orthant."""

    CLAMP = "clamp"
    ABSORB = "absorb"


class SimConfig(BaseModel):
    """Run configuration for SSA, ODE, EM and coupled simulations."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    volume: float = Field(gt=0, description="System size V")
    x0: tuple[float, ...] = Field(min_length=1, description="Initial concentrations")
    horizon: float = Field(gt=0, description="Final time T")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Master seed of the run")
    em_step: float = Field(default=1e-3, gt=0, description="ODE / Euler-Maruyama step delta")
    kmt_step: float = Field(default=1e-4, gt=0, description="KMT noise grid step Delta")
    boundary_policy: BoundaryPolicy = Field(default=BoundaryPolicy.CLAMP)
    absorb_threshold: float | None = Field(
        default=None, ge=0, description="Freeze threshold for boundary_policy=absorb (None: 1/(2V))"
    )
    domain_upper_bounds: tuple[float, ...] | None = Field(
        default=None, description="Upper corner of the open box (0, upper) used for exit detection"
    )
    event_cap: int = Field(default=10**8, gt=0, description="Maximum number of SSA events per run")
    noise_safety_factor: float = Field(default=1.5, ge=1.0)
    max_noise_points: int = Field(default=2**24, ge=2, description="Largest KMT grid per channel")

    @field_validator("x0")
    @classmethod
    def _validate_x0(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        for value in v:
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"initial concentrations must be finite and non-negative, got {list(v)}")
        return v

    @field_validator("volume", "horizon", "em_step", "kmt_step")
    @classmethod
    def _validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @model_validator(mode="after")
    def _validate_bounds(self) -> "SimConfig":
        bounds = self.domain_upper_bounds
        if bounds is not None:
            if len(bounds) != len(self.x0):
                raise ValueError(
                    f"domain_upper_bounds has {len(bounds)} entries but x0 has {len(self.x0)}"
                )
            if any(not value > 0 for value in bounds):
                raise ValueError("domain_upper_bounds must be positive")
        return self

    @property
    def threshold(self) -> float:
        """Effective absorb threshold."""
        if self.absorb_threshold is not None:
            return self.absorb_threshold
        return 1.0 / (2.0 * self.volume)

    def with_seed(self, seed: int) -> "SimConfig":
        return self.model_copy(update={"seed": int(seed)})

    def updated(self, **changes: Any) -> "SimConfig":
        """Validated copy with ``changes`` applied."""
        return SimConfig.model_validate({**self.model_dump(), **changes})


def load_experiment_defaults(
    path: str | Path | None = None, *, force_reload: bool = False
) -> dict[str, dict[str, Any]]:
    """
    Load the per-experiment default parameters.

    Args:
        path: YAML file (default: ``config/experiments.yml`` in the repo root)
        force_reload: Ignore the cache even if the file is unchanged

    Returns:
        Mapping of experiment name to its parameter mapping

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the YAML is malformed or not a mapping of mappings
    """
    config_file = Path(path) if path is not None else DEFAULT_EXPERIMENTS_PATH
    if not config_file.exists():
        raise FileNotFoundError(f"Experiment defaults not found: {config_file}")

    mtime = config_file.stat().st_mtime
    with _DEFAULTS_LOCK:
        cached = _DEFAULTS_CACHE.get(config_file)
        if cached is not None and not force_reload and cached[0] == mtime:
            return {name: dict(params) for name, params in cached[1].items()}

        try:
            with open(config_file, encoding="utf-8") as f:
                raw = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML in {config_file}: {e}") from e

        experiments = raw.get("experiments", raw) if isinstance(raw, dict) else None
        if not isinstance(experiments, dict) or not all(
            isinstance(v, dict) for v in experiments.values()
        ):
            raise ValueError(f"{config_file} must map experiment names to parameter mappings")

        _DEFAULTS_CACHE[config_file] = (mtime, experiments)
        LOGGER.debug("Loaded experiment defaults from %s (%d entries)", config_file, len(experiments))
        return {name: dict(params) for name, params in experiments.items()}


def parse_override(token: str) -> tuple[str, Any]:
    """Split a ``key=value`` token; the value is parsed as YAML."""
    key, sep, value = token.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"override must look like key=value, got {token!r}")
    try:
        parsed = yaml.safe_load(value) if value.strip() else None
    except yaml.YAMLError as e:
        raise ValueError(f"cannot parse value of override {key!r}: {e}") from e
    return key.replace("-", "_"), parsed
