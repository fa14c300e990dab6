"""Metabolism network: SSA, ODE and EM paths for several values of m."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..config import BoundaryPolicy, SimConfig
from ..continuum import simulate_em, solve_ode
from ..models import load_bundled_model
from ..replication import derive_seed, stopwatch
from ..ssa import simulate_ssa
from ..trajectory import write_csv
from .timings import report_timings

LOGGER = logging.getLogger(__name__)

SIMULATORS = {"ssa": simulate_ssa, "ode": solve_ode, "em": simulate_em}


class MetabolismSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m_values: list[int] = Field(default_factory=lambda: [0, 3], min_length=1)
    methods: list[Literal["ssa", "ode", "em"]] = Field(default_factory=lambda: ["ssa", "ode", "em"], min_length=1)
    volume: float = Field(default=600.0, gt=0)
    horizon: float = Field(default=50.0, gt=0)
    x0: tuple[float, float] = (1.1, 1.1)
    em_step: float = Field(default=1e-3, gt=0)
    boundary_policy: BoundaryPolicy = BoundaryPolicy.CLAMP
    seed: int = Field(default=2024, ge=0)


def run(settings: MetabolismSettings, output_dir: Path, workers: int = 1) -> list[Path]:
    written: list[Path] = []
    timings: dict[str, float] = {}
    for index, m in enumerate(settings.m_values):
        network = load_bundled_model("metabolism", m=m)
        config = SimConfig(
            volume=settings.volume,
            x0=settings.x0,
            horizon=settings.horizon,
            em_step=settings.em_step,
            boundary_policy=settings.boundary_policy,
            seed=derive_seed(settings.seed, index),
        )
        for method in settings.methods:
            with stopwatch(timings, method):
                trajectory = SIMULATORS[method](network, config)
            path = output_dir / f"metabolism_m{m}_{method}.csv"
            write_csv(trajectory, path)
            LOGGER.info("m=%d %s: %d points -> %s", m, method, len(trajectory), path.name)
            written.append(path)
    written.append(report_timings(timings, output_dir / "metabolism_timings.csv"))
    return written
