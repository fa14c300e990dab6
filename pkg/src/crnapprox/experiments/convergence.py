"""
Scaling studies on the metabolism network (m = 0).

``fluid_limit``: median sup-distance between SSA density paths and the ODE
solution per volume, with the fitted log-log slope (expected near -1/2).

``coupling``: median sup-distance between KMT-coupled CTMC and diffusion
paths per volume; it should shrink as V grows.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config import SimConfig
from ..continuum import solve_ode
from ..coupled import StudyRow, sup_distance_study, write_study_csv
from ..models import load_bundled_model
from ..network import ReactionNetwork
from ..replication import derive_seed, run_replications
from ..ssa import simulate_ssa
from ..trajectory import Trajectory, sup_distance

LOGGER = logging.getLogger(__name__)


class ConvergenceSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m: int = Field(default=0, ge=0)
    seed: int = Field(default=7, ge=0)
    seeds: int = Field(default=20, ge=1)
    fluid_volumes: list[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4], min_length=2)
    fluid_horizon: float = Field(default=5.0, gt=0)
    fluid_x0: tuple[float, float] = (0.5, 1.5)
    ode_step: float = Field(default=1e-3, gt=0)
    coupling_volumes: list[float] = Field(default_factory=lambda: [200.0, 400.0, 800.0], min_length=1)
    coupling_horizon: float = Field(default=1.0, gt=0)
    coupling_x0: tuple[float, float] = (1.0, 1.0)
    coupling_step: float = Field(default=1e-3, gt=0, description="Euler step delta of the coupled scheme")
    kmt_step: float = Field(default=0.1, gt=0)
    upper_bounds: tuple[float, float] = (2.5, 2.5)
    run_fluid: bool = True
    run_coupling: bool = True


def _fluid_distance(job: tuple[ReactionNetwork, SimConfig, Trajectory]) -> float:
    network, config, reference = job
    return sup_distance(simulate_ssa(network, config), reference)


def fluid_limit_study(
    network: ReactionNetwork, template: SimConfig, volumes: list[float], seeds: int, workers: int = 1
) -> list[StudyRow]:
    """Median over seeds of ``sup_t |X_V(t)/V - x(t)|`` on the ODE grid, per volume."""
    reference = solve_ode(network, template)
    seed_list = [derive_seed(template.seed, i) for i in range(seeds)]
    rows = []
    for volume in sorted(volumes):
        base = template.updated(volume=float(volume))
        jobs = [(network, base.with_seed(seed), reference) for seed in seed_list]
        distances = run_replications(_fluid_distance, jobs, workers)
        rows.append(StudyRow(volume=float(volume), median_sup_distance=float(np.median(distances)), seeds=seeds))
        LOGGER.info("fluid limit V=%g: median sup distance %.6g", volume, rows[-1].median_sup_distance)
    return rows


def log_log_slope(rows: list[StudyRow]) -> float:
    """Least-squares slope of log(median distance) against log(V)."""
    if len(rows) < 2:
        raise ValueError("a slope needs at least two volumes")
    x = np.log([row.volume for row in rows])
    y = np.log([row.median_sup_distance for row in rows])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _is_decreasing(rows: list[StudyRow]) -> bool:
    return all(b.median_sup_distance < a.median_sup_distance for a, b in zip(rows, rows[1:]))


def run(settings: ConvergenceSettings, output_dir: Path, workers: int = 1) -> list[Path]:
    network = load_bundled_model("metabolism", m=settings.m)
    written: list[Path] = []
    summary: dict[str, object] = {"model": network.describe(), "seed": settings.seed, "seeds": settings.seeds}

    if settings.run_fluid:
        template = SimConfig(
            volume=settings.fluid_volumes[0],
            x0=settings.fluid_x0,
            horizon=settings.fluid_horizon,
            em_step=settings.ode_step,
            seed=settings.seed,
        )
        rows = fluid_limit_study(network, template, settings.fluid_volumes, settings.seeds, workers)
        path = output_dir / "fluid_limit.csv"
        write_study_csv(rows, path)
        written.append(path)
        summary["fluid_limit"] = {
            "volumes": [row.volume for row in rows],
            "median_sup_distance": [row.median_sup_distance for row in rows],
            "log_log_slope": log_log_slope(rows),
        }
        LOGGER.info("fluid limit log-log slope: %.3f", summary["fluid_limit"]["log_log_slope"])

    if settings.run_coupling:
        template = SimConfig(
            volume=settings.coupling_volumes[0],
            x0=settings.coupling_x0,
            horizon=settings.coupling_horizon,
            em_step=settings.coupling_step,
            kmt_step=settings.kmt_step,
            domain_upper_bounds=settings.upper_bounds,
            seed=settings.seed,
        )
        rows = sup_distance_study(network, template, settings.coupling_volumes, settings.seeds, workers)
        path = output_dir / "coupling.csv"
        write_study_csv(rows, path)
        written.append(path)
        summary["coupling"] = {
            "volumes": [row.volume for row in rows],
            "median_sup_distance": [row.median_sup_distance for row in rows],
            "exits": [row.exits for row in rows],
            "strictly_decreasing": _is_decreasing(rows),
        }

    path = output_dir / "convergence_summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    written.append(path)
    return written
