"""
Bistable network: basin fractions from a grid of initial points.

Each replication is classified by the Euclidean-nearest stable equilibrium
of its state at ``horizon``. The network's rate constants give the
equilibria; the two stable ones are (0, 0) and the upper branch.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config import BoundaryPolicy, SimConfig
from ..continuum import bistable_steady_states, classify_basin, final_state_em, simulate_em, time_grid
from ..models import load_bundled_model
from ..network import ReactionNetwork
from ..replication import derive_seed, run_replications, stopwatch
from ..ssa import final_state_ssa, simulate_ssa
from ..trajectory import Trajectory, TrajectoryMeta, write_csv
from .timings import report_timings, timing_ratio

LOGGER = logging.getLogger(__name__)

FINAL_STATE = {"ssa": final_state_ssa, "em": final_state_em}
PATH_SIMULATORS = {"ssa": simulate_ssa, "em": simulate_em}


class BasinSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    volume: float = Field(default=100.0, gt=0)
    horizon: float = Field(default=20.0, gt=0)
    replications: int = Field(default=10_000, ge=1)
    x_values: list[float] = Field(default_factory=lambda: [1.95, 2.00, 2.05], min_length=1)
    y_values: list[float] = Field(default_factory=lambda: [0.45, 0.50, 0.55], min_length=1)
    methods: list[Literal["ssa", "em"]] = Field(default_factory=lambda: ["ssa", "em"], min_length=1)
    em_step: float = Field(default=1e-3, gt=0)
    boundary_policy: BoundaryPolicy = BoundaryPolicy.ABSORB
    seed: int = Field(default=1977, ge=0)
    sample_paths: int = Field(default=100, ge=0, description="Paths per method from path_start (0 disables)")
    path_start: tuple[float, float] = (2.0, 0.5)
    path_grid: float = Field(default=0.01, gt=0)


def stable_equilibria(network: ReactionNetwork) -> list[tuple[float, float]]:
    """(0, 0) and the upper equilibrium of the bistable network."""
    l1, _, l3, l4 = network.rate_constants
    states = bistable_steady_states(l1, l3, l4)
    return [states[0], states[-1]]


def _classify(job: tuple[str, ReactionNetwork, SimConfig, tuple[tuple[float, float], ...]]) -> int:
    method, network, config, equilibria = job
    return classify_basin(FINAL_STATE[method](network, config), equilibria)


def basin_fraction(
    method: str,
    network: ReactionNetwork,
    config: SimConfig,
    replications: int,
    equilibria: list[tuple[float, float]],
    cell: int = 0,
    workers: int = 1,
) -> float:
    """Fraction of replications ending nearest to ``equilibria[0]``."""
    jobs = [
        (method, network, config.with_seed(derive_seed(config.seed, cell, r)), tuple(equilibria))
        for r in range(replications)
    ]
    labels = run_replications(_classify, jobs, workers)
    return float(np.mean(np.asarray(labels) == 0))


def _sampled(trajectory: Trajectory, grid: np.ndarray) -> Trajectory:
    meta = trajectory.meta
    sampled_meta = TrajectoryMeta(
        meta.method, meta.volume, meta.seed, meta.model, meta.species, {**meta.extra, "sampled": f"{grid[1]:.12g}"}
    )
    return Trajectory(grid, trajectory.sample(grid), sampled_meta)


def run(settings: BasinSettings, output_dir: Path, workers: int = 1) -> list[Path]:
    network = load_bundled_model("bistable")
    equilibria = stable_equilibria(network)
    LOGGER.info("stable equilibria: %s", equilibria)

    rows = ["x0,y0,method,fraction_basin0,replications,V,delta,seed"]
    timings: dict[str, float] = {}
    cell = 0
    for x in settings.x_values:
        for y in settings.y_values:
            config = SimConfig(
                volume=settings.volume,
                x0=(x, y),
                horizon=settings.horizon,
                em_step=settings.em_step,
                boundary_policy=settings.boundary_policy,
                seed=settings.seed,
            )
            for method in settings.methods:
                with stopwatch(timings, method):
                    fraction = basin_fraction(
                        method, network, config, settings.replications, equilibria, cell, workers
                    )
                LOGGER.info("x0=(%.2f, %.2f) %s: %.2f%% to (0, 0)", x, y, method, 100 * fraction)
                rows.append(
                    f"{x:.12g},{y:.12g},{method},{fraction:.6f},{settings.replications},"
                    f"{settings.volume:.12g},{settings.em_step:.12g},{settings.seed}"
                )
            cell += 1

    written = []
    basins = output_dir / "basins.csv"
    basins.write_text("\n".join(rows) + "\n", encoding="utf-8")
    written.append(basins)
    written.append(report_timings(timings, output_dir / "bistable_timings.csv"))
    ratio = timing_ratio(timings)
    if ratio is not None:
        LOGGER.info("EM/SSA wall-clock ratio: %.3f", ratio)

    if settings.sample_paths:
        written.extend(_write_sample_paths(settings, network, output_dir / "paths"))
    return written


def _write_sample_paths(settings: BasinSettings, network: ReactionNetwork, directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    grid = time_grid(settings.horizon, settings.path_grid)
    base = SimConfig(
        volume=settings.volume,
        x0=settings.path_start,
        horizon=settings.horizon,
        em_step=settings.em_step,
        boundary_policy=settings.boundary_policy,
        seed=settings.seed,
    )
    written = []
    for method in settings.methods:
        for i in range(settings.sample_paths):
            config = base.with_seed(derive_seed(settings.seed, 10**6, i))
            trajectory = _sampled(PATH_SIMULATORS[method](network, config), grid)
            path = directory / f"{method}_path_{i:03d}.csv"
            write_csv(trajectory, path)
            written.append(path)
    LOGGER.info("wrote %d sample paths to %s", len(written), directory)
    return written
