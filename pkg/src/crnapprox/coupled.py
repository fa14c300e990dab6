"""
Paired CTMC / diffusion trajectories driven by shared KMT noise.

For every reaction channel a :class:`~crnapprox.kmt.PairedNoise` holds a
unit-rate Poisson path and a drifted Wiener path built from the same normals.
Both approximations advance on the delta-grid by reading their channel paths
at the internal times ``tau = V * delta * sum f_l(state)`` rounded to the
nearest Delta-grid point (ties toward the smaller time). The CTMC side uses
its own states for ``tau``; the diffusion side uses its own, with rates
evaluated at ``max(state, 0)``.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .config import SimConfig
from .continuum import time_grid
from .errors import DomainError, NoiseGridTooLarge, NoiseHorizonExceeded, NonFiniteStateError
from .kmt import DyadicIncrements, PairedNoise, assemble_paired_paths, kmt_transform
from .network import ReactionNetwork, propensities
from .replication import derive_seed, run_replications
from .ssa import initial_counts
from .trajectory import CSV_FORMAT, Method, Trajectory, TrajectoryMeta

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoupledRun:
    ctmc_path: Trajectory
    diffusion_path: Trajectory
    noise: tuple[PairedNoise, ...]
    sup_distance: float
    exit_time: float | None = None


@dataclass(frozen=True)
class StudyRow:
    volume: float
    median_sup_distance: float
    seeds: int
    exits: int = 0


def channel_name(network: ReactionNetwork, index: int) -> str:
    reaction = network.reactions[index]
    return reaction.label or f"R{index + 1}: {reaction}"


def noise_points(horizon: float, delta: float) -> int:
    """Smallest power of two ``n >= 2`` with ``n * delta >= horizon``."""
    needed = max(2, math.ceil(horizon / delta))
    return 1 << (needed - 1).bit_length()


def channel_horizons(network: ReactionNetwork, config: SimConfig) -> np.ndarray:
    """Internal time each channel may need: safety * V * T * f_l(bound point).

    The bound point is ``domain_upper_bounds`` when configured, otherwise x0.
    """
    bounds = config.domain_upper_bounds if config.domain_upper_bounds is not None else config.x0
    point = np.asarray(bounds, dtype=float)
    if point.shape != (network.n_species,):
        raise DomainError(f"x0 has {point.size} components but {network.name} has {network.n_species} species")
    rates = np.maximum(propensities(network, point), 0.0)
    return config.noise_safety_factor * config.volume * config.horizon * rates


def generate_channel_noise(network: ReactionNetwork, config: SimConfig) -> tuple[PairedNoise, ...]:
    """One KMT-coupled Poisson/Wiener pair per reaction channel, in channel order.

    Raises:
        NoiseGridTooLarge: If a channel needs more than ``config.max_noise_points``
    """
    rng = np.random.default_rng(config.seed)
    noise = []
    for k, horizon in enumerate(channel_horizons(network, config)):
        name = channel_name(network, k)
        n = noise_points(float(horizon), config.kmt_step)
        if n > config.max_noise_points:
            raise NoiseGridTooLarge(name, n, config.max_noise_points)
        normals = DyadicIncrements(config.kmt_step, rng.standard_normal(n))
        noise.append(assemble_paired_paths(normals, kmt_transform(normals), channel=name))
        LOGGER.debug("channel %s: %d noise points (horizon %.6g)", name, n, n * config.kmt_step)
    return tuple(noise)


def _grid_index(internal_time: np.ndarray, delta: float) -> np.ndarray:
    """Nearest Delta-grid index, ties toward the smaller time."""
    return np.maximum(np.ceil(internal_time / delta - 0.5), 0.0).astype(np.int64)


def _inside(state: np.ndarray, upper: np.ndarray) -> bool:
    return bool(np.all(state > 0) and np.all(state < upper))


def _check_horizon(noise: Sequence[PairedNoise], index: np.ndarray, internal_time: np.ndarray) -> None:
    for k, pair in enumerate(noise):
        if index[k] > pair.n:
            raise NoiseHorizonExceeded(pair.channel, float(internal_time[k]), pair.horizon)


def simulate_coupled(
    network: ReactionNetwork, config: SimConfig, noise: Sequence[PairedNoise] | None = None
) -> CoupledRun:
    """
    Euler time-change scheme for the CTMC and the diffusion on shared noise.

    Args:
        network: Reaction network
        config: Run configuration; ``kmt_step`` is the noise grid, ``em_step`` the Euler step
        noise: Pre-generated channel noise (default: :func:`generate_channel_noise`)

    Returns:
        CoupledRun with both paths on the delta-grid, stopped at the first exit
        from ``(0, domain_upper_bounds)`` when bounds are configured

    Raises:
        NoiseHorizonExceeded: If a channel's internal time passes its noise horizon
        NonFiniteStateError: If the diffusion state stops being finite
    """
    if noise is None:
        noise = generate_channel_noise(network, config)
    noise = tuple(noise)
    if len(noise) != network.n_reactions:
        raise DomainError(f"expected {network.n_reactions} noise channels, got {len(noise)}")

    volume = config.volume
    delta = noise[0].delta if noise else config.kmt_step
    jumps = network.jump_matrix
    jumps_float = jumps.astype(float)
    upper = None if config.domain_upper_bounds is None else np.asarray(config.domain_upper_bounds, dtype=float)

    counts = initial_counts(network, config)
    diffusion = counts / volume
    grid = time_grid(config.horizon, config.em_step)

    count_rows = [counts.copy()]
    diffusion_rows = [diffusion.copy()]
    tau_ctmc = np.zeros(network.n_reactions)
    tau_diff = np.zeros(network.n_reactions)
    prev_ctmc = np.zeros(network.n_reactions, dtype=np.int64)
    prev_diff = np.zeros(network.n_reactions, dtype=np.int64)
    exit_time = None
    if upper is not None and not (_inside(counts / volume, upper) and _inside(diffusion, upper)):
        exit_time = 0.0

    if exit_time is None:
        for j in range(1, grid.size):
            dt = grid[j] - grid[j - 1]
            tau_ctmc += volume * dt * np.maximum(propensities(network, counts / volume), 0.0)
            tau_diff += volume * dt * np.maximum(propensities(network, np.maximum(diffusion, 0.0)), 0.0)
            index_ctmc = _grid_index(tau_ctmc, delta)
            index_diff = _grid_index(tau_diff, delta)
            _check_horizon(noise, index_ctmc, tau_ctmc)
            _check_horizon(noise, index_diff, tau_diff)

            fired = np.array(
                [pair.poisson_path[index_ctmc[k]] - pair.poisson_path[prev_ctmc[k]] for k, pair in enumerate(noise)]
            )
            wiener = np.array(
                [pair.wiener_path[index_diff[k]] - pair.wiener_path[prev_diff[k]] for k, pair in enumerate(noise)]
            )
            counts = counts + np.rint(fired).astype(np.int64) @ jumps
            diffusion = diffusion + (wiener @ jumps_float) / volume
            if not np.all(np.isfinite(diffusion)):
                raise NonFiniteStateError(f"coupled diffusion path became non-finite at t={grid[j]:.6g}")
            prev_ctmc, prev_diff = index_ctmc, index_diff
            count_rows.append(counts.copy())
            diffusion_rows.append(diffusion.copy())
            if upper is not None and not (_inside(counts / volume, upper) and _inside(diffusion, upper)):
                exit_time = float(grid[j])
                LOGGER.info("coupled run of %s left the domain at t=%.6g", network.name, exit_time)
                break

    times = grid[: len(count_rows)]
    path_counts = np.array(count_rows, dtype=np.int64)
    diffusion_states = np.array(diffusion_rows)
    ctmc_states = path_counts / volume
    distance = float(np.max(np.abs(ctmc_states - diffusion_states))) if ctmc_states.size else 0.0

    extra = {"delta": f"{config.em_step:.12g}", "Delta": f"{delta:.12g}"}
    if exit_time is not None:
        extra["exit_time"] = f"{exit_time:.12g}"

    def meta(method: Method) -> TrajectoryMeta:
        return TrajectoryMeta(method, volume, config.seed, network.describe(), network.species, dict(extra))

    return CoupledRun(
        ctmc_path=Trajectory(times, ctmc_states, meta(Method.COUPLED_SSA), counts=path_counts),
        diffusion_path=Trajectory(times, diffusion_states, meta(Method.COUPLED_EM)),
        noise=noise,
        sup_distance=distance,
        exit_time=exit_time,
    )


# ========== Studies ==========


def _coupled_distance(job: tuple[ReactionNetwork, SimConfig]) -> tuple[float, bool]:
    network, config = job
    run = simulate_coupled(network, config)
    return run.sup_distance, run.exit_time is not None


def sup_distance_study(
    network: ReactionNetwork,
    config_template: SimConfig,
    volumes: Sequence[float],
    seeds: int = 20,
    workers: int = 1,
) -> list[StudyRow]:
    """Median sup-distance of coupled runs per volume, sorted by volume.

    Every volume reuses the same derived seeds ``derive_seed(template.seed, i)``.
    """
    if not volumes:
        raise ValueError("at least one volume is required")
    if seeds < 1:
        raise ValueError(f"seeds must be positive, got {seeds}")
    if seeds < 10:
        LOGGER.warning("sup_distance_study with only %d seeds per volume", seeds)

    rows = []
    seed_list = [derive_seed(config_template.seed, i) for i in range(seeds)]
    for volume in sorted(volumes):
        base = config_template.updated(volume=float(volume))
        jobs = [(network, base.with_seed(seed)) for seed in seed_list]
        results = run_replications(_coupled_distance, jobs, workers)
        distances = [distance for distance, _ in results]
        row = StudyRow(
            volume=float(volume),
            median_sup_distance=float(np.median(distances)),
            seeds=seeds,
            exits=sum(1 for _, exited in results if exited),
        )
        LOGGER.info("coupling study V=%g: median sup distance %.6g (%d exits)", volume, row.median_sup_distance, row.exits)
        rows.append(row)
    return rows


# ========== CSV ==========


def write_coupled_csv(run: CoupledRun, target: str | Path | TextIO) -> None:
    """CSV with columns ``t,<species>_ctmc...,<species>_diff...``."""
    meta = run.ctmc_path.meta
    lines = [
        "# method: coupled",
        f"# model: {meta.model}",
        f"# V: {meta.volume:.12g}",
        f"# seed: {meta.seed}",
        *(f"# {key}: {value}" for key, value in meta.extra.items()),
        f"# sup_distance: {run.sup_distance:.12g}",
    ]
    header = ",".join(
        ["t", *(f"{s}_ctmc" for s in meta.species), *(f"{s}_diff" for s in meta.species)]
    )
    buffer = io.StringIO()
    buffer.write("\n".join(lines) + "\n")
    data = np.column_stack([run.ctmc_path.times, run.ctmc_path.states, run.diffusion_path.states])
    np.savetxt(buffer, data, fmt=CSV_FORMAT, delimiter=",", header=header, comments="")
    if isinstance(target, (str, Path)):
        Path(target).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        target.write(buffer.getvalue())


def read_coupled_csv(source: str | Path) -> tuple[Trajectory, Trajectory]:
    """Split a coupled CSV back into its CTMC and diffusion trajectories."""
    text = Path(source).read_text(encoding="utf-8")
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    columns = body[0].split(",")
    species = tuple(name[: -len("_ctmc")] for name in columns[1:] if name.endswith("_ctmc"))
    data = np.loadtxt(body[1:], delimiter=",", ndmin=2)
    d = len(species)
    extra = {k: v for k, v in meta.items() if k not in {"method", "model", "V", "seed"}}

    def build(method: Method, block: np.ndarray) -> Trajectory:
        info = TrajectoryMeta(method, float(meta["V"]), int(meta["seed"]), meta.get("model", ""), species, extra)
        return Trajectory(data[:, 0], block, info)

    return build(Method.COUPLED_SSA, data[:, 1 : 1 + d]), build(Method.COUPLED_EM, data[:, 1 + d :])


def write_study_csv(rows: Sequence[StudyRow], target: str | Path) -> None:
    lines = ["V,median_sup_distance,seeds"]
    lines.extend(f"{row.volume:.12g},{row.median_sup_distance:.12g},{row.seeds}" for row in rows)
    Path(target).write_text("\n".join(lines) + "\n", encoding="utf-8")
