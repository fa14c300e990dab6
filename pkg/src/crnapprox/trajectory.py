"""Time-stamped state paths and their CSV representation.

CSV layout::

    # method: ssa
    # model: bistable
    # V: 100
    # seed: 42
    # delta: 0.001
    t,X,Y
    0,2,0.5
    ...

Values are written with 12 significant digits. Metadata lines are optional on
read; unknown keys are kept in ``TrajectoryMeta.extra``.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from .errors import DomainError
from .network import ReactionNetwork

LOGGER = logging.getLogger(__name__)

CSV_FORMAT = "%.12g"


class Method(str, Enum):
    SSA = "ssa"
    ODE = "ode"
    EM = "em"
    COUPLED_SSA = "coupled-ssa"
    COUPLED_EM = "coupled-em"

    @property
    def is_jump_process(self) -> bool:
        return self in (Method.SSA, Method.COUPLED_SSA)


@dataclass(frozen=True)
class TrajectoryMeta:
    method: Method
    volume: float
    seed: int
    model: str
    species: tuple[str, ...]
    extra: dict[str, str] = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Trajectory:
    """States (concentrations) aligned with strictly increasing times from 0.

    ``counts`` carries the exact integer states of lattice methods
    (``ssa``, ``coupled-ssa``) and is ``None`` otherwise. Statistics over
    replications (``extra["statistic"]``) may start at any non-negative time.
    """

    times: np.ndarray
    states: np.ndarray
    meta: TrajectoryMeta
    counts: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape != (times.shape[0], len(self.meta.species)):
            raise ValueError(
                f"states shape {states.shape} does not match {times.shape[0]} times "
                f"x {len(self.meta.species)} species"
            )
        if times.shape[0] == 0 or times[0] < 0.0:
            raise ValueError("trajectory times must be non-empty and non-negative")
        if times[0] != 0.0 and "statistic" not in self.meta.extra:
            raise ValueError("trajectory times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def sample(self, grid: Sequence[float]) -> np.ndarray:
        return sample_trajectory(self, grid)


def sample_trajectory(trajectory: Trajectory, grid: Sequence[float]) -> np.ndarray:
    """States at ``grid`` times.

    Jump methods are sampled left-constant (the state in force at t); continuous
    methods are interpolated linearly.
    """
    points = np.asarray(grid, dtype=float)
    start = float(trajectory.times[0])
    if points.size and (points.min() < start or points.max() > trajectory.final_time * (1 + 1e-12)):
        raise ValueError(f"grid must lie within [{start:g}, {trajectory.final_time}]")
    if trajectory.meta.method.is_jump_process:
        index = np.searchsorted(trajectory.times, points, side="right") - 1
        return trajectory.states[np.clip(index, 0, len(trajectory) - 1)]
    return np.column_stack(
        [np.interp(points, trajectory.times, trajectory.states[:, i]) for i in range(trajectory.states.shape[1])]
    )


def mean_trajectory(trajectories: Sequence[Trajectory], grid: Sequence[float]) -> Trajectory:
    """Pointwise sample mean of ``trajectories`` evaluated on ``grid``.

    ``grid`` must be strictly increasing inside ``[0, T]``; it need not start at 0.
    """
    if not trajectories:
        raise ValueError("mean_trajectory needs at least one trajectory")
    first = trajectories[0].meta
    for trajectory in trajectories[1:]:
        if trajectory.meta.method != first.method or trajectory.meta.model != first.model:
            raise ValueError("all trajectories must share model and method")
    total = np.zeros((len(grid), len(first.species)))
    for trajectory in trajectories:
        total += sample_trajectory(trajectory, grid)
    meta = TrajectoryMeta(
        method=first.method,
        volume=first.volume,
        seed=first.seed,
        model=first.model,
        species=first.species,
        extra={"replications": str(len(trajectories)), "statistic": "mean"},
    )
    return Trajectory(np.asarray(grid, dtype=float), total / len(trajectories), meta)


def sup_distance(first: Trajectory, second: Trajectory, grid: Sequence[float] | None = None) -> float:
    """Max over ``grid`` (default: the times of ``second``) of the max-norm distance."""
    points = second.times if grid is None else np.asarray(grid, dtype=float)
    difference = sample_trajectory(first, points) - sample_trajectory(second, points)
    return float(np.max(np.abs(difference))) if difference.size else 0.0


def validate_trajectory(trajectory: Trajectory, network: ReactionNetwork | None = None) -> None:
    """Check the lattice and jump invariants of SSA trajectories.

    Raises:
        DomainError: If a lattice state is off-lattice or negative, or two
            consecutive states differ by something other than one reaction vector.
            The jump check is skipped for paths resampled onto a grid, and
            statistics over replications are not checked at all.
    """
    if trajectory.meta.method is not Method.SSA or "statistic" in trajectory.meta.extra:
        return
    scaled = trajectory.states * trajectory.meta.volume
    counts = np.rint(scaled)
    if not np.allclose(scaled, counts, rtol=0, atol=1e-6):
        raise DomainError("SSA states are not on the 1/V lattice")
    if np.any(counts < 0):
        raise DomainError("SSA states have negative counts")
    if network is None or "sampled" in trajectory.meta.extra:
        return
    allowed = {tuple(int(v) for v in row) for row in network.jump_matrix}
    for step in np.diff(counts, axis=0):
        if not np.any(step):
            continue
        if tuple(int(v) for v in step) not in allowed:
            raise DomainError(f"SSA jump {step.tolist()} is not a reaction vector")


# ========== CSV ==========


def _meta_lines(meta: TrajectoryMeta) -> list[str]:
    lines = [
        f"# method: {meta.method.value}",
        f"# model: {meta.model}",
        f"# V: {meta.volume:.12g}",
        f"# seed: {meta.seed}",
    ]
    lines.extend(f"# {key}: {value}" for key, value in meta.extra.items())
    return lines


def write_csv(trajectory: Trajectory, target: str | Path | TextIO) -> None:
    """Write a trajectory as CSV with ``#`` metadata lines."""
    header = ",".join(("t", *trajectory.meta.species))
    data = np.column_stack([trajectory.times, trajectory.states])
    buffer = io.StringIO()
    buffer.write("\n".join(_meta_lines(trajectory.meta)) + "\n")
    np.savetxt(buffer, data, fmt=CSV_FORMAT, delimiter=",", header=header, comments="")
    text = buffer.getvalue()
    if isinstance(target, (str, Path)):
        Path(target).write_text(text, encoding="utf-8")
    else:
        target.write(text)


def _read_lines(source: str | Path | TextIO) -> list[str]:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8").splitlines()
    return source.read().splitlines()


def read_csv(source: str | Path | TextIO) -> Trajectory:
    """Parse a CSV written by :func:`write_csv`."""
    lines = _read_lines(source)
    meta: dict[str, str] = {}
    body: list[str] = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("CSV has no header row")
    columns = [name.strip() for name in body[0].split(",")]
    if columns[0] != "t":
        raise ValueError(f"first CSV column must be 't', got {columns[0]!r}")
    data = np.loadtxt(body[1:], delimiter=",", ndmin=2) if len(body) > 1 else np.empty((0, len(columns)))
    known = {"method", "model", "V", "seed"}
    trajectory_meta = TrajectoryMeta(
        method=Method(meta.get("method", Method.ODE.value)),
        volume=float(meta.get("V", "1")),
        seed=int(meta.get("seed", "0")),
        model=meta.get("model", ""),
        species=tuple(columns[1:]),
        extra={k: v for k, v in meta.items() if k not in known},
    )
    return Trajectory(data[:, 0], data[:, 1:], trajectory_meta)

