"""Gillespie direct-method simulation of the CTMC and its density process."""

from __future__ import annotations

import logging

import numpy as np

from . import _kernels
from .config import SimConfig
from .errors import DomainError, EventCapExceeded
from .network import RateConvention, ReactionNetwork
from .trajectory import Method, Trajectory, TrajectoryMeta

LOGGER = logging.getLogger(__name__)

# events per kernel call and record buffer size
BLOCK_EVENTS = 4096


def initial_counts(network: ReactionNetwork, config: SimConfig) -> np.ndarray:
    """``round(x0 * V)`` componentwise, ties rounded up."""
    x0 = np.asarray(config.x0, dtype=float)
    if x0.shape != (network.n_species,):
        raise DomainError(f"x0 has {x0.size} components but {network.name} has {network.n_species} species")
    counts = np.floor(x0 * config.volume + 0.5).astype(np.int64)
    if np.any(counts < 0):
        raise DomainError(f"initial counts must be non-negative, got {counts.tolist()}")
    return counts


def _run(network: ReactionNetwork, config: SimConfig, record: bool):
    counts = initial_counts(network, config)
    rng = np.random.default_rng(config.seed)
    factors = network.count_factors(config.volume)
    reactants = np.ascontiguousarray(network.reactant_matrix)
    jumps = np.ascontiguousarray(network.jump_matrix)
    use_binomial = network.rate_convention is RateConvention.FACTORIAL
    rates = np.empty(network.n_reactions, dtype=float)

    capacity = BLOCK_EVENTS if record else 0
    times_buffer = np.empty(capacity, dtype=float)
    states_buffer = np.empty((capacity, network.n_species), dtype=np.int64)
    times_chunks = [np.zeros(1)]
    count_chunks = [counts[np.newaxis, :].copy()]

    uniforms = rng.random(2 * BLOCK_EVENTS)
    position = 0
    t = 0.0
    fired = 0
    while True:
        remaining = config.event_cap - fired + 1
        limit = min(BLOCK_EVENTS, remaining) if record else remaining
        t, used, events, status = _kernels.ssa_advance(
            counts,
            t,
            config.horizon,
            uniforms[position:],
            factors,
            reactants,
            jumps,
            use_binomial,
            limit,
            record,
            times_buffer,
            states_buffer,
            rates,
        )
        position += used
        fired += events
        if record and events:
            times_chunks.append(times_buffer[:events].copy())
            count_chunks.append(states_buffer[:events].copy())
        if fired > config.event_cap:
            raise EventCapExceeded(config.event_cap, t)
        if status != _kernels.PAUSED:
            break
        if position + 2 > uniforms.shape[0]:
            uniforms = rng.random(2 * BLOCK_EVENTS)
            position = 0

    LOGGER.debug("SSA %s seed=%d: %d events up to t=%.6g", network.name, config.seed, fired, config.horizon)
    return counts, fired, times_chunks, count_chunks


def _meta(network: ReactionNetwork, config: SimConfig, **extra: str) -> TrajectoryMeta:
    return TrajectoryMeta(
        method=Method.SSA,
        volume=config.volume,
        seed=config.seed,
        model=network.describe(),
        species=network.species,
        extra=dict(extra),
    )


def simulate_ssa(network: ReactionNetwork, config: SimConfig) -> Trajectory:
    """
    Simulate one CTMC path up to ``config.horizon``.

    Records the initial point, every jump, and a final point at T. When all
    rates vanish the state is held until T.

    Raises:
        DomainError: If the initial counts are negative or x0 has the wrong length
        EventCapExceeded: If more than ``config.event_cap`` events fire
    """
    counts, fired, times_chunks, count_chunks = _run(network, config, record=True)
    times = np.concatenate(times_chunks)
    path = np.concatenate(count_chunks)
    if times[-1] < config.horizon:
        times = np.append(times, config.horizon)
        path = np.vstack([path, counts])
    return Trajectory(
        times=times,
        states=path / config.volume,
        meta=_meta(network, config, events=str(fired)),
        counts=path,
    )


def final_state_ssa(network: ReactionNetwork, config: SimConfig) -> np.ndarray:
    """Concentrations at T of a path with the same law and draws as :func:`simulate_ssa`."""
    counts, _, _, _ = _run(network, config, record=False)
    return counts / config.volume
