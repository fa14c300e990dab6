"""Deterministic (RK4) and diffusion (Euler-Maruyama) approximations."""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from . import _kernels
from .config import BoundaryPolicy, SimConfig
from .errors import DomainError, NonFiniteStateError
from .network import ReactionNetwork, propensities
from .trajectory import Method, Trajectory, TrajectoryMeta

LOGGER = logging.getLogger(__name__)

# tolerated undershoot of the RK4 state below zero
NEGATIVE_TOLERANCE = 1e-9


def time_grid(horizon: float, step: float) -> np.ndarray:
    """Grid ``0, step, 2 step, ...`` ending exactly at ``horizon``."""
    n_steps = max(1, int(math.ceil(horizon / step - 1e-9)))
    grid = np.minimum(np.arange(n_steps + 1, dtype=float) * step, horizon)
    grid[-1] = horizon
    return grid


def _initial_state(network: ReactionNetwork, config: SimConfig) -> np.ndarray:
    x0 = np.asarray(config.x0, dtype=float)
    if x0.shape != (network.n_species,):
        raise DomainError(f"x0 has {x0.size} components but {network.name} has {network.n_species} species")
    return x0


def _meta(network: ReactionNetwork, config: SimConfig, method: Method) -> TrajectoryMeta:
    extra = {"delta": f"{config.em_step:.12g}"}
    if method is Method.EM:
        extra["boundary"] = config.boundary_policy.value
    return TrajectoryMeta(
        method=method,
        volume=config.volume,
        seed=config.seed,
        model=network.describe(),
        species=network.species,
        extra=extra,
    )


def solve_ode(network: ReactionNetwork, config: SimConfig) -> Trajectory:
    """
    Classical fourth-order Runge-Kutta with fixed step ``config.em_step``.

    ``em_step`` is the single delta of both continuum methods: the ODE and
    Euler-Maruyama paths of one config share the same time grid.

    Raises:
        DomainError: If a component drops below -1e-9
    """
    grid = time_grid(config.horizon, config.em_step)
    jumps = network.jump_matrix.astype(float)

    def field(x: np.ndarray) -> np.ndarray:
        return propensities(network, x) @ jumps

    states = np.empty((grid.size, network.n_species))
    x = _initial_state(network, config).copy()
    states[0] = x
    for j, dt in enumerate(np.diff(grid), start=1):
        k1 = field(x)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(x < -NEGATIVE_TOLERANCE):
            raise DomainError(
                f"ODE state left the positive orthant at t={grid[j]:.6g}: {x.tolist()}; reduce em_step"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(f"ODE state became non-finite at t={grid[j]:.6g}")
        states[j] = x
    return Trajectory(grid, states, _meta(network, config, Method.ODE))


def _em(network: ReactionNetwork, config: SimConfig, record: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grid = time_grid(config.horizon, config.em_step)
    dts = np.diff(grid)
    x = _initial_state(network, config).copy()

    initial_rates = np.maximum(propensities(network, np.maximum(x, 0.0)), 0.0)
    if initial_rates.size and config.em_step * float(initial_rates.max()) >= 1.0:
        LOGGER.warning(
            "EM step %.3g is coarse for %s: delta * max rate at x0 = %.3g >= 1",
            config.em_step,
            network.name,
            config.em_step * float(initial_rates.max()),
        )

    rng = np.random.default_rng(config.seed)
    normals = rng.standard_normal((dts.size, network.n_reactions))
    states = np.empty((dts.size if record else 0, network.n_species))
    steps, status = _kernels.em_advance(
        x,
        dts,
        normals,
        network.density_factors,
        np.ascontiguousarray(network.reactant_matrix),
        network.jump_matrix.astype(float),
        1.0 / math.sqrt(config.volume),
        config.boundary_policy is BoundaryPolicy.ABSORB,
        config.threshold,
        record,
        states,
        np.empty(network.n_reactions),
    )
    if status == _kernels.EM_NONFINITE:
        raise NonFiniteStateError(
            f"Euler-Maruyama state became non-finite at t={grid[steps]:.6g}; reduce em_step"
        )
    return grid, states, x


def simulate_em(network: ReactionNetwork, config: SimConfig) -> Trajectory:
    """
    Euler-Maruyama path of the chemical Langevin equation on the delta-grid.

    One standard normal per reaction channel per step, drawn in channel order
    from ``default_rng(config.seed)``. The boundary policy is applied after
    every step.

    Raises:
        NonFiniteStateError: If the state becomes NaN or infinite
    """
    grid, states, _ = _em(network, config, record=True)
    x0 = _initial_state(network, config)
    return Trajectory(grid, np.vstack([x0, states]), _meta(network, config, Method.EM))


def final_state_em(network: ReactionNetwork, config: SimConfig) -> np.ndarray:
    """State at T of the path :func:`simulate_em` would produce."""
    _, _, x = _em(network, config, record=False)
    return x


def classify_basin(state: Sequence[float], equilibria: Sequence[Sequence[float]]) -> int:
    """Index of the Euclidean-nearest equilibrium; ties go to the lowest index."""
    if len(equilibria) == 0:
        raise ValueError("at least one equilibrium is required")
    point = np.asarray(state, dtype=float)
    targets = np.asarray(equilibria, dtype=float)
    distances = np.sum((targets - point) ** 2, axis=1)
    return int(np.argmin(distances))


def bistable_steady_states(l1: float, l3: float, l4: float) -> list[tuple[float, float]]:
    """
    Equilibria of the bistable network ``Y -> 2X, 2X -> X+Y, X+Y -> Y, X -> 0`` with lambda_2 = 1.

    Returns ``(0, 0)`` and ``x = (l1 -+ sqrt(l1 D)) / (2 l3)``, ``y = x**2 / l1``
    with ``D = l1 - 4 l3 l4``; the last two only when ``D >= 0``.
    """
    states = [(0.0, 0.0)]
    disc = l1 - 4.0 * l3 * l4
    if disc < 0:
        return states
    root = math.sqrt(l1 * disc)
    for x in ((l1 - root) / (2.0 * l3), (l1 + root) / (2.0 * l3)):
        states.append((x, x * x / l1))
    return states
