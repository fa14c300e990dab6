"""
Unit tests for the ODE and Euler-Maruyama integrators.

Tests fixed points, convergence order, boundary policies, seeding and the
bistable steady-state formula.
"""

import math

import numpy as np
import pytest

pytestmark = pytest.mark.unit

from crnapprox.config import BoundaryPolicy, SimConfig
from crnapprox.continuum import (
    bistable_steady_states,
    classify_basin,
    final_state_em,
    simulate_em,
    solve_ode,
    time_grid,
)
from crnapprox.errors import DomainError
from crnapprox.models import load_bundled_model
from crnapprox.network import Complex, Reaction, ReactionNetwork, drift
from crnapprox.trajectory import Method


def _decay(rate=1.0):
    x = Complex.of({"X": 1})
    return ReactionNetwork("decay", ("X",), (Reaction(x, Complex.of({}), rate),))


@pytest.fixture
def bistable():
    return load_bundled_model("bistable")


# ========== Grid Tests ==========

def test_time_grid_ends_at_horizon():
    """Test that the grid is uniform and ends exactly at T."""
    grid = time_grid(1.0, 0.1)
    assert grid.size == 11
    assert grid[-1] == 1.0
    np.testing.assert_allclose(np.diff(grid), 0.1)


def test_time_grid_short_last_step():
    """Test that a horizon off the grid gets a shorter last step."""
    grid = time_grid(1.05, 0.1)
    assert grid[-1] == 1.05
    assert grid[-1] - grid[-2] == pytest.approx(0.05)


# ========== ODE Tests ==========

def test_ode_metabolism_fixed_point_is_flat():
    """Test that the ODE started at (1, 1) stays there for m = 0."""
    network = load_bundled_model("metabolism", m=0)
    path = solve_ode(network, SimConfig(volume=600, x0=(1.0, 1.0), horizon=5.0, em_step=0.01))
    np.testing.assert_allclose(path.states, 1.0, atol=1e-12)
    assert path.meta.method is Method.ODE


def test_ode_reaction_free_network_is_flat():
    """Test that a network without reactions keeps its state."""
    network = ReactionNetwork("still", ("A", "B"))
    path = solve_ode(network, SimConfig(volume=1, x0=(0.4, 2.0), horizon=1.0, em_step=0.1))
    np.testing.assert_allclose(path.states, [[0.4, 2.0]] * 11)


def test_ode_fourth_order_convergence():
    """Test that halving the step divides the error by about 16."""
    network = _decay()
    errors = []
    for step in (0.1, 0.05):
        path = solve_ode(network, SimConfig(volume=1, x0=(1.0,), horizon=1.0, em_step=step))
        errors.append(abs(path.final_state[0] - math.exp(-1.0)))
    assert 12 < errors[0] / errors[1] < 20


def test_ode_metabolism_damped_oscillation():
    """Test that m = 0 trajectories approach the fixed point (1, 1)."""
    network = load_bundled_model("metabolism", m=0)
    path = solve_ode(network, SimConfig(volume=600, x0=(1.1, 1.1), horizon=50.0, em_step=0.01))
    start = np.abs(path.states[0] - 1.0).max()
    end = np.abs(path.final_state - 1.0).max()
    assert end < start / 10


def test_ode_negative_state_raises():
    """Test DomainError when a too-large step overshoots below zero."""
    x2 = Complex.of({"X": 2})
    network = ReactionNetwork("annihilation", ("X",), (Reaction(x2, Complex.of({}), 10.0),))
    with pytest.raises(DomainError, match="positive orthant"):
        solve_ode(network, SimConfig(volume=1, x0=(1.0,), horizon=1.0, em_step=0.5))


def test_ode_and_em_share_em_step_grid(bistable):
    """Test that em_step sets the grid of both the ODE and the EM path."""
    config = SimConfig(volume=100, x0=(2.0, 0.5), horizon=1.0, em_step=0.1, seed=2)
    ode = solve_ode(bistable, config)
    em = simulate_em(bistable, config)
    np.testing.assert_allclose(ode.times, np.linspace(0.0, 1.0, 11))
    np.testing.assert_array_equal(ode.times, em.times)


# ========== Euler-Maruyama Tests ==========

def test_em_deterministic_per_seed(bistable):
    """Test that equal seeds give identical paths."""
    config = SimConfig(volume=100, x0=(2.0, 0.5), horizon=1.0, seed=3)
    first = simulate_em(bistable, config)
    second = simulate_em(bistable, config)
    np.testing.assert_array_equal(first.states, second.states)
    assert not np.array_equal(first.states, simulate_em(bistable, config.with_seed(4)).states)


def test_em_final_state_matches_path(bistable):
    """Test that final_state_em equals the last point of simulate_em."""
    config = SimConfig(volume=100, x0=(2.0, 0.5), horizon=2.0, seed=17)
    np.testing.assert_array_equal(final_state_em(bistable, config), simulate_em(bistable, config).final_state)


def test_em_path_layout(bistable):
    """Test that the path lies on the delta-grid and starts at x0."""
    config = SimConfig(volume=100, x0=(2.0, 0.5), horizon=0.5, em_step=0.01, seed=1)
    path = simulate_em(bistable, config)
    assert len(path) == 51
    np.testing.assert_allclose(path.states[0], [2.0, 0.5])
    assert path.meta.extra["boundary"] == "clamp"


def test_em_clamp_keeps_rates_defined():
    """Test that clamped rates keep the state finite near the boundary."""
    x = Complex.of({"X": 1})
    network = ReactionNetwork(
        "immigration-death", ("X",), (Reaction(Complex.of({}), x, 0.5), Reaction(x, Complex.of({}), 1.0))
    )
    for seed in range(20):
        config = SimConfig(volume=5, x0=(0.05,), horizon=2.0, em_step=0.01, seed=seed)
        path = simulate_em(network, config)
        assert np.all(np.isfinite(path.states))
        assert path.states.min() > -1.0


def test_em_clamp_metabolism_stays_bounded():
    """Test that clamped rates at a negative E do not feed the quadratic dissipation."""
    network = load_bundled_model("metabolism", m=3)
    config = SimConfig(volume=50, x0=(1.1, 1.1), horizon=1.0, em_step=0.01, seed=7778828159576237216)
    path = simulate_em(network, config)
    assert np.all(np.isfinite(path.states))
    assert path.states.min() > -1.0


def test_em_absorb_freezes_at_origin(bistable):
    """Test that an absorbed path stays at the origin."""
    config = SimConfig(
        volume=2, x0=(0.05, 0.05), horizon=5.0, em_step=0.01, seed=6,
        boundary_policy=BoundaryPolicy.ABSORB, absorb_threshold=0.5,
    )
    path = simulate_em(bistable, config)
    assert np.all(path.states >= 0)
    frozen = np.flatnonzero(np.all(path.states == 0, axis=1))
    assert frozen.size > 0
    assert np.all(path.states[frozen[0]:] == 0)


def test_em_large_volume_follows_ode(bistable):
    """Test that EM approaches the ODE as V grows."""
    config = SimConfig(volume=1e8, x0=(6.0, 4.5), horizon=1.0, em_step=1e-3, seed=9)
    np.testing.assert_allclose(simulate_em(bistable, config).final_state, [6.0, 4.5], atol=0.01)


def test_em_coarse_step_warns(bistable, caplog):
    """Test the advisory warning when delta * max rate >= 1."""
    config = SimConfig(volume=100, x0=(6.0, 4.5), horizon=0.5, em_step=0.1, seed=1)
    with caplog.at_level("WARNING"):
        simulate_em(bistable, config)
    assert "coarse" in caplog.text


def test_em_variance_matches_ornstein_uhlenbeck():
    """Test the stationary variance of immigration-death: 1/V around x = 1."""
    x = Complex.of({"X": 1})
    network = ReactionNetwork(
        "immigration-death", ("X",), (Reaction(Complex.of({}), x, 1.0), Reaction(x, Complex.of({}), 1.0))
    )
    base = SimConfig(volume=100, x0=(1.0,), horizon=5.0, em_step=0.01)
    finals = np.array([final_state_em(network, base.with_seed(s))[0] for s in range(1000)])
    assert finals.mean() == pytest.approx(1.0, abs=0.015)
    assert finals.var() == pytest.approx(0.01, rel=0.15)


# ========== Steady State Tests ==========

def test_bistable_steady_states_formula():
    """Test (0, 0), (2, 1/2) and (6, 9/2) for lambda = (8, 1, 1, 1.5)."""
    states = bistable_steady_states(8.0, 1.0, 1.5)
    np.testing.assert_allclose(states, [(0.0, 0.0), (2.0, 0.5), (6.0, 4.5)], atol=1e-12)


def test_bistable_steady_states_are_fixed_points(bistable):
    """Test |F| < 1e-12 at every formula equilibrium."""
    for state in bistable_steady_states(8.0, 1.0, 1.5):
        assert np.max(np.abs(drift(bistable, state))) < 1e-12


def test_bistable_no_positive_states_when_discriminant_negative():
    """Test that only the origin remains for lambda_1 < 4 lambda_3 lambda_4."""
    assert bistable_steady_states(4.0, 1.0, 1.5) == [(0.0, 0.0)]


def test_classify_basin_nearest():
    """Test Euclidean-nearest classification with ties to the lower index."""
    equilibria = [(0.0, 0.0), (6.0, 4.5)]
    assert classify_basin((0.2, 0.1), equilibria) == 0
    assert classify_basin((5.0, 5.0), equilibria) == 1
    assert classify_basin((3.0, 2.25), equilibria) == 0


def test_classify_basin_requires_equilibria():
    """Test ValueError without equilibria."""
    with pytest.raises(ValueError):
        classify_basin((1.0, 1.0), [])
