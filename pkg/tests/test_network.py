"""
Unit tests for the network module.

Tests complexes, reaction vectors, rate conventions and the drift.
"""

import itertools
import math

import numpy as np
import pytest

pytestmark = pytest.mark.unit

from crnapprox.errors import DomainError, ModelError
from crnapprox.models import load_bundled_model
from crnapprox.network import (
    Complex,
    RateConvention,
    Reaction,
    ReactionNetwork,
    density_rate,
    drift,
    exact_rate,
    exact_rates,
    reaction_vectors,
    stoichiometric_matrix,
)


@pytest.fixture
def bistable():
    return load_bundled_model("bistable")


@pytest.fixture
def bistable_factorial(bistable):
    return ReactionNetwork(
        bistable.name, bistable.species, bistable.reactions, rate_convention=RateConvention.FACTORIAL
    )


# ========== Complex / Reaction Tests ==========

def test_complex_canonical_ordering():
    """Test that equal compositions compare equal regardless of key order."""
    assert Complex.of({"X": 1, "Y": 2}) == Complex.of({"Y": 2, "X": 1})
    assert hash(Complex.of({"X": 1, "Y": 2})) == hash(Complex.of({"Y": 2, "X": 1}))


def test_complex_drops_zero_coefficients():
    """Test that zero coefficients do not change the complex."""
    assert Complex.of({"X": 0, "Y": 1}) == Complex.of({"Y": 1})
    assert str(Complex.of({})) == "0"


def test_complex_rejects_fractional_coefficient():
    """Test that non-integer stoichiometry is rejected."""
    with pytest.raises(ModelError, match="integer"):
        Complex.of({"X": 1.5})


def test_complex_rejects_negative_coefficient():
    """Test that negative stoichiometry is rejected."""
    with pytest.raises(ModelError, match="non-negative"):
        Complex.of({"X": -1})


def test_reaction_rejects_self_loop():
    """Test that A -> A is rejected."""
    a = Complex.of({"A": 1})
    with pytest.raises(ModelError, match="zero reaction vector"):
        Reaction(a, a, 1.0)


@pytest.mark.parametrize("rate", [0.0, -1.0, float("nan"), float("inf")])
def test_reaction_rejects_bad_rate(rate):
    """Test that rate constants must be positive and finite."""
    with pytest.raises(ModelError, match="rate constant"):
        Reaction(Complex.of({"A": 1}), Complex.of({}), rate)


def test_network_rejects_unknown_species():
    """Test that reactions may only reference declared species."""
    reaction = Reaction(Complex.of({"A": 1}), Complex.of({"B": 1}), 1.0)
    with pytest.raises(ModelError, match="unknown species 'B'"):
        ReactionNetwork("bad", ("A",), (reaction,))


def test_network_rejects_duplicate_species():
    """Test that species identifiers are unique."""
    with pytest.raises(ModelError, match="duplicate"):
        ReactionNetwork("bad", ("A", "A"))


def test_network_requires_species():
    """Test that d >= 1."""
    with pytest.raises(ModelError, match="at least one species"):
        ReactionNetwork("empty", ())


# ========== Reaction Vector Tests ==========

def test_reaction_vectors_metabolism_m3():
    """Test the autocatalytic reaction vector (-1, +2) for (N, E)."""
    network = load_bundled_model("metabolism", m=3)
    assert network.species == ("N", "E")
    assert reaction_vectors(network)[2].tolist() == [-1, 2]


def test_reaction_vectors_bistable():
    """Test the vector of 2X -> X+Y."""
    network = load_bundled_model("bistable")
    assert reaction_vectors(network)[1].tolist() == [-1, 1]


def test_stoichiometric_matrix_columns_are_reaction_vectors(bistable):
    """Test that the d x K matrix holds the reaction vectors as columns."""
    matrix = stoichiometric_matrix(bistable)
    assert matrix.shape == (2, 4)
    for k, vector in enumerate(reaction_vectors(bistable)):
        assert matrix[:, k].tolist() == vector.tolist()


# ========== Rate Tests ==========

def test_density_rate_metabolism_autocatalysis():
    """Test f_3(1, 1) = 10 for m = 3."""
    network = load_bundled_model("metabolism", m=3)
    assert density_rate(network, 2, [1.0, 1.0]) == pytest.approx(10.0)


def test_density_rate_zero_reactant(bistable):
    """Test that a reactant at zero concentration gives a zero rate."""
    assert density_rate(bistable, 2, [0.0, 3.0]) == 0.0


def test_density_rate_conventions(bistable, bistable_factorial):
    """Test 2X -> X+Y at x = 3: absorbed 9, factorial 4.5."""
    assert density_rate(bistable, 1, [3.0, 0.0]) == pytest.approx(9.0)
    assert density_rate(bistable_factorial, 1, [3.0, 0.0]) == pytest.approx(4.5)


def test_density_rate_negative_state(bistable):
    """Test that negative concentrations raise DomainError."""
    with pytest.raises(DomainError):
        density_rate(bistable, 0, [-0.1, 1.0])


def test_density_rate_index_out_of_range(bistable):
    """Test that an unknown reaction index raises IndexError."""
    with pytest.raises(IndexError):
        density_rate(bistable, 4, [1.0, 1.0])


def test_exact_rate_factorial_binomial(bistable_factorial):
    """Test (1/10) * binom(5, 2) = 1.0."""
    assert exact_rate(bistable_factorial, 1, [5, 0], 10.0) == pytest.approx(1.0)


def test_exact_rate_insufficient_molecules(bistable_factorial):
    """Test that s < c gives rate 0."""
    assert exact_rate(bistable_factorial, 1, [1, 4], 10.0) == 0.0


def test_exact_rate_absorbed(bistable):
    """Test lambda_2 X^2 / V = 2.5 at X = 5, V = 10."""
    assert exact_rate(bistable, 1, [5, 0], 10.0) == pytest.approx(2.5)


def test_exact_rate_negative_counts(bistable):
    """Test that negative counts raise DomainError."""
    with pytest.raises(DomainError):
        exact_rate(bistable, 0, [-1, 2], 10.0)


def test_exact_rate_non_integer_counts(bistable):
    """Test that fractional counts raise DomainError."""
    with pytest.raises(DomainError):
        exact_rates(bistable, [1.5, 2], 10.0)


def test_exact_rate_absorbed_matches_density(bistable):
    """Test q = V f(counts / V) under the absorbed convention."""
    counts, volume = np.array([37, 12]), 20.0
    for k in range(bistable.n_reactions):
        expected = volume * density_rate(bistable, k, counts / volume)
        assert exact_rate(bistable, k, counts, volume) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("scale", [100, 1000, 10000])
def test_factorial_convention_bridge(bistable_factorial, scale):
    """Test exact_rate / V -> density_rate with relative error below 10 / min count."""
    x = np.array([2.0, 0.5])
    volume = scale / x.min()
    counts = np.rint(x * volume).astype(int)
    for k in range(bistable_factorial.n_reactions):
        exact = exact_rate(bistable_factorial, k, counts, volume) / volume
        dense = density_rate(bistable_factorial, k, counts / volume)
        assert abs(exact - dense) / dense < 10 / counts.min()


# ========== Drift Tests ==========

@pytest.mark.parametrize("point", [(2.0, 0.5), (6.0, 4.5), (0.0, 0.0)])
def test_drift_vanishes_at_bistable_steady_states(bistable, point):
    """Test |F| < 1e-12 at the three equilibria."""
    assert np.max(np.abs(drift(bistable, point))) < 1e-12


def test_drift_matches_term_by_term_sum(bistable):
    """Test F(x) = sum_k l_k f_k(x) recomputed reaction by reaction."""
    rng = np.random.default_rng(3)
    vectors = reaction_vectors(bistable)
    for x in rng.uniform(0, 5, size=(20, 2)):
        expected = sum(vectors[k] * density_rate(bistable, k, x) for k in range(bistable.n_reactions))
        np.testing.assert_allclose(drift(bistable, x), expected, rtol=1e-12, atol=1e-12)


def test_rates_non_negative_and_multiplicative(bistable):
    """Test f >= 0, and f = 0 exactly when a reactant coordinate is 0."""
    grid = [0.0, 0.3, 1.7]
    for x in itertools.product(grid, repeat=2):
        for k, reaction in enumerate(bistable.reactions):
            value = density_rate(bistable, k, x)
            assert value >= 0
            zero_reactant = any(x[bistable.species_index(s)] == 0 for s in reaction.reactants.species)
            assert (value == 0) == zero_reactant


def test_with_rate_constants_replaces_rates(bistable):
    """Test that a copy with new rate constants keeps the structure."""
    copy = bistable.with_rate_constants([1, 2, 3, 4])
    assert copy.rate_constants.tolist() == [1.0, 2.0, 3.0, 4.0]
    assert copy.species == bistable.species
    assert math.isclose(bistable.rate_constants[0], 8.0)
