"""Reaction networks with mass-action kinetics.

A :class:`ReactionNetwork` is immutable once built. The numeric tables used
by the simulators (reactant matrix, reaction vectors, rate prefactors) are
derived lazily and cached on the instance as read-only arrays.

Example:
    >>> net = ReactionNetwork(
    ...     name="decay",
    ...     species=("X",),
    ...     reactions=(Reaction(Complex.of({"X": 1}), Complex.of({}), 1.0),),
    ... )
    >>> density_rate(net, 0, [3.0])
    3.0
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, ModelError

LOGGER = logging.getLogger(__name__)


class RateConvention(str, Enum):
    """How combinatorial factors enter the rate constants."""

    ABSORBED = "absorbed"
    FACTORIAL = "factorial"


@dataclass(frozen=True)
class Complex:
    """A non-negative integer combination of species.

    ``composition`` holds ``(species, coefficient)`` pairs sorted by species
    name with zero coefficients dropped, so equal compositions compare equal.
    """

    composition: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Complex":
        for species, coefficient in mapping.items():
            if isinstance(coefficient, bool) or not isinstance(coefficient, (int, np.integer)):
                raise ModelError(
                    f"stoichiometric coefficient of {species!r} must be an integer, got {coefficient!r}"
                )
            if coefficient < 0:
                raise ModelError(
                    f"stoichiometric coefficient of {species!r} must be non-negative, got {coefficient}"
                )
        return cls(tuple(sorted((s, int(c)) for s, c in mapping.items() if c != 0)))

    def coefficient(self, species: str) -> int:
        for name, value in self.composition:
            if name == species:
                return value
        return 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.composition)

    @property
    def species(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.composition)

    @property
    def order(self) -> int:
        """Molecularity ``<c>``: the sum of coefficients."""
        return sum(value for _, value in self.composition)

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self.composition)

    def __str__(self) -> str:
        if not self.composition:
            return "0"
        return " + ".join(name if value == 1 else f"{value}{name}" for name, value in self.composition)


@dataclass(frozen=True)
class Reaction:
    """One reaction ``reactants -> products`` with rate constant lambda_k."""

    reactants: Complex
    products: Complex
    rate_constant: float
    label: str | None = None

    def __post_init__(self) -> None:
        rate = float(self.rate_constant)
        if not math.isfinite(rate) or rate <= 0:
            raise ModelError(f"reaction {self}: rate constant must be positive, got {self.rate_constant!r}")
        if self.reactants == self.products:
            raise ModelError(f"reaction {self}: reactants equal products (zero reaction vector)")
        object.__setattr__(self, "rate_constant", rate)

    def __str__(self) -> str:
        return f"{self.reactants} -> {self.products}"


@dataclass(frozen=True)
class ReactionNetwork:
    """Species, reactions and the rate convention of a mass-action network."""

    name: str
    species: tuple[str, ...]
    reactions: tuple[Reaction, ...] = ()
    rate_convention: RateConvention = RateConvention.ABSORBED
    parameters: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        object.__setattr__(self, "rate_convention", RateConvention(self.rate_convention))
        object.__setattr__(self, "parameters", dict(self.parameters))
        if not self.species:
            raise ModelError(f"network {self.name!r}: at least one species is required")
        seen: set[str] = set()
        for name in self.species:
            if name in seen:
                raise ModelError(f"network {self.name!r}: duplicate species {name!r}")
            seen.add(name)
        for index, reaction in enumerate(self.reactions):
            for complex_ in (reaction.reactants, reaction.products):
                for name in complex_.species:
                    if name not in seen:
                        raise ModelError(
                            f"network {self.name!r}: reaction #{index + 1} ({reaction}) "
                            f"references unknown species {name!r}"
                        )

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def species_index(self, name: str) -> int:
        try:
            return self.species.index(name)
        except ValueError:
            raise KeyError(f"unknown species {name!r}") from None

    def _matrix(self, side: str) -> np.ndarray:
        table = np.zeros((self.n_reactions, self.n_species), dtype=np.int64)
        for k, reaction in enumerate(self.reactions):
            for name, value in getattr(reaction, side):
                table[k, self.species_index(name)] = value
        table.flags.writeable = False
        return table

    @cached_property
    def reactant_matrix(self) -> np.ndarray:
        """K x d matrix of reactant coefficients c_ki."""
        return self._matrix("reactants")

    @cached_property
    def product_matrix(self) -> np.ndarray:
        """K x d matrix of product coefficients c'_ki."""
        return self._matrix("products")

    @cached_property
    def jump_matrix(self) -> np.ndarray:
        """K x d matrix whose k-th row is the reaction vector l_k."""
        jumps = np.asarray(self.product_matrix - self.reactant_matrix, dtype=np.int64)
        jumps.flags.writeable = False
        return jumps

    @cached_property
    def rate_constants(self) -> np.ndarray:
        rates = np.array([r.rate_constant for r in self.reactions], dtype=float)
        rates.flags.writeable = False
        return rates

    @cached_property
    def density_factors(self) -> np.ndarray:
        """Prefactor of f_k: lambda_k, or lambda_k / prod_i c_ki! under the factorial convention."""
        factors = np.array(self.rate_constants, dtype=float)
        if self.rate_convention is RateConvention.FACTORIAL:
            for k, reaction in enumerate(self.reactions):
                factors[k] /= math.prod(math.factorial(c) for _, c in reaction.reactants)
        factors.flags.writeable = False
        return factors

    def count_factors(self, volume: float) -> np.ndarray:
        """Prefactor ``lambda_k * V ** (1 - <c_k>)`` of the exact CTMC rates."""
        orders = np.array([r.reactants.order for r in self.reactions], dtype=float)
        return self.rate_constants * np.power(float(volume), 1.0 - orders)

    def with_rate_constants(self, rates: Sequence[float]) -> "ReactionNetwork":
        """Copy of the network with new rate constants, in reaction order."""
        if len(rates) != self.n_reactions:
            raise ModelError(f"expected {self.n_reactions} rate constants, got {len(rates)}")
        reactions = tuple(
            Reaction(r.reactants, r.products, rate, r.label) for r, rate in zip(self.reactions, rates)
        )
        return ReactionNetwork(self.name, self.species, reactions, self.rate_convention, self.parameters)

    def describe(self) -> str:
        suffix = "".join(f", {key}={value}" for key, value in sorted(self.parameters.items()))
        return f"{self.name}{f' ({suffix[2:]})' if suffix else ''}"


# ========== Operations ==========


def reaction_vectors(network: ReactionNetwork) -> list[np.ndarray]:
    """Reaction vectors ``l_k = c'_k - c_k``, one integer array per reaction."""
    return [np.array(row, dtype=np.int64) for row in network.jump_matrix]


def stoichiometric_matrix(network: ReactionNetwork) -> np.ndarray:
    """The d x K stoichiometric matrix whose k-th column is l_k."""
    return np.array(network.jump_matrix.T, dtype=np.int64)


def _as_state(network: ReactionNetwork, x: Sequence[float], what: str) -> np.ndarray:
    state = np.asarray(x, dtype=float)
    if state.shape != (network.n_species,):
        raise DomainError(f"{what} must have length {network.n_species}, got shape {state.shape}")
    if np.any(state < 0):
        raise DomainError(f"{what} has negative components: {state.tolist()}")
    return state


def _check_reaction_index(network: ReactionNetwork, reaction_index: int) -> None:
    if not 0 <= reaction_index < network.n_reactions:
        raise IndexError(f"reaction index {reaction_index} out of range for {network.n_reactions} reactions")


def propensities(network: ReactionNetwork, x: np.ndarray) -> np.ndarray:
    """All f_k(x) without domain checks; callers clamp or validate."""
    out = np.empty(network.n_reactions, dtype=float)
    return _kernels.density_propensities(
        np.asarray(x, dtype=float), network.density_factors, network.reactant_matrix, out
    )


def density_rate(network: ReactionNetwork, reaction_index: int, x: Sequence[float]) -> float:
    """Density-dependent rate f_k(x) for a concentration vector ``x >= 0``."""
    _check_reaction_index(network, reaction_index)
    state = _as_state(network, x, "concentration vector")
    return float(propensities(network, state)[reaction_index])


def exact_rates(network: ReactionNetwork, counts: Sequence[int], volume: float) -> np.ndarray:
    """Exact CTMC rates q_k of every reaction at integer ``counts``."""
    if volume <= 0:
        raise DomainError(f"volume must be positive, got {volume}")
    state = np.asarray(counts)
    if state.shape != (network.n_species,):
        raise DomainError(f"count vector must have length {network.n_species}, got shape {state.shape}")
    if not np.all(np.equal(np.mod(state, 1), 0)):
        raise DomainError(f"counts must be integers: {state.tolist()}")
    state = state.astype(np.int64)
    if np.any(state < 0):
        raise DomainError(f"count vector has negative components: {state.tolist()}")
    out = np.empty(network.n_reactions, dtype=float)
    return _kernels.count_propensities(
        state,
        network.count_factors(volume),
        network.reactant_matrix,
        network.rate_convention is RateConvention.FACTORIAL,
        out,
    )


def exact_rate(network: ReactionNetwork, reaction_index: int, counts: Sequence[int], volume: float) -> float:
    """Exact CTMC rate of one reaction.

    Factorial convention: ``lambda_k / V**(<c_k>-1) * prod_i binom(s_i, c_ki)``.
    Absorbed convention: ``V * f_k(counts / V)``.
    """
    _check_reaction_index(network, reaction_index)
    return float(exact_rates(network, counts, volume)[reaction_index])


def drift(network: ReactionNetwork, x: Sequence[float]) -> np.ndarray:
    """Deterministic vector field ``F(x) = sum_k l_k f_k(x)``."""
    state = _as_state(network, x, "concentration vector")
    return propensities(network, state) @ network.jump_matrix
