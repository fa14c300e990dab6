"""Structural analysis: complexes, linkage classes, stoichiometric rank, deficiency."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import networkx as nx
import sympy

from .network import Complex, ReactionNetwork, stoichiometric_matrix

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeficiencyReport:
    """Deficiency ``theta = |C| - L - dim S`` together with its ingredients."""

    complexes_count: int
    linkage_classes: int
    stoich_dim: int
    deficiency: int

    def to_dict(self) -> dict[str, int]:
        return asdict(self)


def complexes(network: ReactionNetwork) -> frozenset[Complex]:
    """Every reactant and product complex, deduplicated by composition."""
    found: set[Complex] = set()
    for reaction in network.reactions:
        found.add(reaction.reactants)
        found.add(reaction.products)
    return frozenset(found)


def _complex_graph(network: ReactionNetwork) -> nx.Graph:
    graph = nx.Graph()
    for reaction in network.reactions:
        graph.add_edge(reaction.reactants, reaction.products)
    return graph


def linkage_class_members(network: ReactionNetwork) -> list[frozenset[Complex]]:
    """Complexes of each linkage class, largest class first."""
    components = [frozenset(c) for c in nx.connected_components(_complex_graph(network))]
    return sorted(components, key=lambda c: (-len(c), sorted(str(x) for x in c)))


def linkage_classes(network: ReactionNetwork) -> int:
    """Number of connected components of the undirected complex graph."""
    return nx.number_connected_components(_complex_graph(network))


def stoichiometric_rank(network: ReactionNetwork) -> int:
    """Rank of the stoichiometric matrix over the rationals (exact elimination)."""
    if network.n_reactions == 0:
        return 0
    matrix = sympy.Matrix(stoichiometric_matrix(network).tolist())
    return int(matrix.rank())


def deficiency(network: ReactionNetwork) -> DeficiencyReport:
    n_complexes = len(complexes(network))
    n_classes = linkage_classes(network)
    rank = stoichiometric_rank(network)
    report = DeficiencyReport(
        complexes_count=n_complexes,
        linkage_classes=n_classes,
        stoich_dim=rank,
        deficiency=n_complexes - n_classes - rank,
    )
    LOGGER.debug("deficiency of %s: %s", network.name, report)
    return report


def format_report(network: ReactionNetwork, report: DeficiencyReport) -> str:
    """Human-readable deficiency report listing the linkage classes."""
    lines = [
        f"model: {network.describe()}",
        f"species: {', '.join(network.species)}",
        f"reactions: {network.n_reactions}",
        f"complexes |C|: {report.complexes_count}",
        f"linkage classes L: {report.linkage_classes}",
    ]
    for index, members in enumerate(linkage_class_members(network), start=1):
        lines.append(f"  class {index}: {{{', '.join(sorted(str(c) for c in members))}}}")
    lines.append(f"dim S: {report.stoich_dim}")
    lines.append(f"deficiency theta: {report.deficiency}")
    return "\n".join(lines)
