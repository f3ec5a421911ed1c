"""
Pruning - Iteratively strip light edges, low-degree nodes and minor components

Edges lighter than the weight threshold go first. Nodes whose indegree +
outdegree is at or below the degree threshold are then peeled in rounds until
none is left, and only the largest weakly connected component of what remains
is kept. The result is a fixpoint: pruning it again changes nothing.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Set

import networkx as nx

from graph_model import TestimonialGraph, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PruneConfig:
    """Thresholds for iteratively_prune (defaults: degree <= 1 removed, no edge culling)"""
    degree_threshold: int = 1
    weight_threshold: Optional[float] = None  # edges with weight strictly below are removed

    def __post_init__(self):
        if self.degree_threshold < 0:
            raise ValidationError(f"degree_threshold must be >= 0, got {self.degree_threshold}")
        if self.weight_threshold is not None and self.weight_threshold < 0:
            raise ValidationError(f"weight_threshold must be >= 0, got {self.weight_threshold}")


def _degree(graph: nx.Graph, node: str) -> int:
    """indegree + outdegree with self-loops left out"""
    if graph.is_directed():
        return len(set(graph.successors(node)) - {node}) + len(set(graph.predecessors(node)) - {node})
    return len(set(graph.neighbors(node)) - {node})


def _largest_component(graph: nx.Graph) -> Set[str]:
    """Largest weakly connected component; ties go to the one holding the smallest node id"""
    if graph.is_directed():
        components = nx.weakly_connected_components(graph)
    else:
        components = nx.connected_components(graph)
    ranked = sorted(components, key=lambda component: (-len(component), min(component)))
    return ranked[0] if ranked else set()


def iteratively_prune(graph: TestimonialGraph, config: Optional[PruneConfig] = None) -> TestimonialGraph:
    """Fixpoint of edge culling, degree filtering and largest-component selection

    The component is chosen only once culling and filtering have stopped
    changing the graph, so it is always a whole component of the stable core.
    """
    config = config or PruneConfig()
    working = graph.to_networkx()
    if config.weight_threshold is not None:
        light = [(u, v) for u, v, w in working.edges(data="weight") if w < config.weight_threshold]
        working.remove_edges_from(light)

    rounds = 0
    while True:
        rounds += 1
        before = (working.number_of_nodes(), working.number_of_edges())
        sparse_nodes = [node for node in working.nodes if _degree(working, node) <= config.degree_threshold]
        working.remove_nodes_from(sparse_nodes)
        after = (working.number_of_nodes(), working.number_of_edges())
        logger.debug("Prune round %d: %s -> %s (nodes, edges)", rounds, before, after)
        if not sparse_nodes:
            break

    keep = _largest_component(working)
    working.remove_nodes_from([node for node in list(working.nodes) if node not in keep])

    pruned = TestimonialGraph.from_networkx(working)
    if pruned.number_of_nodes() == 0:
        logger.warning("Pruning removed every node (degree threshold %d, weight threshold %s)",
                       config.degree_threshold, config.weight_threshold)
    else:
        logger.info("Pruned %s to %s in %d round(s)", graph, pruned, rounds)
    return pruned
