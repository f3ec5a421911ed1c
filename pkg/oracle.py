"""
Oracle - Slow, exhaustive reference versions of the observer metrics

Used by the test suite only. Everything here enumerates subsets and runs full
breadth-first searches with networkx, sharing no code with distance_engine.
"""

import itertools
import math
from typing import Dict, Optional

import networkx as nx

from graph_model import Direction, ObserverParams, ProfilerError, TestimonialGraph

SOURCE_LIMIT = 20


class OracleGuardError(ProfilerError):
    """The oracle was asked to enumerate a node with too many sources"""


def _sources(graph: TestimonialGraph, n: str, direction: Optional[Direction]) -> list:
    if direction is None:
        direction = ObserverParams().resolve_direction(graph)
    sources = sorted(graph.sources_of(n, direction))
    if len(sources) > SOURCE_LIMIT:
        raise OracleGuardError(f"node {n!r} has {len(sources)} sources; the oracle handles at most {SOURCE_LIMIT}")
    return sources


def _distances_without(graph: TestimonialGraph, n: str, origins: list) -> Dict[str, Dict[str, int]]:
    """Unbounded hop distances from each origin in the graph with n (and self-loops) removed"""
    reduced = graph.to_networkx()
    reduced.remove_edges_from(list(nx.selfloop_edges(reduced)))
    reduced.remove_node(n)
    return {origin: nx.single_source_shortest_path_length(reduced, origin) for origin in origins}


def _apart(distances: Dict[str, Dict[str, int]], u: str, v: str) -> float:
    forward = distances[u].get(v, math.inf)
    backward = distances[v].get(u, math.inf)
    return min(forward, backward)


def brute_force_mk(graph: TestimonialGraph, n: str, m: int, k: int,
                   direction: Optional[Direction] = None) -> bool:
    """True iff some k-subset of n's sources is pairwise at least m apart without n"""
    sources = _sources(graph, n, direction)
    if k > len(sources):
        return False
    distances = _distances_without(graph, n, sources)
    for subset in itertools.combinations(sources, k):
        if all(_apart(distances, u, v) >= m for u, v in itertools.combinations(subset, 2)):
            return True
    return False


def brute_force_s(graph: TestimonialGraph, n: str, params: Optional[ObserverParams] = None) -> int:
    """Largest m*k over every (m, k >= 2) in bounds that brute_force_mk accepts"""
    params = params or ObserverParams()
    direction = params.resolve_direction(graph)
    best = 0
    for m in range(1, params.m_max + 1):
        for k in range(2, params.k_max + 1):
            if brute_force_mk(graph, n, m, k, direction):
                best = max(best, m * k)
    return best


def brute_force_h(graph: TestimonialGraph, n: str, params: Optional[ObserverParams] = None) -> int:
    params = params or ObserverParams()
    direction = params.resolve_direction(graph)
    highest = 0
    for h in range(1, min(params.m_max, params.k_max) + 1):
        if brute_force_mk(graph, n, h, h, direction):
            highest = h
    return highest
