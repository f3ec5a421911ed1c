#!/usr/bin/env python3
"""
Tests for node-excluded truncated distances, separations and the row cache
"""

import sys
import os
import pickle
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from bench import random_digraph
from distance_engine import (
    AT_LEAST_LIMIT, DistanceCache, DistanceEngine, cache_entries_for,
    separation, truncated_distance,
)
from graph_model import NodeNotFoundError, ValidationError, load_edge_list


def test_direct_edge_survives_exclusion():
    graph = load_edge_list("a b\nb n\na n\n")
    assert truncated_distance(graph, "n", "a", "b", 5) == 1


def test_path_only_through_excluded_node_is_unreachable():
    graph = load_edge_list("a n\nb n\n")
    assert truncated_distance(graph, "n", "a", "b", 5) is AT_LEAST_LIMIT


def test_self_distance_is_zero(star):
    assert truncated_distance(star, "n", "a", "a", 3) == 0


def test_limit_truncates_long_paths():
    graph = load_edge_list("a b\nb c\nc d\nx a\n")
    assert truncated_distance(graph, "x", "a", "d", 4) == 3
    assert truncated_distance(graph, "x", "a", "d", 3) is AT_LEAST_LIMIT


def test_excluded_node_blocks_the_short_route():
    graph = load_edge_list("a n\nn b\na c\nc d\nd b\n")
    assert truncated_distance(graph, "c", "a", "b", 5) == 2
    assert truncated_distance(graph, "n", "a", "b", 5) == 3


def test_separation_takes_the_shorter_direction(linked_pair):
    assert separation(linked_pair, "n", "a", "b", 5) == 1
    assert separation(linked_pair, "n", "b", "a", 5) == 1


def test_separation_saturates_when_disconnected():
    graph = load_edge_list("a n\nb n\n")
    assert separation(graph, "n", "a", "b", 5) == 5


def test_separation_of_node_with_itself(star):
    assert separation(star, "n", "a", "a", 5) == 0


def test_unknown_nodes_raise_not_found(star):
    with pytest.raises(NodeNotFoundError):
        truncated_distance(star, "n", "a", "ghost", 5)
    with pytest.raises(NodeNotFoundError):
        separation(star, "ghost", "a", "b", 5)


def test_invalid_limit_and_excluded_endpoint(star):
    with pytest.raises(ValidationError):
        truncated_distance(star, "n", "a", "b", 0)
    with pytest.raises(ValidationError):
        truncated_distance(star, "n", "n", "a", 5)


def test_undirected_distances():
    graph = load_edge_list("a b\nb c\n", directed=False)
    engine = DistanceEngine(graph, cap=5)
    assert engine.truncated_distance("b", "a", "c", 5) is AT_LEAST_LIMIT
    assert engine.truncated_distance("b", "c", "a", 5) is AT_LEAST_LIMIT
    assert engine.separation("c", "a", "b") == 1


def test_separation_is_symmetric_on_random_graphs():
    for seed in range(5):
        graph = random_digraph(15, 0.15, seed)
        engine = DistanceEngine(graph, cap=5)
        nodes = graph.nodes
        excluded = nodes[0]
        for u in nodes[1:6]:
            for v in nodes[6:11]:
                assert engine.separation(excluded, u, v) == engine.separation(excluded, v, u)


def test_separation_matrix_matches_pairwise_queries():
    graph = random_digraph(20, 0.12, 3)
    engine = DistanceEngine(graph, cap=5)
    nodes = graph.nodes[1:9]
    matrix = engine.separation_matrix(graph.nodes[0], nodes)
    assert np.array_equal(matrix, matrix.T)
    assert (np.diag(matrix) == 0).all()
    for i, u in enumerate(nodes):
        for j, v in enumerate(nodes):
            assert matrix[i, j] == separation(graph, graph.nodes[0], u, v, 5)


def test_cache_is_transparent():
    graph = random_digraph(25, 0.1, 11)
    cached = DistanceEngine(graph, cap=5, cache=DistanceCache(1000))
    uncached = DistanceEngine(graph, cap=5, cache=DistanceCache(0))
    queries = [(graph.nodes[i % 25], graph.nodes[(i * 7 + 1) % 25], graph.nodes[(i * 3 + 2) % 25])
               for i in range(60)]
    for excluded, u, v in queries + queries:
        if excluded in (u, v):
            continue
        assert cached.separation(excluded, u, v) == uncached.separation(excluded, u, v)
    assert cached.cache.stats().hits > 0
    assert len(uncached.cache) == 0


def test_truncation_is_monotone():
    graph = random_digraph(30, 0.08, 5)
    nodes = graph.nodes
    excluded = nodes[0]
    for u in nodes[1:8]:
        for v in nodes[8:16]:
            found = truncated_distance(graph, excluded, u, v, 3)
            if found is AT_LEAST_LIMIT:
                continue
            for limit in range(found + 1, 8):
                assert truncated_distance(graph, excluded, u, v, limit) == found


def test_excluding_an_isolated_node_changes_nothing():
    graph = load_edge_list("a b\nb c\nc a\n")
    copy = graph.copy()
    copy.add_node("iso")
    copy.freeze()
    assert separation(copy, "iso", "a", "c", 5) == 1


def test_cache_evicts_least_recently_used():
    cache = DistanceCache(2)
    first, second, third = (np.zeros(3, dtype=np.int16) + i for i in range(3))
    cache.put(("n", "a", "directed", 4), first)
    cache.put(("n", "b", "directed", 4), second)
    cache.get(("n", "a", "directed", 4))
    cache.put(("n", "c", "directed", 4), third)
    assert cache.get(("n", "b", "directed", 4)) is None
    assert cache.get(("n", "a", "directed", 4)) is first
    assert len(cache) == 2


def test_pickled_cache_starts_empty():
    cache = DistanceCache(5)
    cache.put(("n", "a", "directed", 4), np.zeros(2, dtype=np.int16))
    restored = pickle.loads(pickle.dumps(cache))
    assert restored.max_entries == 5
    assert len(restored) == 0


def test_at_least_limit_survives_pickling():
    assert pickle.loads(pickle.dumps(AT_LEAST_LIMIT)) is AT_LEAST_LIMIT


def test_cache_ceiling_from_environment(monkeypatch):
    monkeypatch.setenv("EPISTEMIC_CACHE_MB", "1")
    assert cache_entries_for(1024) == 512
    monkeypatch.setenv("EPISTEMIC_CACHE_MB", "lots")
    with pytest.raises(ValidationError):
        cache_entries_for(10)


def test_cache_refuses_a_second_graph():
    shared = DistanceCache(100)
    DistanceEngine(load_edge_list("a n\nb n\na b\n"), cap=5, cache=shared).separation("n", "a", "b")
    with pytest.raises(ValidationError):
        DistanceEngine(load_edge_list("a n\nb n\n"), cap=5, cache=shared)


def test_rows_of_different_depths_are_kept_apart():
    graph = load_edge_list("a n\nb n\na x\nx y\ny b\n")
    shared = DistanceCache(100)
    shallow = DistanceEngine(graph, cap=2, cache=shared)
    deep = DistanceEngine(graph, cap=5, cache=shared)
    assert shallow.separation("n", "a", "b") == 2
    assert deep.separation("n", "a", "b") == 3
    assert shallow.separation("n", "a", "b") == 2
    assert deep.truncated_distance("n", "a", "b", 5) == 3


def test_pickled_engine_keeps_its_cache_bound_to_its_graph():
    engine = DistanceEngine(load_edge_list("a n\nb n\n"), cap=5, cache=DistanceCache(10))
    restored = pickle.loads(pickle.dumps(engine))
    assert DistanceEngine(restored.graph, cap=3, cache=restored.cache).separation("n", "a", "b") == 3
    with pytest.raises(ValidationError):
        DistanceEngine(engine.graph, cap=3, cache=restored.cache)
