#!/usr/bin/env python3
"""
Exhaustive agreement between the optimized engine and the brute-force oracle
on 500 small seeded random digraphs
"""

import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pytest

from bench import random_digraph
from graph_model import Direction, ObserverParams, load_edge_list
from observer_engine import Crowd
from oracle import OracleGuardError, brute_force_h, brute_force_mk, brute_force_s

PROBABILITIES = (0.1, 0.3, 0.6)
M_RANGE = range(1, 6)
K_RANGE = range(2, 6)


def _sweep(count=500):
    for seed in range(count):
        n = 3 + seed % 10
        p = PROBABILITIES[(seed // 10) % 3]
        yield seed, random_digraph(n, p, seed)


def test_oracle_on_hand_examples(star, linked_pair):
    assert brute_force_mk(star, "n", 5, 3)
    assert not brute_force_mk(linked_pair, "n", 2, 2)
    assert not brute_force_mk(star, "n", 1, 4)
    assert brute_force_s(star, "n") == 15
    assert brute_force_h(star, "n") == 3


def test_oracle_zero_cases():
    graph = load_edge_list("a n\nx y\n")
    assert brute_force_s(graph, "n") == 0
    assert brute_force_s(graph, "a") == 0


def test_oracle_refuses_huge_source_sets():
    graph = load_edge_list("".join(f"s{i} n\n" for i in range(21)))
    with pytest.raises(OracleGuardError):
        brute_force_mk(graph, "n", 2, 2)


def test_engine_matches_oracle_on_every_pair():
    checked = 0
    for seed, graph in _sweep():
        crowd = Crowd(graph)
        for node in graph.nodes:
            grid = {(m, k): brute_force_mk(graph, node, m, k, Direction.PREDECESSORS)
                    for m in M_RANGE for k in K_RANGE}
            for (m, k), expected in grid.items():
                assert crowd.is_mk_observer(node, m, k) == expected, (seed, node, m, k)
                if expected and m >= 2:
                    assert grid[(m - 1, k)], (seed, node, m, k)
                if expected and k >= 3:
                    assert grid[(m, k - 1)], (seed, node, m, k)
            best = max([m * k for (m, k), holds in grid.items() if holds], default=0)
            assert crowd.s_value(node) == best, (seed, node)
            highest = max([h for h in range(2, 6) if grid[(h, h)]], default=0)
            if highest == 0 and graph.predecessors(node):
                highest = 1
            assert crowd.h_measure(node) == highest, (seed, node)
            checked += 1
    assert checked > 3000


def test_oracle_s_and_h_agree_with_engine():
    for seed, graph in _sweep(60):
        crowd = Crowd(graph)
        for node in graph.nodes:
            assert crowd.s_value(node) == brute_force_s(graph, node), (seed, node)
            assert crowd.h_measure(node) == brute_force_h(graph, node), (seed, node)


def test_engine_matches_oracle_with_tighter_bounds():
    params = ObserverParams(m_max=3, k_max=4)
    for seed, graph in _sweep(80):
        crowd = Crowd(graph, params)
        for node in graph.nodes:
            assert crowd.s_value(node) == brute_force_s(graph, node, params), (seed, node)
            assert crowd.h_measure(node) == brute_force_h(graph, node, params), (seed, node)


def test_engine_matches_oracle_on_undirected_graphs():
    for seed, graph in _sweep(60):
        undirected = load_edge_list("".join(f"{u} {v}\n" for u, v, _ in graph.edges()), directed=False)
        crowd = Crowd(undirected)
        for node in undirected.nodes:
            assert crowd.s_value(node) == brute_force_s(undirected, node), (seed, node)
