"""
Shared fixtures for the profiler tests
"""

import logging
import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from graph_model import TestimonialGraph, load_edge_list


def pytest_collection_modifyitems(config, items):
    """Skip tests marked slow unless EPISTEMIC_RUN_SLOW=1"""
    if os.environ.get("EPISTEMIC_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set EPISTEMIC_RUN_SLOW=1 to run slow experiments")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def restore_root_logging():
    """The CLI reconfigures the root logger; put it back after each test"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def star() -> TestimonialGraph:
    """n with three sources that share no edges"""
    return load_edge_list("a n\nb n\nc n\n")


@pytest.fixture
def linked_pair() -> TestimonialGraph:
    """n with sources a and b, where a also tells b"""
    return load_edge_list("a n\nb n\na b\n")


@pytest.fixture
def wide_star() -> TestimonialGraph:
    """n with five mutually unconnected sources"""
    return load_edge_list("".join(f"s{i} n\n" for i in range(5)))
