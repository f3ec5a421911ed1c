#!/usr/bin/env python3
"""
Tests for profile tables, the profile CSV and SVG rendering
"""

import sys
import os
import random
import re
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import pytest

from graph_model import ValidationError, load_attributes
from observer_engine import Crowd, NodeProfile
from reporting import (
    PlotSpec, ProfileTable, read_profile_csv, render_multi_panel, render_sullivan_plot,
    render_timing_plot, split_by_group, write_profile_csv,
)

BAR = re.compile(r'<rect x="([\d.]+)" y="[\d.]+" width="[\d.]+" height="[\d.]+" fill="(#[0-9a-f]{6})"/>')
DARKEST = "#08306b"


def _table(rows, name="network"):
    return ProfileTable([NodeProfile(*row) for row in rows], name)


def test_star_profile_table(star):
    labelled = load_attributes(star, "a,red\nb,blue\n")
    table = Crowd(labelled).profile_all()
    assert table.nodes == ["a", "b", "c", "n"]
    assert table.rows[-1] == NodeProfile("n", 15, 2, 30, 3)
    assert all(row == NodeProfile(row.node, 0, 0, 0, 0) for row in table.rows[:3])


def test_csv_layout():
    text = write_profile_csv(_table([("n", 15, 2, 30, 3), ("a", 0, 0, 0, 0)]))
    assert text == "node,S,D,pi,h\na,0,0,0,0\nn,15,2,30,3\n"


def test_csv_write_read_write_is_stable():
    table = _table([("x", 6, 1, 6, 2), ("y", 25, 4, 100, 5), ("z", 0, 3, 0, 0)])
    text = write_profile_csv(table)
    again = read_profile_csv(text)
    assert again == table
    assert write_profile_csv(again) == text


def test_read_rejects_bad_csv():
    with pytest.raises(ValidationError):
        read_profile_csv("node,S\nn,1\n")
    with pytest.raises(ValidationError):
        read_profile_csv("node,S,D,pi,h\nn,2,2,5,1\n")
    with pytest.raises(ValidationError):
        read_profile_csv("node,S,D,pi,h\nn,two,2,4,1\n")


def test_duplicate_rows_rejected():
    with pytest.raises(ValidationError):
        _table([("n", 2, 1, 2, 1), ("n", 2, 1, 2, 1)])


def test_single_node_plot_draws_one_full_width_bar():
    svg = render_sullivan_plot(_table([("n", 6, 1, 6, 2)]))
    bars = BAR.findall(svg)
    assert len(bars) == 1
    assert bars[0][1] == DARKEST
    assert "<circle" in svg
    assert svg.startswith('<?xml version="1.0" encoding="UTF-8"?>')
    assert "Proportion of total" in svg


def test_default_sort_puts_low_pi_first():
    table = _table([("a", 15, 2, 30, 3), ("b", 2, 1, 2, 1)])
    fills = [fill for _, fill in BAR.findall(render_sullivan_plot(table))]
    assert fills[-1] == DARKEST and fills[0] != DARKEST
    by_node = [fill for _, fill in BAR.findall(render_sullivan_plot(table, PlotSpec(sort_key=("node",))))]
    assert by_node[0] == DARKEST


def test_bars_advance_left_to_right():
    table = _table([(f"n{i}", s, 1, s, 1) for i, s in enumerate([2, 25, 0, 9, 4])])
    xs = [float(x) for x, _ in BAR.findall(render_sullivan_plot(table))]
    assert xs == sorted(xs)
    assert len(xs) == 5


def test_rendering_is_deterministic_and_order_free():
    rows = [(f"n{i}", s, d, s * d, 1) for i, (s, d) in enumerate([(2, 1), (25, 3), (0, 2), (15, 2), (4, 4)])]
    shuffled = rows[:]
    random.Random(7).shuffle(shuffled)
    first = render_sullivan_plot(_table(rows))
    assert first == render_sullivan_plot(_table(rows))
    assert first == render_sullivan_plot(_table(shuffled))


def test_zero_rows_still_render_with_stub():
    svg = render_sullivan_plot(_table([("n", 0, 0, 0, 0)]))
    assert len(BAR.findall(svg)) == 1


def test_empty_table_asks_for_profiling():
    with pytest.raises(ValidationError, match="profile"):
        render_sullivan_plot(_table([]))


def test_multi_panel_names_the_empty_panel():
    full = _table([("n", 6, 1, 6, 2)])
    with pytest.raises(ValidationError, match="panel 2"):
        render_multi_panel([("all", full), ("empty", _table([]))])


def test_multi_panel_layout():
    full = _table([("a", 6, 1, 6, 2), ("b", 25, 2, 50, 5)])
    single = render_multi_panel([("all", full)])
    assert single == render_sullivan_plot(full, title="all")
    quad = render_multi_panel([(name, full) for name in ("all", "g1", "g2", "g3")])
    assert f'width="{4 * PlotSpec().panel_width}"' in quad
    assert len(BAR.findall(quad)) == 8
    assert quad.count("log scale") == 1


def test_split_by_group_orders_panels():
    table = _table([("a", 6, 1, 6, 2), ("b", 25, 2, 50, 5), ("c", 0, 0, 0, 0)])
    panels = split_by_group(table, {"a": {"red"}, "b": {"blue", "red"}, "ghost": {"green"}})
    assert [title for title, _ in panels] == ["network", "blue", "red"]
    assert panels[2][1].nodes == ["a", "b"]


def test_plot_spec_validation():
    with pytest.raises(ValidationError):
        PlotSpec(sort_key=("colour",))
    with pytest.raises(ValidationError):
        PlotSpec(height=10)


def test_timing_plot():
    svg = render_timing_plot({"p=0.01": [(50, 0.02), (100, 0.1)], "p=0.05": [(50, 0.05), (100, 0.9)]})
    assert svg.count("<polyline") == 2
    assert "p=0.05" in svg
    with pytest.raises(ValidationError):
        render_timing_plot({})
