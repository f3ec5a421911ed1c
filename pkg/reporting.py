"""
Reporting - Profile tables, their CSV form, and SVG profile plots

The profile plot puts every node on the X axis (proportion of the table), draws
S as a bar and pi as a black line on a shared log scale, and shades each bar by
the node's D relative to the table's largest D.
"""

import csv
import html
import io
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from graph_model import ObserverParams, ValidationError
from observer_engine import NodeProfile

logger = logging.getLogger(__name__)

CSV_HEADER = ["node", "S", "D", "pi", "h"]
SORT_FIELDS = {"pi": "pi", "s": "s", "d": "d", "h": "h", "node": "node"}


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class ProfileTable:
    """Per-node profiles plus the name and bounds they were computed with"""
    rows: List[NodeProfile]
    name: str = "network"
    params: ObserverParams = field(default_factory=ObserverParams)
    created: str = field(default_factory=_timestamp, compare=False)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=lambda row: row.node)
        for previous, current in zip(self.rows, self.rows[1:]):
            if previous.node == current.node:
                raise ValidationError(f"node {current.node!r} appears twice in table {self.name!r}")

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[NodeProfile]:
        return iter(self.rows)

    @property
    def nodes(self) -> List[str]:
        return [row.node for row in self.rows]

    def subset(self, nodes: Iterable[str], name: str) -> "ProfileTable":
        """Rows for the given nodes only (unknown ids are skipped)"""
        wanted = set(nodes)
        return ProfileTable([row for row in self.rows if row.node in wanted], name, self.params)


def write_profile_csv(table: ProfileTable) -> str:
    """CSV text with header node,S,D,pi,h and one row per node"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in table.rows:
        writer.writerow([row.node, row.s, row.d, row.pi, row.h])
    return buffer.getvalue()


def read_profile_csv(text: str, name: str = "network") -> ProfileTable:
    """Parse CSV produced by write_profile_csv"""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != CSV_HEADER:
        raise ValidationError(f"profile CSV header must be {','.join(CSV_HEADER)}, got {header}")
    rows = []
    for number, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(CSV_HEADER):
            raise ValidationError(f"profile CSV line {number}: expected 5 fields, got {len(record)}")
        node = record[0]
        try:
            s, d, pi, h = (int(value) for value in record[1:])
        except ValueError:
            raise ValidationError(f"profile CSV line {number}: S, D, pi and h must be integers") from None
        if pi != s * d:
            raise ValidationError(f"profile CSV line {number}: pi {pi} != S*D {s * d}")
        rows.append(NodeProfile(node, s, d, pi, h))
    return ProfileTable(rows, name)


@dataclass(frozen=True)
class PlotSpec:
    """Layout and ordering of profile plots"""
    sort_key: Tuple[str, ...] = ("pi", "s", "d", "node")
    panel_width: int = 420
    height: int = 360
    floor_stub: float = 3.0  # pixel height for S or pi of 0
    light_colour: Tuple[int, int, int] = (222, 235, 247)
    dark_colour: Tuple[int, int, int] = (8, 48, 107)

    def __post_init__(self):
        unknown = [key for key in self.sort_key if key not in SORT_FIELDS]
        if unknown or not self.sort_key:
            raise ValidationError(f"sort_key must use {sorted(SORT_FIELDS)}, got {self.sort_key}")
        if self.panel_width < 120 or self.height < 120:
            raise ValidationError("panel_width and height must be at least 120 pixels")

    def ordered(self, table: ProfileTable) -> List[NodeProfile]:
        return sorted(table.rows, key=lambda row: tuple(getattr(row, SORT_FIELDS[key]) for key in self.sort_key))


def _fmt(value: float) -> str:
    return f"{value:.3f}"


def _shade(spec: PlotSpec, fraction: float) -> str:
    """Linear ramp from light to dark; darker means more diverse sources"""
    channels = (
        round(light + (dark - light) * fraction)
        for light, dark in zip(spec.light_colour, spec.dark_colour)
    )
    return "#{:02x}{:02x}{:02x}".format(*channels)


def _log_top(values: Iterable[int]) -> float:
    """Smallest power of ten covering every value (at least 10)"""
    largest = max([10, *values])
    return 10.0 ** math.ceil(math.log10(largest))


class _Panel:
    """Geometry of one profile panel"""

    margin_left = 64
    margin_right = 16
    margin_top = 40
    margin_bottom = 56

    def __init__(self, spec: PlotSpec, offset: float, top: float):
        self.spec = spec
        self.offset = offset
        self.top = top
        self.left = offset + self.margin_left
        self.right = offset + spec.panel_width - self.margin_right
        self.upper = self.margin_top
        self.bottom = spec.height - self.margin_bottom

    def x(self, proportion: float) -> float:
        return self.left + proportion * (self.right - self.left)

    def y(self, value: float) -> float:
        if value <= 0:
            return self.bottom - self.spec.floor_stub
        share = math.log10(value) / math.log10(self.top)
        return self.bottom - share * (self.bottom - self.upper)


def _panel_svg(panel: _Panel, title: str, table: ProfileTable, show_y_label: bool) -> List[str]:
    spec = panel.spec
    rows = spec.ordered(table)
    count = len(rows)
    max_d = max(row.d for row in rows)
    bar_width = (panel.right - panel.left) / count
    lines = [
        f'<text x="{_fmt((panel.left + panel.right) / 2)}" y="24" text-anchor="middle" '
        f'font-size="15" font-family="Arial">{html.escape(title)}</text>'
    ]

    # Y grid at powers of ten
    exponent = 0
    while 10 ** exponent <= panel.top:
        y = panel.y(10 ** exponent)
        lines.append(f'<line x1="{_fmt(panel.left)}" y1="{_fmt(y)}" x2="{_fmt(panel.right)}" y2="{_fmt(y)}" '
                     f'stroke="#d9d9d9" stroke-width="1"/>')
        lines.append(f'<text x="{_fmt(panel.left - 6)}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11" '
                     f'font-family="Arial">{10 ** exponent}</text>')
        exponent += 1
    lines.append(f'<text x="{_fmt(panel.left - 6)}" y="{_fmt(panel.y(0) + 4)}" text-anchor="end" font-size="11" '
                 f'font-family="Arial">0</text>')

    # Bars
    centres = []
    for position, row in enumerate(rows):
        x = panel.left + position * bar_width
        y = panel.y(row.s)
        fill = _shade(spec, row.d / max_d if max_d else 0.0)
        lines.append(f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_width)}" '
                     f'height="{_fmt(panel.bottom - y)}" fill="{fill}"/>')
        centres.append((x + bar_width / 2, panel.y(row.pi)))

    # pi line
    points = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in centres)
    lines.append(f'<polyline fill="none" stroke="#000000" stroke-width="1.5" points="{points}"/>')
    if count == 1:
        x, y = centres[0]
        lines.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3" fill="#000000"/>')

    # Axes and X ticks
    lines.append(f'<line x1="{_fmt(panel.left)}" y1="{_fmt(panel.bottom)}" x2="{_fmt(panel.right)}" '
                 f'y2="{_fmt(panel.bottom)}" stroke="#000000" stroke-width="1.5"/>')
    lines.append(f'<line x1="{_fmt(panel.left)}" y1="{_fmt(panel.upper)}" x2="{_fmt(panel.left)}" '
                 f'y2="{_fmt(panel.bottom)}" stroke="#000000" stroke-width="1.5"/>')
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        x = panel.x(tick)
        lines.append(f'<line x1="{_fmt(x)}" y1="{_fmt(panel.bottom)}" x2="{_fmt(x)}" y2="{_fmt(panel.bottom + 5)}" '
                     f'stroke="#000000" stroke-width="1"/>')
        lines.append(f'<text x="{_fmt(x)}" y="{_fmt(panel.bottom + 18)}" text-anchor="middle" font-size="11" '
                     f'font-family="Arial">{tick:g}</text>')
    lines.append(f'<text x="{_fmt((panel.left + panel.right) / 2)}" y="{_fmt(spec.height - 14)}" '
                 f'text-anchor="middle" font-size="12" font-family="Arial">Proportion of total</text>')
    if show_y_label:
        middle = (panel.upper + panel.bottom) / 2
        x = panel.offset + 16
        lines.append(f'<text x="{_fmt(x)}" y="{_fmt(middle)}" text-anchor="middle" font-size="12" '
                     f'font-family="Arial" transform="rotate(-90 {_fmt(x)} {_fmt(middle)})">'
                     f'S (bars), pi (line), log scale</text>')
    return lines


def render_multi_panel(panels: Sequence[Tuple[str, ProfileTable]], spec: Optional[PlotSpec] = None) -> str:
    """Side-by-side profile panels sharing one log Y scale, as an SVG document"""
    spec = spec or PlotSpec()
    if not panels:
        raise ValidationError("at least one profile table is needed to plot")
    for number, (title, table) in enumerate(panels, start=1):
        if len(table) == 0:
            raise ValidationError(f"panel {number} ({title!r}) has no rows; profile the graph first")

    top = _log_top(value for _, table in panels for row in table.rows for value in (row.s, row.pi))
    width = spec.panel_width * len(panels)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{spec.height}" '
        f'viewBox="0 0 {width} {spec.height}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
    ]
    for number, (title, table) in enumerate(panels):
        panel = _Panel(spec, number * spec.panel_width, top)
        lines.extend(_panel_svg(panel, title, table, show_y_label=number == 0))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def render_sullivan_plot(table: ProfileTable, spec: Optional[PlotSpec] = None, title: Optional[str] = None) -> str:
    """Single-panel profile plot of a whole table"""
    if len(table) == 0:
        raise ValidationError("profile table is empty; profile the graph before plotting")
    return render_multi_panel([(title or table.name, table)], spec)


def split_by_group(table: ProfileTable, groups: Mapping[str, Iterable[str]]) -> List[Tuple[str, ProfileTable]]:
    """Whole table first, then one table per group name (ascending) with its member rows"""
    members = {}
    for node, names in groups.items():
        for name in names:
            members.setdefault(name, set()).add(node)
    panels = [(table.name, table)]
    for name in sorted(members):
        subset = table.subset(members[name], name)
        if len(subset):
            panels.append((name, subset))
        else:
            logger.warning("Group %r has no profiled nodes, leaving it out of the plot", name)
    return panels


def render_timing_plot(series: Mapping[str, Sequence[Tuple[int, float]]], title: str = "Batch S timing") -> str:
    """Line chart of seconds (log scale) against node count, one line per series"""
    colours = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
    points = [(n, seconds) for values in series.values() for n, seconds in values if seconds > 0]
    if not points:
        raise ValidationError("no positive timings to plot")
    width, height = 720, 440
    left, right, upper, bottom = 80, width - 160, 50, height - 60
    n_low = min(n for n, _ in points)
    n_high = max(n for n, _ in points)
    if n_high == n_low:
        n_low, n_high = n_low - 1, n_high + 1
    low_exp = math.floor(math.log10(min(s for _, s in points)))
    high_exp = max(math.ceil(math.log10(max(s for _, s in points))), low_exp + 1)

    def x_of(n: float) -> float:
        return left + (n - n_low) / (n_high - n_low) * (right - left)

    def y_of(seconds: float) -> float:
        share = (math.log10(seconds) - low_exp) / (high_exp - low_exp)
        return bottom - share * (bottom - upper)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{width / 2:.1f}" y="30" text-anchor="middle" font-size="18" font-family="Arial">'
        f'{html.escape(title)}</text>',
    ]
    for exponent in range(low_exp, high_exp + 1):
        y = y_of(10.0 ** exponent)
        lines.append(f'<line x1="{left}" y1="{_fmt(y)}" x2="{right}" y2="{_fmt(y)}" stroke="#d9d9d9" stroke-width="1"/>')
        lines.append(f'<text x="{left - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-size="12" '
                     f'font-family="Arial">{10.0 ** exponent:g}</text>')
    lines.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000000" stroke-width="1.5"/>')
    lines.append(f'<line x1="{left}" y1="{upper}" x2="{left}" y2="{bottom}" stroke="#000000" stroke-width="1.5"/>')
    for n in sorted({n for n, _ in points}):
        lines.append(f'<text x="{_fmt(x_of(n))}" y="{bottom + 18}" text-anchor="middle" font-size="12" '
                     f'font-family="Arial">{n}</text>')

    for number, (label, values) in enumerate(series.items()):
        colour = colours[number % len(colours)]
        kept = sorted((n, s) for n, s in values if s > 0)
        if not kept:
            continue
        path = " ".join(f"{_fmt(x_of(n))},{_fmt(y_of(s))}" for n, s in kept)
        lines.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{path}"/>')
        for n, s in kept:
            lines.append(f'<circle cx="{_fmt(x_of(n))}" cy="{_fmt(y_of(s))}" r="3" fill="{colour}"/>')
        legend_y = upper + 20 + number * 22
        lines.append(f'<line x1="{right + 16}" y1="{legend_y}" x2="{right + 40}" y2="{legend_y}" '
                     f'stroke="{colour}" stroke-width="2"/>')
        lines.append(f'<text x="{right + 46}" y="{legend_y + 4}" font-size="12" font-family="Arial">'
                     f'{html.escape(label)}</text>')

    lines.append(f'<text x="{(left + right) / 2:.1f}" y="{height - 20}" text-anchor="middle" font-size="13" '
                 f'font-family="Arial">Number of nodes</text>')
    lines.append(f'<text x="22" y="{(upper + bottom) / 2:.1f}" text-anchor="middle" font-size="13" '
                 f'font-family="Arial" transform="rotate(-90 22 {(upper + bottom) / 2:.1f})">Seconds (log scale)</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
