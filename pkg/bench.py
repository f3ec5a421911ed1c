"""
Bench - Seeded random digraphs and the batch-S scaling experiment

Random graphs come from networkx's G(n, p) generator driven by Python's
Mersenne Twister (MT19937), so a given (n, p, seed) yields the same graph on
every platform. Each benchmark cell times batch S over all nodes of one graph;
graph generation is outside the timed region.
"""

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from graph_model import ObserverParams, TestimonialGraph, ValidationError
from observer_engine import Crowd

logger = logging.getLogger(__name__)

TIMING_HEADER = ["n", "p", "rep", "workers", "seconds"]


@dataclass(frozen=True)
class BenchPlan:
    """Grid of (n, p) cells, repeated, all derived from one seed"""
    node_counts: Tuple[int, ...] = (50, 100, 200, 400)
    edge_probabilities: Tuple[float, ...] = (0.01, 0.05)
    seed: int = 42
    repetitions: int = 3
    workers: int = 1
    parallel_cells: bool = False
    cell_budget: Optional[float] = None  # seconds; later, larger cells at the same p are skipped
    params: ObserverParams = field(default_factory=ObserverParams)

    def __post_init__(self):
        if not self.node_counts or any(n < 1 for n in self.node_counts):
            raise ValidationError(f"node counts must all be >= 1, got {self.node_counts}")
        if not self.edge_probabilities or any(not 0 <= p <= 1 for p in self.edge_probabilities):
            raise ValidationError(f"edge probabilities must lie in [0, 1], got {self.edge_probabilities}")
        if self.repetitions < 1:
            raise ValidationError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")
        if self.cell_budget is not None and self.cell_budget <= 0:
            raise ValidationError(f"cell_budget must be positive, got {self.cell_budget}")


@dataclass(frozen=True)
class TimingRow:
    n: int
    p: float
    rep: int
    workers: int
    seconds: Optional[float]  # None when the cell was skipped after a timeout
    timed_out: bool = False


def random_digraph(n: int, p: float, seed: int) -> TestimonialGraph:
    """G(n, p) digraph: every ordered pair u != v is an edge independently with probability p"""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 0 <= p <= 1:
        raise ValidationError(f"p must lie in [0, 1], got {p}")
    generated = nx.fast_gnp_random_graph(n, p, seed=seed, directed=True)
    return TestimonialGraph.from_networkx(generated)


def cell_seed(seed: int, n: int, p: float, rep: int) -> int:
    """Independent, reproducible generator seed for one benchmark cell"""
    sequence = np.random.SeedSequence([seed, n, int(round(p * 1_000_000_000)), rep])
    return int(sequence.generate_state(1)[0])


def _time_cell(n: int, p: float, rep: int, seed: int, workers: int, params: ObserverParams) -> float:
    graph = random_digraph(n, p, cell_seed(seed, n, p, rep))
    crowd = Crowd(graph, params)
    started = time.perf_counter()
    crowd.s_values(workers=workers)
    return time.perf_counter() - started


def _time_cell_job(job: tuple) -> float:
    return _time_cell(*job)


def run_scaling_benchmark(plan: BenchPlan) -> List[TimingRow]:
    """One timing row per (n, p, repetition), ordered by n, p, rep"""
    counts = sorted(plan.node_counts)
    cells = [(n, p, rep) for p in plan.edge_probabilities for n in counts for rep in range(plan.repetitions)]
    rows: List[TimingRow] = []

    if plan.parallel_cells:
        jobs = [(n, p, rep, plan.seed, 1, plan.params) for n, p, rep in cells]
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            timings = list(pool.map(_time_cell_job, jobs))
        for (n, p, rep), seconds in zip(cells, timings):
            over = plan.cell_budget is not None and seconds > plan.cell_budget
            rows.append(TimingRow(n, p, rep, 1, seconds, over))
    else:
        # n of the first over-budget cell at each p
        last_n: Dict[float, int] = {}
        for n, p, rep in cells:
            if p in last_n and n > last_n[p]:
                rows.append(TimingRow(n, p, rep, plan.workers, None, True))
                continue
            seconds = _time_cell(n, p, rep, plan.seed, plan.workers, plan.params)
            logger.info("Cell n=%d p=%g rep=%d: %.3fs", n, p, rep, seconds)
            over = plan.cell_budget is not None and seconds > plan.cell_budget
            if over:
                logger.warning("Cell n=%d p=%g exceeded the %.1fs budget; skipping larger cells at this p",
                               n, p, plan.cell_budget)
                last_n.setdefault(p, n)
            rows.append(TimingRow(n, p, rep, plan.workers, seconds, over))

    return sorted(rows, key=lambda row: (row.n, row.p, row.rep))


def write_timing_csv(rows: Sequence[TimingRow]) -> str:
    """CSV text n,p,rep,workers,seconds

    A measured cell over budget is written as "<seconds>+timeout"; a skipped
    cell is written as plain "timeout".
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TIMING_HEADER)
    for row in rows:
        if row.seconds is None:
            seconds = "timeout"
        elif row.timed_out:
            seconds = f"{row.seconds:.6f}+timeout"
        else:
            seconds = f"{row.seconds:.6f}"
        writer.writerow([row.n, f"{row.p:g}", row.rep, row.workers, seconds])
    return buffer.getvalue()


def median_times(rows: Sequence[TimingRow]) -> Dict[Tuple[int, float], float]:
    """Median measured seconds per (n, p) cell; cells with no measurement are left out"""
    grouped: Dict[Tuple[int, float], List[float]] = {}
    for row in rows:
        if row.seconds is not None:
            grouped.setdefault((row.n, row.p), []).append(row.seconds)
    return {cell: float(np.median(values)) for cell, values in sorted(grouped.items())}


def timing_series(rows: Sequence[TimingRow]) -> Dict[str, List[Tuple[int, float]]]:
    """Median timings arranged as one (n, seconds) series per edge probability"""
    series: Dict[str, List[Tuple[int, float]]] = {}
    for (n, p), seconds in median_times(rows).items():
        series.setdefault(f"p={p:g}", []).append((n, seconds))
    return series
