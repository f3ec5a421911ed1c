#!/usr/bin/env python3
"""
Epistemic Profiler
Profiles every agent of a testimonial network: source independence (S),
source diversity (D), epistemic position (pi = S * D) and the h-measure.

Usage: python main.py [-v] COMMAND [OPTIONS]
Example: python main.py profile data/email-Eu-core.txt \
             --attrs data/email-Eu-core-department-labels.txt --out profile.csv
         python main.py plot profile.csv --out profile.svg
         python main.py bench --nodes 50,100,200 --p 0.01,0.05 --out timings.csv
Exit codes: 0 success, 1 invalid input or arguments, 2 file I/O failure.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click

from bench import BenchPlan, run_scaling_benchmark, timing_series, write_timing_csv
from graph_model import (
    Direction, ObserverParams, ProfilerError, TestimonialGraph,
    load_attributes, load_edge_list, parse_attribute_lines, write_edge_list,
)
from observer_engine import Crowd
from pruning import PruneConfig, iteratively_prune
from reporting import (
    PlotSpec, read_profile_csv, render_multi_panel, render_timing_plot,
    split_by_group, write_profile_csv,
)

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

DIRECTIONS = {
    "in": (True, Direction.PREDECESSORS),
    "out": (True, Direction.SUCCESSORS),
    "undirected": (False, Direction.NEIGHBORS),
}

# Library defaults are the single source of truth for CLI defaults
_PARAMS = ObserverParams()
_PRUNE = PruneConfig()
_PLOT = PlotSpec()
_BENCH = BenchPlan()

logger = logging.getLogger("epistemic_profiler")


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _split_list(kind):
    """click callback turning '1,2,3' into a tuple of kind"""
    def convert(ctx, param, value):
        if value is None:
            return None
        try:
            return tuple(kind(item.strip()) for item in value.split(",") if item.strip())
        except ValueError:
            raise click.BadParameter(f"expected a comma separated list, got {value!r}") from None
    return convert


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_graph(edges: str, weighted: bool, direction: str, attrs: Optional[str] = None) -> TestimonialGraph:
    directed, _ = DIRECTIONS[direction]
    graph = load_edge_list(_read(edges), directed=directed, weighted=weighted)
    if attrs is not None:
        graph = load_attributes(graph, _read(attrs))
    return graph


def _prune_config(degree_threshold: int, weight_threshold: Optional[float]) -> PruneConfig:
    return PruneConfig(degree_threshold=degree_threshold, weight_threshold=weight_threshold)


def graph_options(command):
    """Options shared by every command that reads an edge list"""
    for option in reversed([
        click.option("--weighted", is_flag=True, help="Read a third column as the edge weight."),
        click.option("--direction", type=click.Choice(sorted(DIRECTIONS)), default="in", show_default=True,
                     help="in: sources are predecessors; out: successors; undirected: all neighbours."),
    ]):
        command = option(command)
    return command


def prune_options(command):
    for option in reversed([
        click.option("--degree-threshold", type=int, default=_PRUNE.degree_threshold, show_default=True,
                     help="Remove nodes whose indegree + outdegree is at most this."),
        click.option("--weight-threshold", type=float, default=_PRUNE.weight_threshold,
                     help="Remove edges lighter than this (no culling when omitted)."),
    ]):
        command = option(command)
    return command


@click.group()
@click.version_option(__version__, prog_name="epistemic-profiler")
@click.option("-v", "--verbose", count=True, help="-v for progress and info, -vv for debug output.")
@click.pass_context
def cli(ctx, verbose):
    """Epistemic position profiling for testimonial networks."""
    _configure_logging(verbose)
    ctx.obj = {"verbose": verbose}


@cli.command()
@click.argument("edges")
@click.option("--attrs", help="Attribute file: 'node,a;b;c' or 'node a' per line.")
@graph_options
@click.option("--m-max", type=int, default=_PARAMS.m_max, show_default=True, help="Largest separation m searched.")
@click.option("--k-max", type=int, default=_PARAMS.k_max, show_default=True, help="Largest source count k searched.")
@click.option("--workers", type=int, default=1, show_default=True, help="Worker processes for the batch.")
@click.option("--prune", "prune_first", is_flag=True, help="Prune the graph before profiling.")
@prune_options
@click.option("--name", default="network", show_default=True, help="Table name used as the plot title.")
@click.option("--out", help="Write the profile CSV here instead of stdout.")
@click.pass_context
def profile(ctx, edges, attrs, weighted, direction, m_max, k_max, workers, prune_first,
            degree_threshold, weight_threshold, name, out):
    """Compute S, D, pi and h for every node of EDGES."""
    graph = _load_graph(edges, weighted, direction, attrs)
    if prune_first:
        graph = iteratively_prune(graph, _prune_config(degree_threshold, weight_threshold))
    params = ObserverParams(m_max=m_max, k_max=k_max, direction=DIRECTIONS[direction][1])
    table = Crowd(graph, params).profile_all(workers=workers, progress=ctx.obj["verbose"] >= 1, name=name)
    _emit(write_profile_csv(table), out)
    click.echo(f"Profiled {len(table)} nodes of {graph}", err=True)


@cli.command()
@click.argument("edges")
@graph_options
@prune_options
@click.option("--out", help="Write the pruned edge list here instead of stdout.")
def prune(edges, weighted, direction, degree_threshold, weight_threshold, out):
    """Iteratively prune EDGES to a stable core."""
    graph = _load_graph(edges, weighted, direction)
    pruned = iteratively_prune(graph, _prune_config(degree_threshold, weight_threshold))
    _emit(write_edge_list(pruned), out)
    click.echo(f"Pruned {graph} to {pruned}", err=True)


@cli.command()
@click.argument("profile_csv")
@click.option("--groups", help="Group file in the attribute format; adds one panel per group.")
@click.option("--title", help="Title of the whole-table panel (defaults to the file name).")
@click.option("--sort-key", callback=_split_list(str), default=",".join(_PLOT.sort_key), show_default=True,
              help="Comma separated columns ordering the bars.")
@click.option("--out", help="Write the SVG here instead of stdout.")
def plot(profile_csv, groups, title, sort_key, out):
    """Render a profile plot from PROFILE_CSV."""
    table = read_profile_csv(_read(profile_csv), name=title or Path(profile_csv).stem)
    spec = PlotSpec(sort_key=sort_key)
    panels = [(table.name, table)]
    if groups is not None:
        panels = split_by_group(table, parse_attribute_lines(_read(groups)))
    _emit(render_multi_panel(panels, spec), out)
    click.echo(f"Plotted {len(table)} nodes in {len(panels)} panel(s)", err=True)


@cli.command()
@click.option("--nodes", "node_counts", callback=_split_list(int), default=",".join(map(str, _BENCH.node_counts)),
              show_default=True, help="Comma separated node counts.")
@click.option("--p", "edge_probabilities", callback=_split_list(float),
              default=",".join(map(str, _BENCH.edge_probabilities)), show_default=True,
              help="Comma separated edge probabilities.")
@click.option("--seed", type=int, default=_BENCH.seed, show_default=True)
@click.option("--reps", type=int, default=_BENCH.repetitions, show_default=True)
@click.option("--workers", type=int, default=_BENCH.workers, show_default=True)
@click.option("--parallel-cells", is_flag=True, help="Run cells side by side, one worker each.")
@click.option("--cell-budget", type=float, default=_BENCH.cell_budget,
              help="Seconds per cell; larger cells at the same p are skipped once exceeded.")
@click.option("--m-max", type=int, default=_PARAMS.m_max, show_default=True)
@click.option("--k-max", type=int, default=_PARAMS.k_max, show_default=True)
@click.option("--out", help="Write the timing CSV here instead of stdout.")
@click.option("--plot", "plot_out", help="Also write an SVG timing chart here.")
def bench(node_counts, edge_probabilities, seed, reps, workers, parallel_cells, cell_budget,
          m_max, k_max, out, plot_out):
    """Time batch S on seeded random digraphs."""
    plan = BenchPlan(
        node_counts=node_counts,
        edge_probabilities=edge_probabilities,
        seed=seed,
        repetitions=reps,
        workers=workers,
        parallel_cells=parallel_cells,
        cell_budget=cell_budget,
        params=ObserverParams(m_max=m_max, k_max=k_max),
    )
    rows = run_scaling_benchmark(plan)
    _emit(write_timing_csv(rows), out)
    if plot_out is not None:
        Path(plot_out).write_text(render_timing_plot(timing_series(rows)), encoding="utf-8")
    click.echo(f"Timed {len(rows)} cell(s)", err=True)


def run(args: Sequence[str]) -> int:
    """Run the CLI on args and return the process exit code"""
    try:
        result = cli.main(list(args), prog_name="epistemic-profiler", standalone_mode=False)
    except click.ClickException as error:
        error.show()
        return EXIT_INVALID
    except click.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_INVALID
    except ProfilerError as error:
        logger.debug("Failed", exc_info=True)
        click.echo(f"Error: {error}", err=True)
        return EXIT_INVALID
    except (OSError, UnicodeDecodeError) as error:
        click.echo(f"I/O error: {error}", err=True)
        return EXIT_IO
    return result if isinstance(result, int) else EXIT_OK


def main():
    """Entry point for the profiler."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
