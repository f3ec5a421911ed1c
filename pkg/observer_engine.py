"""
Observer Engine - m,k-observer decisions and the per-node S, D, pi and h metrics

A node n is an m,k-observer when at least k of its sources are pairwise at
least m steps apart once n itself is taken out of the graph. Pairwise
separation defines a "far graph" on the sources; n is an m,k-observer exactly
when that far graph contains a k-clique.
"""

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from tqdm import tqdm

from distance_engine import DistanceCache, DistanceEngine, cache_entries_for
from graph_model import Direction, ObserverParams, TestimonialGraph, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeProfile:
    """Independence (s), diversity (d), epistemic position (pi) and h-measure of one node"""
    node: str
    s: int
    d: int
    pi: int
    h: int


# Far-graph cliques on bitsets: adjacency[i] has bit j set iff sources i and j are far apart

def _members(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


def far_graph_bitsets(far: np.ndarray) -> List[int]:
    """Pack a boolean adjacency matrix into one int bitset per row"""
    if far.shape[0] == 0:
        return []
    packed = np.packbits(far.astype(bool), axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def _greedy_clique(adjacency: Sequence[int], candidates: int) -> int:
    """Clique size found by repeatedly taking the best-connected remaining candidate"""
    size = 0
    while candidates:
        chosen = max(_members(candidates), key=lambda v: ((adjacency[v] & candidates).bit_count(), -v))
        size += 1
        candidates &= adjacency[chosen]
    return size


def _colour_order(adjacency: Sequence[int], candidates: int) -> List[Tuple[int, int]]:
    """Greedy colouring of candidates as (vertex, colour) pairs in non-decreasing colour"""
    ordered = []
    uncoloured = candidates
    colour = 0
    while uncoloured:
        colour += 1
        available = uncoloured
        while available:
            low = available & -available
            vertex = low.bit_length() - 1
            available &= ~(adjacency[vertex] | low)
            uncoloured &= ~low
            ordered.append((vertex, colour))
    return ordered


def bounded_clique_number(adjacency: Sequence[int], ceiling: int) -> int:
    """Exact clique number, capped at ceiling

    A greedy pass answers quickly when it already reaches the ceiling; otherwise
    a colouring-bounded branch and bound search settles the value exhaustively.
    """
    if not adjacency or ceiling <= 0:
        return 0
    everything = (1 << len(adjacency)) - 1
    best = min(_greedy_clique(adjacency, everything), ceiling)
    if best >= ceiling:
        return ceiling

    def expand(size: int, candidates: int) -> bool:
        nonlocal best
        for vertex, colour in reversed(_colour_order(adjacency, candidates)):
            if size + colour <= best:
                return False
            narrowed = candidates & adjacency[vertex]
            if narrowed:
                if expand(size + 1, narrowed):
                    return True
            elif size + 1 > best:
                best = size + 1
                if best >= ceiling:
                    return True
            candidates &= ~(1 << vertex)
        return False

    expand(0, everything)
    return min(best, ceiling)


# Process pool plumbing; each worker holds its own Crowd (and so its own cache)

_WORKER_CROWD: Optional["Crowd"] = None


def _init_worker(crowd: "Crowd") -> None:
    global _WORKER_CROWD
    _WORKER_CROWD = crowd


def _evaluate_chunk(job: Tuple[str, Tuple[str, ...]]) -> list:
    metric, nodes = job
    return [_WORKER_CROWD._evaluate(metric, node) for node in nodes]


def _chunks(items: Sequence[str], size: int) -> Iterator[Tuple[str, ...]]:
    """Split items into consecutive tuples of at most size elements"""
    iterator = iter(items)
    while True:
        chunk = tuple(itertools.islice(iterator, size))
        if not chunk:
            return
        yield chunk


class Crowd:
    """Metric calculator bound to one graph and one set of observer bounds"""

    def __init__(
        self,
        graph: Union[TestimonialGraph, nx.Graph],
        params: Optional[ObserverParams] = None,
        cache: Optional[DistanceCache] = None,
        attribute_key: str = "attributes",
    ):
        if isinstance(graph, nx.Graph):
            graph = TestimonialGraph.from_networkx(graph, attribute_key)
        self.graph = graph.freeze()
        self.params = params if params is not None else ObserverParams()
        self.direction: Direction = self.params.resolve_direction(self.graph)
        if cache is None:
            cache = DistanceCache(cache_entries_for(len(self.graph)))
        self.cache = cache
        self.engine = DistanceEngine(self.graph, cap=self.params.m_max, cache=cache)

    def __repr__(self):
        return f"Crowd({self.graph!r}, {self.params!r})"

    def sources(self, node: str) -> List[str]:
        """Sources of node in ascending id order"""
        return sorted(self.graph.sources_of(node, self.direction))

    def clear_cache(self) -> None:
        self.cache.clear()

    # Far graph helpers

    def _separations(self, node: str, sources: Sequence[str], cap: int) -> np.ndarray:
        return self.engine.separation_matrix(node, sources, max(cap, self.params.m_max))

    @staticmethod
    def _omega(separations: np.ndarray, m: int, ceiling: int) -> int:
        """Largest number (capped) of sources pairwise at least m apart"""
        return bounded_clique_number(far_graph_bitsets(separations >= m), ceiling)

    def _best_product(self, separations: np.ndarray) -> int:
        # m descending; stop once m * k_max cannot beat the best product so far
        best = 0
        k_max = self.params.k_max
        for m in range(self.params.m_max, 0, -1):
            if m * k_max <= best:
                break
            needed = max(2, best // m + 1)
            omega = self._omega(separations, m, k_max)
            if omega >= needed:
                best = m * omega
        return best

    def _highest_h(self, sources: Sequence[str], separations: np.ndarray, max_h: int) -> int:
        for h in range(max_h, 0, -1):
            if len(sources) < h:
                continue
            if h == 1 or self._omega(separations, h, h) >= h:
                return h
        return 0

    # Metrics

    def is_mk_observer(self, node: str, m: int, k: int) -> bool:
        """True iff node has at least k sources pairwise at least m steps apart without node"""
        if m < 1 or k < 1:
            raise ValidationError(f"m and k must be >= 1, got m={m}, k={k}")
        sources = self.sources(node)
        if len(sources) < k:
            return False
        if k == 1 or m == 1:
            return True
        separations = self._separations(node, sources, m)
        return self._omega(separations, m, k) >= k

    def observer_pairs(self, node: str) -> Set[Tuple[int, int]]:
        """Every (m, k) within bounds (k >= 2) for which node is an m,k-observer"""
        sources = self.sources(node)
        if len(sources) < 2:
            return set()
        separations = self._separations(node, sources, self.params.m_max)
        pairs = set()
        for m in range(1, self.params.m_max + 1):
            omega = self._omega(separations, m, self.params.k_max)
            pairs.update((m, k) for k in range(2, omega + 1))
        return pairs

    def s_value(self, node: str) -> int:
        """Largest m*k over the (m, k) pairs node observes; 0 with fewer than two sources"""
        sources = self.sources(node)
        if len(sources) < 2:
            return 0
        return self._best_product(self._separations(node, sources, self.params.m_max))

    def d_value(self, node: str) -> int:
        """Number of distinct attribute tokens across node's sources"""
        tokens: Set[str] = set()
        for source in self.sources(node):
            tokens |= self.graph.attributes(source)
        return len(tokens)

    def pi_value(self, node: str) -> int:
        return self.s_value(node) * self.d_value(node)

    def h_measure(self, node: str, max_h: Optional[int] = None) -> int:
        """Highest h <= max_h such that node is an h,h-observer (0 if none)"""
        if max_h is None:
            max_h = min(self.params.m_max, self.params.k_max)
        if max_h < 1:
            raise ValidationError(f"max_h must be >= 1, got {max_h}")
        sources = self.sources(node)
        if not sources:
            return 0
        separations = self._separations(node, sources, max_h)
        return self._highest_h(sources, separations, max_h)

    def profile(self, node: str) -> NodeProfile:
        """All metrics of one node, sharing a single separation matrix"""
        sources = self.sources(node)
        d = self.d_value(node)
        if not sources:
            return NodeProfile(node, 0, d, 0, 0)
        separations = self._separations(node, sources, self.params.m_max)
        s = self._best_product(separations) if len(sources) >= 2 else 0
        h = self._highest_h(sources, separations, min(self.params.m_max, self.params.k_max))
        return NodeProfile(node, s, d, s * d, h)

    # Batch

    def _evaluate(self, metric: str, node: str):
        if metric == "profile":
            return self.profile(node)
        return node, self.s_value(node)

    def _run_batch(self, metric: str, nodes: Optional[Iterable[str]], workers: int, progress: bool) -> list:
        if workers < 1:
            raise ValidationError(f"workers must be >= 1, got {workers}")
        requested = self.graph.nodes if nodes is None else sorted(set(nodes))
        for node in requested:
            self.graph.require(node)

        started = time.perf_counter()
        if workers == 1 or len(requested) < 2:
            iterator = tqdm(requested, desc=metric, unit="node", disable=not progress)
            results = [self._evaluate(metric, node) for node in iterator]
        else:
            chunk_size = max(1, len(requested) // (workers * 4))
            jobs = [(metric, chunk) for chunk in _chunks(requested, chunk_size)]
            results = []
            with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(self,)) as pool:
                for part in tqdm(pool.map(_evaluate_chunk, jobs), total=len(jobs), desc=metric,
                                 unit="chunk", disable=not progress):
                    results.extend(part)

        stats = self.cache.stats()
        logger.info(
            "Computed %s for %d nodes with %d worker(s) in %.2fs (cache hits=%d misses=%d entries=%d)",
            metric, len(requested), workers, time.perf_counter() - started,
            stats.hits, stats.misses, stats.entries,
        )
        return results

    def s_values(self, nodes: Optional[Iterable[str]] = None, workers: int = 1,
                 progress: bool = False) -> Dict[str, int]:
        """S for every requested node (all nodes by default)"""
        return dict(self._run_batch("s_value", nodes, workers, progress))

    def profile_all(self, nodes: Optional[Iterable[str]] = None, workers: int = 1,
                    progress: bool = False, name: str = "network"):
        """ProfileTable with one row per requested node, ordered by node id"""
        from reporting import ProfileTable

        rows = self._run_batch("profile", nodes, workers, progress)
        return ProfileTable(rows=rows, name=name, params=self.params)
