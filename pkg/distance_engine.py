"""
Distance Engine - Depth-truncated shortest paths with one node taken out of the graph

Every query asks how far apart two nodes are once a third node (the observer)
is removed. Distances are hop counts; searches stop after a fixed depth because
callers only need to tell "closer than m" from "at least m".
"""

import logging
import os
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np

from graph_model import TestimonialGraph, ValidationError

logger = logging.getLogger(__name__)

CACHE_ENV_VAR = "EPISTEMIC_CACHE_MB"
DEFAULT_CACHE_MB = 256


class _AtLeastLimit:
    """Marker for a distance that reached the search limit (or is unreachable)"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __reduce__(self):
        return (_AtLeastLimit, ())

    def __repr__(self):
        return "AT_LEAST_LIMIT"


AT_LEAST_LIMIT = _AtLeastLimit()

Distance = Union[int, _AtLeastLimit]
CacheKey = Tuple[str, str, str, int]


@dataclass(frozen=True)
class CacheStats:
    hits: int
    misses: int
    entries: int


def cache_entries_for(graph_size: int) -> int:
    """Entry ceiling that keeps cached rows under EPISTEMIC_CACHE_MB megabytes"""
    raw = os.environ.get(CACHE_ENV_VAR, str(DEFAULT_CACHE_MB))
    try:
        megabytes = float(raw)
    except ValueError:
        raise ValidationError(f"{CACHE_ENV_VAR} must be a number, got {raw!r}") from None
    if megabytes < 0:
        raise ValidationError(f"{CACHE_ENV_VAR} must be >= 0, got {raw!r}")
    row_bytes = 2 * max(graph_size, 1)
    return int(megabytes * 2 ** 20) // row_bytes


class DistanceCache:
    """LRU map from (excluded, origin, traversal mode, depth) to a truncated distance row

    A cache serves exactly one graph: the first engine built on it binds it, and
    any engine on another graph object is refused. Pickling it (to ship a Crowd
    to a worker) carries the ceiling and the bound graph but not the contents,
    so every worker starts empty.
    """

    def __init__(self, max_entries: int = 100_000):
        if max_entries < 0:
            raise ValidationError(f"max_entries must be >= 0, got {max_entries}")
        self.max_entries = max_entries
        self._rows: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self.hits = 0
        self.misses = 0
        self._owner: Optional[TestimonialGraph] = None

    def bind(self, graph: TestimonialGraph) -> None:
        """Tie the cache to graph, or refuse graph if another one is already bound"""
        if self._owner is None:
            self._owner = graph
        elif self._owner is not graph:
            raise ValidationError(
                f"distance cache already serves {self._owner!r}; give {graph!r} its own cache")

    def get(self, key: CacheKey) -> Optional[np.ndarray]:
        row = self._rows.get(key)
        if row is None:
            self.misses += 1
            return None
        self._rows.move_to_end(key)
        self.hits += 1
        return row

    def put(self, key: CacheKey, row: np.ndarray) -> None:
        if self.max_entries == 0:
            return
        self._rows[key] = row
        self._rows.move_to_end(key)
        while len(self._rows) > self.max_entries:
            self._rows.popitem(last=False)

    def clear(self) -> None:
        self._rows.clear()
        self.hits = 0
        self.misses = 0

    def stats(self) -> CacheStats:
        return CacheStats(self.hits, self.misses, len(self._rows))

    def __len__(self):
        return len(self._rows)

    def __getstate__(self):
        return {"max_entries": self.max_entries, "owner": self._owner}

    def __setstate__(self, state):
        self.__init__(state["max_entries"])
        self._owner = state.get("owner")


class DistanceEngine:
    """Answers truncated distance queries on one graph, caching rows searched to depth cap - 1"""

    def __init__(self, graph: TestimonialGraph, cap: int, cache: Optional[DistanceCache] = None):
        if cap < 1:
            raise ValidationError(f"cap must be >= 1, got {cap}")
        self.graph = graph
        self.cap = cap
        self.depth = cap - 1
        self.cache = cache if cache is not None else DistanceCache(cache_entries_for(len(graph)))
        self.cache.bind(graph)
        self._index = graph.index()
        # Transposed so that A^T @ frontier spreads each frontier column along out-edges
        self._spread = graph.adjacency().T.tocsr()
        self._mode = "directed" if graph.directed else "undirected"

    def _position(self, node: str) -> int:
        self.graph.require(node)
        return self._index[node]

    def _search(self, excluded: int, origins: Sequence[int], depth: int) -> np.ndarray:
        """Breadth-first search from all origins at once, never entering excluded

        Row i holds exact hop counts from origins[i] up to depth; anything farther
        or unreachable holds depth + 1.
        """
        size = len(self._index)
        count = len(origins)
        rows = np.full((count, size), depth + 1, dtype=np.int16)
        if count == 0:
            return rows
        columns = np.arange(count)
        origin_positions = np.asarray(origins, dtype=np.int64)
        rows[columns, origin_positions] = 0

        frontier = np.zeros((size, count), dtype=np.int32)
        frontier[origin_positions, columns] = 1
        reached = frontier.astype(bool)
        reached[excluded, :] = True

        for step in range(1, depth + 1):
            spread = self._spread @ frontier
            fresh = (spread > 0) & ~reached
            if not fresh.any():
                break
            reached |= fresh
            rows[fresh.T] = step
            frontier = fresh.astype(np.int32)
        return rows

    def distance_rows(self, excluded: str, origins: Sequence[str], depth: Optional[int] = None) -> np.ndarray:
        """Truncated distance rows (one per origin, columns in graph index order)"""
        if depth is None:
            depth = self.depth
        if depth < 0:
            raise ValidationError(f"depth must be >= 0, got {depth}")
        excluded_position = self._position(excluded)
        positions = [self._position(origin) for origin in origins]
        if excluded in origins:
            raise ValidationError(f"origin {excluded!r} is the excluded node")

        if depth != self.depth:
            return self._search(excluded_position, positions, depth)

        found: Dict[str, np.ndarray] = {}
        missing: List[str] = []
        for origin in origins:
            row = self.cache.get((excluded, origin, self._mode, depth))
            if row is None:
                missing.append(origin)
            else:
                found[origin] = row
        if missing:
            fresh = self._search(excluded_position, [self._index[o] for o in missing], depth)
            for origin, row in zip(missing, fresh):
                found[origin] = row
                self.cache.put((excluded, origin, self._mode, depth), row)

        size = len(self._index)
        if not origins:
            return np.empty((0, size), dtype=np.int16)
        return np.stack([found[origin] for origin in origins])

    def truncated_distance(self, excluded: str, source: str, target: str, limit: int) -> Distance:
        """Hop distance source->target avoiding excluded, or AT_LEAST_LIMIT if >= limit"""
        if limit < 1:
            raise ValidationError(f"limit must be >= 1, got {limit}")
        self._position(target)
        if target == excluded:
            raise ValidationError(f"target {target!r} is the excluded node")
        depth = limit - 1
        # Cached rows are exact up to self.depth, so any smaller limit can reuse them
        row = self.distance_rows(excluded, [source], self.depth if depth <= self.depth else depth)[0]
        if source == target:
            return 0
        distance = int(row[self._index[target]])
        return distance if distance < limit else AT_LEAST_LIMIT

    def separation(self, excluded: str, u: str, v: str, cap: Optional[int] = None) -> int:
        """min(d(u,v), d(v,u)) in the graph without excluded, saturating at cap"""
        if cap is None:
            cap = self.cap
        if u == v:
            self.truncated_distance(excluded, u, v, cap)
            return 0
        forward = self.truncated_distance(excluded, u, v, cap)
        backward = forward if not self.graph.directed else self.truncated_distance(excluded, v, u, cap)
        values = [cap if d is AT_LEAST_LIMIT else d for d in (forward, backward)]
        return min(values)

    def separation_matrix(self, excluded: str, nodes: Sequence[str], cap: Optional[int] = None) -> np.ndarray:
        """Pairwise separations of nodes (square, symmetric, zero diagonal, capped)"""
        if cap is None:
            cap = self.cap
        if cap < 1:
            raise ValidationError(f"cap must be >= 1, got {cap}")
        depth = self.depth if cap - 1 <= self.depth else cap - 1
        rows = self.distance_rows(excluded, nodes, depth)
        columns = [self._index[node] for node in nodes]
        block = rows[:, columns]
        return np.minimum(np.minimum(block, block.T), cap)


def truncated_distance(graph: TestimonialGraph, excluded: str, source: str, target: str, limit: int) -> Distance:
    """One-off truncated distance query without a cache"""
    engine = DistanceEngine(graph, cap=max(limit, 1), cache=DistanceCache(0))
    return engine.truncated_distance(excluded, source, target, limit)


def separation(graph: TestimonialGraph, excluded: str, u: str, v: str, cap: int) -> int:
    """One-off separation query without a cache"""
    engine = DistanceEngine(graph, cap=cap, cache=DistanceCache(0))
    return engine.separation(excluded, u, v, cap)
