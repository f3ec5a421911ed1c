"""
Testimonial Graph - Holds the network of agents, their testimony edges and attributes
"""

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple

import networkx as nx
import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)

_SEPARATORS = re.compile(r"[,\s]+")


class ProfilerError(Exception):
    """Base class for every error raised by the profiler"""


class GraphParseError(ProfilerError, ValueError):
    """A line of an input file could not be parsed"""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class ValidationError(ProfilerError, ValueError):
    """A value is outside the range the profiler accepts"""


class NodeNotFoundError(ProfilerError, KeyError):
    """A node id is not part of the graph"""

    def __init__(self, node: str):
        super().__init__(node)
        self.node = node

    def __str__(self):
        return f"unknown node {self.node!r}"


class Direction(Enum):
    """Which neighbours of a node count as its sources"""
    PREDECESSORS = "predecessors"
    SUCCESSORS = "successors"
    NEIGHBORS = "neighbors"


@dataclass(frozen=True)
class ObserverParams:
    """Search bounds for m,k-observer queries"""
    m_max: int = 5
    k_max: int = 5
    direction: Optional[Direction] = None  # None: predecessors if directed, else neighbors

    def __post_init__(self):
        if self.m_max < 1:
            raise ValidationError(f"m_max must be >= 1, got {self.m_max}")
        if self.k_max < 2:
            raise ValidationError(f"k_max must be >= 2, got {self.k_max}")

    def resolve_direction(self, graph: "TestimonialGraph") -> Direction:
        """Direction to use on this graph"""
        if not graph.directed:
            return Direction.NEIGHBORS
        if self.direction is None:
            return Direction.PREDECESSORS
        return self.direction


class TestimonialGraph:
    """Directed (or undirected) weighted graph of agents with per-node attribute sets"""

    __test__ = False  # keep pytest from collecting this as a test class

    def __init__(self, directed: bool = True):
        self.directed = directed
        self._succ: Dict[str, Dict[str, float]] = {}
        self._pred: Dict[str, Dict[str, float]] = {}
        self._attributes: Dict[str, FrozenSet[str]] = {}
        self._frozen = False
        self._index: Optional[Dict[str, int]] = None
        self._adjacency: Optional[sparse.csr_matrix] = None

    # Construction

    def add_node(self, node: str, attributes: Iterable[str] = ()) -> None:
        """Add a node (no-op if it exists, attributes are merged)"""
        self._check_mutable()
        if node not in self._succ:
            self._succ[node] = {}
            self._pred[node] = {}
            self._attributes[node] = frozenset()
        if attributes:
            self._attributes[node] = self._attributes[node] | frozenset(attributes)

    def add_edge(self, u: str, v: str, weight: float = 1.0) -> None:
        """Add an edge; a repeated edge adds its weight to the existing one"""
        self._check_mutable()
        if weight < 0 or math.isnan(weight):
            raise ValidationError(f"edge {u}->{v} has negative weight {weight}")
        self.add_node(u)
        self.add_node(v)
        total = self._succ[u].get(v, 0.0) + weight
        self._succ[u][v] = total
        self._pred[v][u] = total
        if not self.directed:
            self._succ[v][u] = total
            self._pred[u][v] = total

    def freeze(self) -> "TestimonialGraph":
        """Mark the graph read-only; metric code relies on this"""
        self._frozen = True
        return self

    def _check_mutable(self):
        if self._frozen:
            raise ProfilerError("graph is frozen after loading")

    def copy(self) -> "TestimonialGraph":
        """Unfrozen copy with the same nodes, edges and attributes"""
        clone = TestimonialGraph(self.directed)
        for node in self._succ:
            clone.add_node(node, self._attributes[node])
        for u, v, w in self.edges():
            clone.add_edge(u, v, w)
        return clone

    def with_attributes(self, attributes: Mapping[str, Iterable[str]]) -> "TestimonialGraph":
        """Frozen copy whose listed nodes get the given attribute sets"""
        clone = self.copy()
        for node, attrs in attributes.items():
            if node in clone._attributes:
                clone._attributes[node] = frozenset(attrs)
        return clone.freeze()

    # Queries

    @property
    def nodes(self) -> List[str]:
        """All node ids in ascending order"""
        return sorted(self._succ)

    def has_node(self, node: str) -> bool:
        return node in self._succ

    def require(self, node: str) -> None:
        """Raise NodeNotFoundError unless node is in the graph"""
        if node not in self._succ:
            raise NodeNotFoundError(node)

    def __contains__(self, node: str) -> bool:
        return node in self._succ

    def __len__(self) -> int:
        return len(self._succ)

    def number_of_nodes(self) -> int:
        return len(self._succ)

    def number_of_edges(self) -> int:
        """Distinct edges, self-loops included"""
        if self.directed:
            return sum(len(targets) for targets in self._succ.values())
        loops = sum(1 for node, targets in self._succ.items() if node in targets)
        return (sum(len(targets) for targets in self._succ.values()) + loops) // 2

    def edges(self) -> Iterator[Tuple[str, str, float]]:
        """Every stored edge once, in node order (undirected edges as u <= v)"""
        for u in sorted(self._succ):
            for v in sorted(self._succ[u]):
                if not self.directed and v < u:
                    continue
                yield u, v, self._succ[u][v]

    def weight(self, u: str, v: str) -> Optional[float]:
        """Weight of edge u->v, or None if absent"""
        return self._succ.get(u, {}).get(v)

    def successors(self, node: str) -> Set[str]:
        """Out-neighbours, self-loop excluded"""
        self.require(node)
        return {v for v in self._succ[node] if v != node}

    def predecessors(self, node: str) -> Set[str]:
        """In-neighbours, self-loop excluded"""
        self.require(node)
        return {u for u in self._pred[node] if u != node}

    def degree(self, node: str) -> int:
        """indegree + outdegree (plain degree when undirected), ignoring self-loops"""
        if self.directed:
            return len(self.successors(node)) + len(self.predecessors(node))
        return len(self.successors(node))

    def attributes(self, node: str) -> FrozenSet[str]:
        self.require(node)
        return self._attributes[node]

    def sources_of(self, node: str, direction: Optional[Direction] = None) -> Set[str]:
        """Nodes that node receives information from under the direction convention"""
        self.require(node)
        if direction is None:
            direction = Direction.PREDECESSORS if self.directed else Direction.NEIGHBORS
        if direction is Direction.PREDECESSORS:
            return self.predecessors(node)
        if direction is Direction.SUCCESSORS:
            return self.successors(node)
        return self.predecessors(node) | self.successors(node)

    # Dense views used by the distance engine

    def index(self) -> Dict[str, int]:
        """Dense integer position of every node (ascending id order)"""
        if self._index is None or not self._frozen:
            self._index = {node: i for i, node in enumerate(self.nodes)}
        return self._index

    def adjacency(self) -> sparse.csr_matrix:
        """Sparse 0/1 matrix A[i, j] = 1 iff edge i->j (symmetric when undirected), no self-loops"""
        if self._adjacency is not None and self._frozen:
            return self._adjacency
        index = self.index()
        rows: List[int] = []
        cols: List[int] = []
        for u, targets in self._succ.items():
            for v in targets:
                if u != v:
                    rows.append(index[u])
                    cols.append(index[v])
        size = len(index)
        matrix = sparse.csr_matrix(
            (np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(size, size)
        )
        self._adjacency = matrix
        return matrix

    # networkx interop

    def to_networkx(self, attribute_key: str = "attributes") -> nx.Graph:
        """Equivalent networkx graph; attribute sets stored under attribute_key"""
        result = nx.DiGraph() if self.directed else nx.Graph()
        for node in self.nodes:
            result.add_node(node, **{attribute_key: set(self._attributes[node])})
        for u, v, w in self.edges():
            result.add_edge(u, v, weight=w)
        return result

    @classmethod
    def from_networkx(cls, source: nx.Graph, attribute_key: str = "attributes") -> "TestimonialGraph":
        """Build a frozen graph from networkx; node ids are stringified

        The datum under attribute_key may be a scalar (a singleton attribute set)
        or any iterable of tokens. Multigraph parallel edges sum their weights.
        """
        graph = cls(directed=source.is_directed())
        for node, data in source.nodes(data=True):
            graph.add_node(str(node), _attribute_set(data.get(attribute_key)))
        for u, v, data in source.edges(data=True):
            graph.add_edge(str(u), str(v), float(data.get("weight", 1.0)))
        return graph.freeze()

    def __eq__(self, other):
        if not isinstance(other, TestimonialGraph):
            return NotImplemented
        return (
            self.directed == other.directed
            and self._attributes == other._attributes
            and list(self.edges()) == list(other.edges())
        )

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"TestimonialGraph({kind}, nodes={self.number_of_nodes()}, edges={self.number_of_edges()})"


def _attribute_set(value) -> FrozenSet[str]:
    if value is None:
        return frozenset()
    if isinstance(value, (str, bytes, int, float)):
        return frozenset({str(value)})
    return frozenset(str(token) for token in value)


def _content_lines(text: str) -> Iterator[Tuple[int, str]]:
    """Numbered non-blank, non-comment lines"""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield number, line


def load_edge_list(text: str, directed: bool = True, weighted: bool = False) -> TestimonialGraph:
    """Parse `u v` / `u v w` lines (whitespace or comma separated) into a frozen graph

    A third column is always checked, but it becomes the edge weight only when
    weighted is set; otherwise every edge weighs 1.0.
    """
    graph = TestimonialGraph(directed=directed)
    for number, line in _content_lines(text):
        tokens = _SEPARATORS.split(line)
        if len(tokens) not in (2, 3):
            raise GraphParseError(number, f"expected 'u v' or 'u v w', got {len(tokens)} fields")
        weight = 1.0
        if len(tokens) == 3:
            try:
                weight = float(tokens[2])
            except ValueError:
                raise GraphParseError(number, f"weight {tokens[2]!r} is not a number") from None
            if not math.isfinite(weight):
                raise GraphParseError(number, f"weight {tokens[2]!r} is not finite")
            if weight < 0:
                raise ValidationError(f"line {number}: negative weight {weight}")
        graph.add_edge(tokens[0], tokens[1], weight if weighted else 1.0)
    logger.info("Loaded %s", graph)
    return graph.freeze()


def write_edge_list(graph: TestimonialGraph) -> str:
    """Serialize edges as sorted `u v w` lines; isolated nodes are not representable"""
    return "".join(f"{u} {v} {w!r}\n" for u, v, w in graph.edges())


def parse_attribute_lines(text: str) -> Dict[str, FrozenSet[str]]:
    """Parse `node,a;b;c` or `node a` lines into node -> attribute set"""
    result: Dict[str, Set[str]] = {}
    for number, line in _content_lines(text):
        if "," in line:
            node, _, rest = line.partition(",")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise GraphParseError(number, "expected a node id followed by attributes")
            node, rest = parts
        node = node.strip()
        tokens = [token.strip() for token in rest.split(";")]
        if not node or any(not token for token in tokens):
            raise ValidationError(f"line {number}: empty node id or attribute token")
        result.setdefault(node, set()).update(tokens)
    return {node: frozenset(tokens) for node, tokens in result.items()}


def load_attributes(graph: TestimonialGraph, text: str) -> TestimonialGraph:
    """Frozen copy of graph with attribute sets from an attribute file"""
    parsed = parse_attribute_lines(text)
    unknown = sorted(node for node in parsed if not graph.has_node(node))
    for node in unknown:
        logger.warning("Attribute file names unknown node %r, ignoring it", node)
    known = {node: attrs for node, attrs in parsed.items() if graph.has_node(node)}
    logger.info("Assigned attributes to %d of %d nodes", len(known), graph.number_of_nodes())
    return graph.with_attributes(known)


def sources_of(graph: TestimonialGraph, node: str, direction: Optional[Direction] = None) -> Set[str]:
    """Module-level form of TestimonialGraph.sources_of"""
    return graph.sources_of(node, direction)
