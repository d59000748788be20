"""Undirected graphs with optional per-endpoint port labels.

Ports give each neighbor of a node a slot index (left/right on paths,
compass directions on grids); they are required by positional
aggregation and absent otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Optional, Tuple, Union

import numpy as np

Edge = Tuple[int, int]
PortTriple = Tuple[int, int, int]  # (node, neighbor, slot seen from node)
PortsLike = Union[Mapping[Tuple[int, int], int], Iterable[PortTriple], None]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph, immutable and hashable after construction.

    ``ports`` assigns each (node, neighbor) endpoint a slot index: the
    slot that ``neighbor`` occupies from ``node``'s point of view. When
    present it must cover both directions of every edge, and the slots
    assigned at any one node must be distinct. Accepted as a mapping
    ``{(node, neighbor): slot}`` or an iterable of triples; stored
    canonically sorted.

    ``grid_shape`` is set by the grid/hex samplers so row-major
    renderers know the geometry; it plays no role in execution.
    """

    num_nodes: int
    edges: Tuple[Edge, ...]
    ports: Optional[Tuple[PortTriple, ...]] = None
    grid_shape: Optional[Tuple[int, int]] = None
    layout: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if self.num_nodes < 1:
            raise ValueError("graph needs at least one node")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"edge ({u},{v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add(key)
        if self.ports is not None:
            raw = self.ports
            if isinstance(raw, Mapping):
                triples = tuple(sorted((u, v, int(s)) for (u, v), s in raw.items()))
            else:
                triples = tuple(sorted((int(u), int(v), int(s)) for u, v, s in raw))
            object.__setattr__(self, "ports", triples)
            port_map = {(u, v): s for u, v, s in triples}
            if len(port_map) != len(triples):
                raise ValueError("duplicate port entry")
            per_node: dict[int, set[int]] = {}
            for u, v in self.edges:
                for a, b in ((u, v), (v, u)):
                    if (a, b) not in port_map:
                        raise ValueError(f"missing port for endpoint ({a},{b})")
            for (a, b), slot in port_map.items():
                if (min(a, b), max(a, b)) not in seen:
                    raise ValueError(f"port on non-edge ({a},{b})")
                if slot < 0:
                    raise ValueError(f"negative slot at ({a},{b})")
                slots = per_node.setdefault(a, set())
                if slot in slots:
                    raise ValueError(f"node {a} assigns slot {slot} twice")
                slots.add(slot)
        if self.grid_shape is not None:
            object.__setattr__(self, "grid_shape", tuple(int(x) for x in self.grid_shape))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def port_map(self) -> dict[Tuple[int, int], int]:
        if self.ports is None:
            raise ValueError("graph carries no port labels")
        return {(u, v): s for u, v, s in self.ports}

    @cached_property
    def directed_edges(self) -> Tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge as (src, dst) index arrays."""
        if not self.edges:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        e = np.asarray(self.edges, dtype=np.int64)
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        return src, dst

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_nodes, dtype=np.int64)
        src, _ = self.directed_edges
        np.add.at(deg, src, 1)
        return deg

    @cached_property
    def neighbor_lists(self) -> Tuple[Tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(n)) for n in nbrs)

    @cached_property
    def neighbor_matrix(self) -> np.ndarray:
        """Neighbors padded to max degree with -1, shape (n, maxdeg)."""
        maxdeg = int(self.degrees.max()) if self.num_nodes else 0
        mat = np.full((self.num_nodes, max(maxdeg, 1)), -1, dtype=np.int64)
        for v, nbrs in enumerate(self.neighbor_lists):
            mat[v, : len(nbrs)] = nbrs
        return mat

    @cached_property
    def max_slot(self) -> int:
        if not self.ports:
            return -1
        return max(s for _, _, s in self.ports)

    def slot_matrix(self, d: int) -> np.ndarray:
        """Neighbor occupying each slot, shape (n, d); -1 for empty slots."""
        if self.ports is None:
            if self.num_edges == 0:
                return np.full((self.num_nodes, d), -1, dtype=np.int64)
            raise ValueError("graph carries no port labels")
        if self.max_slot >= d:
            raise ValueError(f"port slot {self.max_slot} exceeds d={d}")
        mat = np.full((self.num_nodes, d), -1, dtype=np.int64)
        for u, v, slot in self.ports:
            mat[u, slot] = v
        return mat

    def permuted(self, perm: Iterable[int]) -> "Graph":
        """Relabel nodes: new id of node v is perm[v]."""
        p = list(perm)
        edges = tuple((p[u], p[v]) for u, v in self.edges)
        ports = None
        if self.ports is not None:
            ports = tuple((p[u], p[v], s) for u, v, s in self.ports)
        return Graph(self.num_nodes, edges, ports, self.grid_shape, self.layout)


def bfs_distances(graph: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; -1 for unreachable nodes."""
    dist = np.full(graph.num_nodes, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    nbrs = graph.neighbor_lists
    while frontier:
        nxt = []
        for u in frontier:
            for v in nbrs[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def is_connected(graph: Graph) -> bool:
    return bool((bfs_distances(graph, 0) >= 0).all())


def eccentricities(graph: Graph) -> np.ndarray:
    ecc = np.zeros(graph.num_nodes, dtype=np.int64)
    for v in range(graph.num_nodes):
        dist = bfs_distances(graph, v)
        if (dist < 0).any():
            raise ValueError("graph is disconnected")
        ecc[v] = int(dist.max())
    return ecc


def diameter(graph: Graph) -> int:
    """Longest shortest path; raises on disconnected graphs."""
    return int(eccentricities(graph).max())


def center_node(graph: Graph) -> int:
    """A node of minimum eccentricity (lowest id on ties)."""
    return int(np.argmin(eccentricities(graph)))
