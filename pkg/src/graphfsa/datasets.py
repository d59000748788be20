"""Benchmark data: graph samplers, random-automaton ground truths,
cellular-automaton rule automata, and exact graph-algorithm tasks.

Every generator is a pure function of its seed. Per-example randomness
comes from counter-based child seeds (dataset seed, stream, index), so
examples can be produced in parallel with bit-identical results.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from functools import partial
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from .aggregation import AggregationScheme, CountingScheme, PositionalScheme, domain_size
from .automaton import GraphFSA, run, validate
from .graph import Graph, bfs_distances, center_node, diameter, is_connected

# ---------------------------------------------------------------------------
# seeding

def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, stream key...) without shared state."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for (seed, key...)."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(2)
    return int(state[0]) << 32 | int(state[1])


def _map_indices(fn, count: int, workers: int = 1) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    import multiprocessing as mp

    with mp.get_context("fork").Pool(workers) as pool:
        return pool.map(fn, range(count))


# ---------------------------------------------------------------------------
# graph distributions

@dataclass(frozen=True)
class PathDist:
    n: int
    kind = "path"


@dataclass(frozen=True)
class TreeDist:
    n: int
    kind = "tree"


@dataclass(frozen=True)
class GridDist:
    rows: int
    cols: int
    moore: bool = False
    toroidal: bool = False
    kind = "grid"


@dataclass(frozen=True)
class HexGridDist:
    rows: int
    cols: int
    kind = "hexgrid"


@dataclass(frozen=True)
class ErdosRenyiDist:
    n: int
    p: float
    kind = "erdos_renyi"


@dataclass(frozen=True)
class RegularDist:
    n: int
    d: int
    kind = "regular"


@dataclass(frozen=True)
class CompleteDist:
    n: int
    kind = "complete"


GraphDistribution = Union[
    PathDist, TreeDist, GridDist, HexGridDist, ErdosRenyiDist, RegularDist, CompleteDist
]

_RESAMPLE_CAP = 1000

# compass slots; a neighbor's slot from the other endpoint is the
# opposite direction, so paired entries sit 4 (or 2) apart
_VON_NEUMANN = ((-1, 0), (0, 1), (1, 0), (0, -1))  # N E S W
_MOORE = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))

PATH_LEFT, PATH_RIGHT = 0, 1


def path_graph(n: int) -> Graph:
    """Path 0-1-...-n-1 with slot 0 = left neighbor, slot 1 = right."""
    if n < 1:
        raise ValueError("path needs n >= 1")
    edges = tuple((i, i + 1) for i in range(n - 1))
    ports = []
    for i in range(n - 1):
        ports.append((i, i + 1, PATH_RIGHT))
        ports.append((i + 1, i, PATH_LEFT))
    return Graph(n, edges, tuple(ports) or None, layout="path")


def cycle_graph(n: int) -> Graph:
    """Ring with consistent left/right orientation (n >= 3)."""
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    edges = tuple((i, (i + 1) % n) for i in range(n))
    ports = []
    for i in range(n):
        j = (i + 1) % n
        ports.append((i, j, PATH_RIGHT))
        ports.append((j, i, PATH_LEFT))
    return Graph(n, edges, tuple(ports), layout="cycle")


def grid_graph(rows: int, cols: int, moore: bool = False, toroidal: bool = False) -> Graph:
    if rows < 1 or cols < 1:
        raise ValueError("grid needs positive dimensions")
    if toroidal and (rows < 3 or cols < 3):
        raise ValueError("toroidal grids need both dimensions >= 3")
    dirs = _MOORE if moore else _VON_NEUMANN
    edges = set()
    ports = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            for slot, (dr, dc) in enumerate(dirs):
                nr, nc = r + dr, c + dc
                if toroidal:
                    nr, nc = nr % rows, nc % cols
                elif not (0 <= nr < rows and 0 <= nc < cols):
                    continue
                v = nr * cols + nc
                edges.add((min(u, v), max(u, v)))
                ports.append((u, v, slot))
    return Graph(
        rows * cols,
        tuple(sorted(edges)),
        tuple(ports),
        grid_shape=(rows, cols),
        layout="grid-moore" if moore else "grid",
    )


def hex_grid_graph(rows: int, cols: int) -> Graph:
    """Hexagonal cells in odd-r offset layout; interior cells have 6 neighbors."""
    if rows < 1 or cols < 1:
        raise ValueError("hex grid needs positive dimensions")
    # slots: E, NE, NW, W, SW, SE; opposites are (i + 3) % 6
    even = ((0, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0))
    odd = ((0, 1), (-1, 1), (-1, 0), (0, -1), (1, 0), (1, 1))
    edges = set()
    ports = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            dirs = odd if r % 2 else even
            for slot, (dr, dc) in enumerate(dirs):
                nr, nc = r + dr, c + dc
                if not (0 <= nr < rows and 0 <= nc < cols):
                    continue
                v = nr * cols + nc
                edges.add((min(u, v), max(u, v)))
                ports.append((u, v, slot))
    return Graph(
        rows * cols,
        tuple(sorted(edges)),
        tuple(ports),
        grid_shape=(rows, cols),
        layout="hex-odd-r",
    )


def _random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform labeled tree via a random Prüfer sequence."""
    if n == 1:
        return Graph(1, ())
    if n == 2:
        return Graph(2, ((0, 1),))
    prufer = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    np.add.at(degree, prufer, 1)
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return Graph(n, tuple(edges))


def _erdos_renyi(n: int, p: float, rng: np.random.Generator) -> Graph:
    if not (0.0 <= p <= 1.0):
        raise ValueError("edge probability must lie in [0, 1]")
    for _ in range(_RESAMPLE_CAP):
        iu, ju = np.triu_indices(n, k=1)
        keep = rng.random(len(iu)) < p
        edges = tuple((int(a), int(b)) for a, b in zip(iu[keep], ju[keep]))
        g = Graph(n, edges)
        if is_connected(g):
            return g
    raise RuntimeError(f"no connected G({n},{p}) sample after {_RESAMPLE_CAP} tries")


def _random_regular(n: int, d: int, rng: np.random.Generator) -> Graph:
    if d < 1 or d >= n or (n * d) % 2 != 0:
        raise ValueError("regular graph needs 1 <= d < n and even n*d")
    for _ in range(_RESAMPLE_CAP):
        stubs = np.repeat(np.arange(n), d)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = set()
        ok = True
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b or (min(a, b), max(a, b)) in edges:
                ok = False
                break
            edges.add((min(a, b), max(a, b)))
        if not ok:
            continue
        g = Graph(n, tuple(sorted(edges)))
        if is_connected(g):
            return g
    raise RuntimeError(f"no simple connected {d}-regular sample after {_RESAMPLE_CAP} tries")


def sample_graph(dist: GraphDistribution, rng: np.random.Generator) -> Graph:
    """Draw one connected graph from the distribution."""
    if isinstance(dist, PathDist):
        return path_graph(dist.n)
    if isinstance(dist, TreeDist):
        return _random_tree(dist.n, rng)
    if isinstance(dist, GridDist):
        return grid_graph(dist.rows, dist.cols, dist.moore, dist.toroidal)
    if isinstance(dist, HexGridDist):
        return hex_grid_graph(dist.rows, dist.cols)
    if isinstance(dist, ErdosRenyiDist):
        return _erdos_renyi(dist.n, dist.p, rng)
    if isinstance(dist, RegularDist):
        return _random_regular(dist.n, dist.d, rng)
    if isinstance(dist, CompleteDist):
        n = dist.n
        return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))
    raise TypeError(f"unknown distribution {dist!r}")


def resize(dist: GraphDistribution, n: int) -> GraphDistribution:
    """Same family at a different node count (grids use the nearest square)."""
    if isinstance(dist, (GridDist, HexGridDist)):
        side = max(2, round(math.sqrt(n)))
        return replace(dist, rows=side, cols=side)
    return replace(dist, n=n)


# ---------------------------------------------------------------------------
# examples

@dataclass(frozen=True)
class Example:
    """One supervised pair: run the target automaton ``steps`` times on
    ``graph`` starting from ``inputs`` and you get ``targets``."""

    graph: Graph
    inputs: np.ndarray
    targets: np.ndarray
    steps: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.int64)
        targets = np.asarray(self.targets, dtype=np.int64)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        n = self.graph.num_nodes
        if inputs.shape != (n,) or targets.shape != (n,):
            raise ValueError("inputs/targets must hold one state per node")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")


Dataset = List[Example]


# ---------------------------------------------------------------------------
# random-automaton benchmark (GRAB)

DEFAULT_EXTRA_SIZES = (10, 20, 50, 100)


@dataclass(frozen=True)
class GrabSpec:
    """Configuration for one synthetic ground-truth benchmark.

    Final states take indices [0, num_final), starting states the next
    num_start indices; remaining states are free.
    """

    num_states: int
    num_start: int
    num_final: int
    scheme: AggregationScheme
    distribution: GraphDistribution
    train_sizes: Tuple[int, ...]
    extra_sizes: Tuple[int, ...] = DEFAULT_EXTRA_SIZES
    examples_per_size: int = 20
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "train_sizes", tuple(int(n) for n in self.train_sizes))
        object.__setattr__(self, "extra_sizes", tuple(int(n) for n in self.extra_sizes))
        if self.num_start < 1 or self.num_final < 1:
            raise ValueError("need at least one starting and one final state")
        if self.num_start + self.num_final > self.num_states:
            raise ValueError("starting and final sets must be disjoint subsets of the states")
        if self.examples_per_size < 1:
            raise ValueError("examples_per_size must be >= 1")

    @property
    def final_states(self) -> frozenset[int]:
        return frozenset(range(self.num_final))

    @property
    def starting_states(self) -> frozenset[int]:
        return frozenset(range(self.num_final, self.num_final + self.num_start))


def random_fsa(spec: GrabSpec, rng: np.random.Generator) -> GraphFSA:
    """Uniform random transition table; final rows forced to self-loops."""
    m = spec.num_states
    z = domain_size(spec.scheme, m)
    table = rng.integers(0, m, size=m * z, dtype=np.int64)
    for f in sorted(spec.final_states):
        table[f * z : (f + 1) * z] = f
    fsa = GraphFSA(m, spec.starting_states, spec.final_states, spec.scheme, table)
    problems = validate(fsa)
    if problems:
        raise AssertionError(f"generated automaton invalid: {problems}")
    return fsa


def _draw_example(
    fsa: GraphFSA, dist: GraphDistribution, size: int, seed: int, stream: Tuple[int, ...], index: int
) -> Example:
    rng = child_rng(seed, *stream, index)
    graph = sample_graph(resize(dist, size), rng)
    starts = np.asarray(sorted(fsa.starting_states), dtype=np.int64)
    inputs = starts[rng.integers(0, len(starts), size=graph.num_nodes)]
    steps = diameter(graph) + int(rng.integers(0, 4))
    targets, _ = run(fsa, graph, inputs, steps)
    return Example(graph, inputs, targets, steps)


@dataclass(frozen=True)
class GrabResult:
    fsa: GraphFSA
    train: Dataset
    extra: Dict[int, Dataset]


def make_grab_dataset(spec: GrabSpec, workers: int = 1) -> GrabResult:
    """Ground-truth automaton plus train and extrapolation splits."""
    fsa = random_fsa(spec, child_rng(spec.seed, 0))
    train: Dataset = []
    for si, size in enumerate(spec.train_sizes):
        fn = partial(_draw_example, fsa, spec.distribution, size, spec.seed, (1, si))
        train.extend(_map_indices(fn, spec.examples_per_size, workers))
    extra: Dict[int, Dataset] = {}
    for si, size in enumerate(spec.extra_sizes):
        fn = partial(_draw_example, fsa, spec.distribution, size, spec.seed, (2, si))
        extra[size] = _map_indices(fn, spec.examples_per_size, workers)
    return GrabResult(fsa, train, extra)


# ---------------------------------------------------------------------------
# cellular-automaton rule automata

def ca_rule_fsa(rule: int) -> GraphFSA:
    """One-dimensional binary rule as an automaton over left/right slots.

    The table entry for (own state, left, right) is bit
    left*4 + own*2 + right of the rule number, the standard encoding of
    the 256 elementary rules.
    """
    if not (0 <= rule < 256):
        raise ValueError("rule must lie in [0, 256)")
    scheme = PositionalScheme(d=2, fill=0)
    table = np.zeros(2 * 4, dtype=np.int64)
    for own in range(2):
        for left in range(2):
            for right in range(2):
                agg = left + 2 * right  # slot 0 = left, slot 1 = right
                table[own * 4 + agg] = (rule >> (4 * left + 2 * own + right)) & 1
    return GraphFSA(2, frozenset({0, 1}), frozenset(), scheme, table)


GOL_DEAD, GOL_ALIVE = 0, 1


def gol_fsa(variant: str = "square") -> GraphFSA:
    """Life rules (birth on 3, survival on 2 or 3) with counts capped at 5.

    The cap keeps the domain finite and still separates the decision
    boundary: any capped live-count above 3 dies. The hexagonal variant
    uses the same thresholds on 6-cell neighborhoods.
    """
    if variant not in ("square", "hex"):
        raise ValueError("variant must be 'square' or 'hex'")
    scheme = CountingScheme(b=5)
    z = domain_size(scheme, 2)
    table = np.zeros(2 * z, dtype=np.int64)
    for own in (GOL_DEAD, GOL_ALIVE):
        for a in range(z):
            alive = (a // 6) % 6  # counting radix: dead dim is least significant
            if own == GOL_ALIVE:
                nxt = GOL_ALIVE if alive in (2, 3) else GOL_DEAD
            else:
                nxt = GOL_ALIVE if alive == 3 else GOL_DEAD
            table[own * z + a] = nxt
    return GraphFSA(2, frozenset({0, 1}), frozenset(), scheme, table)


WW_EMPTY, WW_HEAD, WW_TAIL, WW_CONDUCTOR = 0, 1, 2, 3


def wireworld_fsa() -> GraphFSA:
    """Electron-flow automaton: head->tail, tail->conductor, and a
    conductor ignites on exactly one or two head neighbors (counts
    capped at 3, which preserves that distinction)."""
    scheme = CountingScheme(b=3)
    z = domain_size(scheme, 4)
    table = np.zeros(4 * z, dtype=np.int64)
    for a in range(z):
        heads = (a // 4) % 4  # radix-4 digit of the head dimension
        table[WW_EMPTY * z + a] = WW_EMPTY
        table[WW_HEAD * z + a] = WW_TAIL
        table[WW_TAIL * z + a] = WW_CONDUCTOR
        table[WW_CONDUCTOR * z + a] = WW_HEAD if heads in (1, 2) else WW_CONDUCTOR
    return GraphFSA(4, frozenset({0, 1, 2, 3}), frozenset(), scheme, table)


CA_FAMILIES = ("gol", "gol-hex", "wireworld")


def builtin_automaton(name: str) -> GraphFSA:
    """Automaton for a named family: gol, gol-hex, wireworld, ca1d:<rule>."""
    if name == "gol":
        return gol_fsa("square")
    if name == "gol-hex":
        return gol_fsa("hex")
    if name == "wireworld":
        return wireworld_fsa()
    if name.startswith("ca1d:"):
        return ca_rule_fsa(int(name.split(":", 1)[1]))
    raise ValueError(f"unknown automaton family {name!r}")


def ca_family_graph(name: str, size: int, toroidal: bool = False) -> Graph:
    """Board graph a CA family runs on at the given linear size."""
    if name in ("gol", "wireworld"):
        return grid_graph(size, size, moore=True, toroidal=toroidal)
    if name == "gol-hex":
        if toroidal:
            raise ValueError("toroidal hexagonal boards are not defined")
        return hex_grid_graph(size, size)
    if name.startswith("ca1d:"):
        return path_graph(size)
    raise ValueError(f"unknown automaton family {name!r}")


def _draw_ca_example(
    fsa: GraphFSA, graph: Graph, steps: int, seed: int, stream: Tuple[int, ...], index: int
) -> Example:
    rng = child_rng(seed, *stream, index)
    starts = np.asarray(sorted(fsa.starting_states), dtype=np.int64)
    inputs = starts[rng.integers(0, len(starts), size=graph.num_nodes)]
    targets, _ = run(fsa, graph, inputs, steps)
    return Example(graph, inputs, targets, steps)


def ca_dataset(
    name: str,
    size: int,
    steps: int,
    count: int,
    seed: int,
    toroidal: bool = False,
    workers: int = 1,
) -> Tuple[GraphFSA, Dataset]:
    """Random boards of one CA family with targets after ``steps`` updates."""
    fsa = builtin_automaton(name)
    graph = ca_family_graph(name, size, toroidal)
    fn = partial(_draw_ca_example, fsa, graph, steps, seed, (0,))
    return fsa, _map_indices(fn, count, workers)


def full_coverage_ca_dataset(rule: int, length: int, steps: int = 1) -> Tuple[GraphFSA, Dataset]:
    """Every binary input pattern of a path, for exhaustive-supervision training."""
    fsa = ca_rule_fsa(rule)
    graph = path_graph(length)
    examples = []
    for bits in range(2**length):
        inputs = np.array([(bits >> i) & 1 for i in range(length)], dtype=np.int64)
        targets, _ = run(fsa, graph, inputs, steps)
        examples.append(Example(graph, inputs, targets, steps))
    return fsa, examples


# ---------------------------------------------------------------------------
# graph algorithm tasks

@dataclass(frozen=True)
class TaskInfo:
    """State layout of a task: finals first, then starting states."""

    name: str
    num_states: int
    starting: Tuple[int, ...]
    final: Tuple[int, ...]


ALGORITHM_TASKS: Dict[str, TaskInfo] = {
    # distance parity: f0 even, f1 odd; s0 non-root, s1 root
    "distance": TaskInfo("distance", 4, (2, 3), (0, 1)),
    # on-path prediction: f0 off, f1 on; s0 unmarked, s1 marked
    "pathfinding": TaskInfo("pathfinding", 4, (2, 3), (0, 1)),
    # suffix parity: f0 even, f1 odd; s0 bit 0, s1 bit 1
    "prefixsum": TaskInfo("prefixsum", 4, (2, 3), (0, 1)),
    # value propagation: f_bit outputs; starts (other,0)(other,1)(root,0)(root,1)
    "rootvalue": TaskInfo("rootvalue", 6, (2, 3, 4, 5), (0, 1)),
}


def _steps_for(graph: Graph, rng: np.random.Generator) -> int:
    return diameter(graph) + int(rng.integers(0, 4))


def _distance_example(size: int, seed: int, stream: Tuple[int, ...], index: int) -> Example:
    rng = child_rng(seed, *stream, index)
    graph = _random_tree(size, rng)
    root = center_node(graph)
    inputs = np.full(size, 2, dtype=np.int64)
    inputs[root] = 3
    dist = bfs_distances(graph, root)
    targets = (dist % 2).astype(np.int64)  # f0 = even, f1 = odd
    return Example(graph, inputs, targets, _steps_for(graph, rng))


def _pathfinding_example(size: int, seed: int, stream: Tuple[int, ...], index: int) -> Example:
    rng = child_rng(seed, *stream, index)
    graph = _random_tree(size, rng)
    a, b = rng.choice(size, size=2, replace=False)
    inputs = np.full(size, 2, dtype=np.int64)
    inputs[[a, b]] = 3
    targets = np.zeros(size, dtype=np.int64)
    targets[_tree_path(graph, int(a), int(b))] = 1
    return Example(graph, inputs, targets, _steps_for(graph, rng))


def _tree_path(graph: Graph, a: int, b: int) -> List[int]:
    """Nodes on the unique a-b path, endpoints included."""
    parent = {a: a}
    frontier = [a]
    while b not in parent:
        nxt = []
        for u in frontier:
            for v in graph.neighbor_lists[u]:
                if v not in parent:
                    parent[v] = u
                    nxt.append(v)
        frontier = nxt
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path


def _prefixsum_example(
    size: int, seed: int, stream: Tuple[int, ...], index: int, include_self: bool = True
) -> Example:
    rng = child_rng(seed, *stream, index)
    graph = path_graph(size)
    bits = rng.integers(0, 2, size=size).astype(np.int64)
    inputs = bits + 2
    suffix = np.cumsum(bits[::-1])[::-1]  # inclusive right-to-left sums
    if not include_self:
        suffix = suffix - bits
    targets = (suffix % 2).astype(np.int64)
    return Example(graph, inputs, targets, _steps_for(graph, rng))


def _rootvalue_example(size: int, seed: int, stream: Tuple[int, ...], index: int) -> Example:
    rng = child_rng(seed, *stream, index)
    graph = path_graph(size)
    root = int(rng.integers(0, size))
    bits = rng.integers(0, 2, size=size).astype(np.int64)
    inputs = bits + 2
    inputs[root] = 4 + bits[root]
    targets = np.full(size, int(bits[root]), dtype=np.int64)
    return Example(graph, inputs, targets, _steps_for(graph, rng))


def algorithm_dataset(
    task: str,
    sizes: Sequence[int],
    count: int,
    seed: int,
    include_self: bool = True,
    workers: int = 1,
) -> Dict[int, Dataset]:
    """Exact ground-truth datasets keyed by graph size."""
    if task not in ALGORITHM_TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {sorted(ALGORITHM_TASKS)}")
    makers = {
        "distance": _distance_example,
        "pathfinding": _pathfinding_example,
        "prefixsum": partial(_prefixsum_example, include_self=include_self),
        "rootvalue": _rootvalue_example,
    }
    maker = makers[task]
    out: Dict[int, Dataset] = {}
    for si, size in enumerate(sizes):
        if size < 2:
            raise ValueError("task graphs need at least 2 nodes")
        fn = partial(maker, size, seed, (si,))
        out[size] = _map_indices(fn, count, workers)
    return out
