"""Accuracy metrics, stability sweeps, and the color-refinement comparator.

The comparator contrasts classic 1-WL refinement (exact neighbor-color
multisets) with the bounded view an automaton gets through its
aggregation scheme; the WL partition always refines the bounded one for
multiset-determined schemes (counting, avg_threshold).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .aggregation import AggregationScheme, aggregation_values
from .automaton import GraphFSA, run
from .datasets import Dataset, ca_dataset, derive_seed
from .graph import Graph

Partition = np.ndarray  # contiguous class ids starting at 0


def node_accuracy(pred: np.ndarray, target: np.ndarray) -> float:
    """Fraction of nodes whose state matches exactly."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean(pred == target))


@dataclass(frozen=True)
class EvalRow:
    key: Union[int, str]
    mean_acc: float
    std_acc: float
    n_examples: int


@dataclass(frozen=True)
class EvalReport:
    rows: Tuple[EvalRow, ...]

    @property
    def single(self) -> EvalRow:
        if len(self.rows) != 1:
            raise ValueError("report holds more than one row")
        return self.rows[0]

    def to_csv(self) -> str:
        lines = ["size_or_t,mean_acc,std_acc,n_examples"]
        for row in self.rows:
            lines.append(f"{row.key},{row.mean_acc:.6f},{row.std_acc:.6f},{row.n_examples}")
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        width = max([len(str(r.key)) for r in self.rows] + [len("size/t")])
        lines = [f"{'size/t':>{width}}  {'mean':>8}  {'std':>8}  {'n':>5}"]
        for row in self.rows:
            lines.append(
                f"{str(row.key):>{width}}  {row.mean_acc:8.4f}  {row.std_acc:8.4f}  {row.n_examples:5d}"
            )
        return "\n".join(lines)


def evaluate(
    fsa: GraphFSA,
    dataset: Dataset,
    steps_override: Optional[int] = None,
    key: Union[int, str] = "all",
) -> EvalReport:
    """Run the automaton on every example and score exact node accuracy."""
    if not dataset:
        raise ValueError("dataset is empty")
    accs = []
    for ex in dataset:
        if int(ex.inputs.max(initial=0)) >= fsa.num_states or int(
            ex.targets.max(initial=0)
        ) >= fsa.num_states:
            raise ValueError("dataset states exceed the automaton's state count")
        steps = ex.steps if steps_override is None else steps_override
        pred, _ = run(fsa, ex.graph, ex.inputs, steps)
        accs.append(node_accuracy(pred, ex.targets))
    arr = np.asarray(accs)
    return EvalReport((EvalRow(key, float(arr.mean()), float(arr.std()), len(arr)),))


def evaluate_sizes(fsa: GraphFSA, datasets: Dict[int, Dataset]) -> EvalReport:
    """One report row per graph size."""
    rows = []
    for size in sorted(datasets):
        rows.append(evaluate(fsa, datasets[size], key=size).single)
    return EvalReport(tuple(rows))


def iteration_stability_sweep(
    fsa: GraphFSA,
    family: str,
    size: int,
    steps: Sequence[int],
    count: int = 100,
    seed: int = 0,
    toroidal: bool = False,
) -> EvalReport:
    """Accuracy against freshly generated ground truth at each step count."""
    if not steps:
        raise ValueError("step list is empty")
    rows = []
    for i, t in enumerate(steps):
        _, data = ca_dataset(family, size, int(t), count, derive_seed(seed, i), toroidal)
        rows.append(evaluate(fsa, data, key=int(t)).single)
    return EvalReport(tuple(rows))


# ---------------------------------------------------------------------------
# color refinement

def _canonical(signatures: Sequence) -> Partition:
    """Relabel signatures to contiguous ids in first-occurrence order."""
    ids: Dict = {}
    out = np.zeros(len(signatures), dtype=np.int64)
    for v, sig in enumerate(signatures):
        if sig not in ids:
            ids[sig] = len(ids)
        out[v] = ids[sig]
    return out


def wl_refinement(graph: Graph, rounds: int) -> Partition:
    """Classic color refinement from a uniform start.

    Each round hashes (own color, sorted multiset of neighbor colors);
    colors are canonically relabeled per round, so ids are stable across
    runs and platforms (exact dictionaries, no probabilistic hashing).
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    colors = np.zeros(graph.num_nodes, dtype=np.int64)
    for _ in range(rounds):
        sigs = [
            (int(colors[v]), tuple(sorted(int(colors[u]) for u in graph.neighbor_lists[v])))
            for v in range(graph.num_nodes)
        ]
        colors = _canonical(sigs)
    return colors


def bounded_refinement(graph: Graph, scheme: AggregationScheme, rounds: int) -> Partition:
    """Color refinement as seen through an aggregation scheme.

    Current colors act as states (the color space is re-indexed every
    round), and the neighbor multiset is replaced by the scheme's
    aggregation value of neighbor colors.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    colors = np.zeros(graph.num_nodes, dtype=np.int64)
    for _ in range(rounds):
        k = int(colors.max()) + 1
        values = aggregation_values(scheme, graph, colors, k)
        sigs = [
            (int(colors[v]), tuple(int(x) for x in values[v])) for v in range(graph.num_nodes)
        ]
        colors = _canonical(sigs)
    return colors


def partition_refines(finer: Partition, coarser: Partition) -> bool:
    """True when nodes sharing a class in ``finer`` also share one in
    ``coarser``."""
    finer = np.asarray(finer)
    coarser = np.asarray(coarser)
    if finer.shape != coarser.shape:
        raise ValueError("partitions must cover the same nodes")
    mapping: Dict[int, int] = {}
    for f, c in zip(finer.tolist(), coarser.tolist()):
        if f in mapping and mapping[f] != c:
            return False
        mapping[f] = c
    return True


def two_hub_example() -> Graph:
    """Two star centers with 2 and 3 same-kind leaves.

    Capped counting with b = 2 cannot tell the hubs apart (both see
    "at least two" leaves); exact multiset refinement can.
    """
    edges = ((0, 1), (0, 2), (3, 4), (3, 5), (3, 6))
    return Graph(7, edges)
