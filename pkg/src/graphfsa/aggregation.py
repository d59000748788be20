"""Neighborhood aggregation schemes and their finite value domains.

Each scheme summarizes the multiset of neighbor states into a value from
a finite domain Z, which serves as the automaton's input alphabet:

* counting:  per-state neighbor counts, capped at a bound ``b``
* positional: one slot per port direction holds the neighbor's state
  (``fill`` for empty slots)
* avg_threshold: one bit per state, set when that state's share of the
  neighborhood reaches ``tau``

Values are addressed densely through a fixed mixed-radix bijection so a
transition table can be stored flat: counting uses base b+1 with state
dimension 0 least significant, positional uses base |M| with slot 0
least significant, avg_threshold puts bit m at weight 2^m.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .graph import Graph

MAX_TABLE_ENTRIES = np.iinfo(np.intp).max


@dataclass(frozen=True)
class CountingScheme:
    b: int

    kind = "counting"

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("counting bound b must be >= 1")


@dataclass(frozen=True)
class PositionalScheme:
    d: int
    fill: int = 0

    kind = "positional"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("positional needs d >= 1 slots")
        if self.fill < 0:
            raise ValueError("fill state must be a valid state index")


@dataclass(frozen=True)
class AvgThresholdScheme:
    tau: float = 0.5

    kind = "avg_threshold"

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError("threshold tau must be in (0, 1]")


AggregationScheme = Union[CountingScheme, PositionalScheme, AvgThresholdScheme]


def check_scheme(scheme: AggregationScheme, num_states: int) -> None:
    """Reject scheme/state-count combinations that cannot be realized."""
    if num_states < 1:
        raise ValueError("need at least one state")
    if isinstance(scheme, PositionalScheme) and scheme.fill >= num_states:
        raise ValueError(f"fill state {scheme.fill} >= num_states {num_states}")
    size = _domain_size_exact(scheme, num_states)
    if num_states * size > MAX_TABLE_ENTRIES:
        raise ValueError(
            f"transition table would need {num_states * size} entries, "
            f"beyond the addressable maximum {MAX_TABLE_ENTRIES}"
        )


def _domain_size_exact(scheme: AggregationScheme, num_states: int) -> int:
    if isinstance(scheme, CountingScheme):
        return (scheme.b + 1) ** num_states
    if isinstance(scheme, PositionalScheme):
        return num_states**scheme.d
    if isinstance(scheme, AvgThresholdScheme):
        return 2**num_states
    raise TypeError(f"unknown scheme {scheme!r}")


def domain_size(scheme: AggregationScheme, num_states: int) -> int:
    """|Z| for the scheme at the given state count."""
    check_scheme(scheme, num_states)
    return _domain_size_exact(scheme, num_states)


def value_length(scheme: AggregationScheme, num_states: int) -> int:
    """Number of components in one aggregation value vector."""
    if isinstance(scheme, CountingScheme):
        return num_states
    if isinstance(scheme, PositionalScheme):
        return scheme.d
    if isinstance(scheme, AvgThresholdScheme):
        return num_states
    raise TypeError(f"unknown scheme {scheme!r}")


def _radices(scheme: AggregationScheme, num_states: int) -> np.ndarray:
    if isinstance(scheme, CountingScheme):
        base, length = scheme.b + 1, num_states
    elif isinstance(scheme, PositionalScheme):
        base, length = num_states, scheme.d
    else:
        base, length = 2, num_states
    return base ** np.arange(length, dtype=np.int64)


def to_index(scheme: AggregationScheme, value: np.ndarray, num_states: int) -> int:
    """Dense index of an aggregation value (inverse of :func:`from_index`)."""
    value = np.asarray(value, dtype=np.int64)
    length = value_length(scheme, num_states)
    if value.shape != (length,):
        raise ValueError(f"value must have shape ({length},)")
    if isinstance(scheme, CountingScheme):
        hi = scheme.b
    elif isinstance(scheme, PositionalScheme):
        hi = num_states - 1
    else:
        hi = 1
    if (value < 0).any() or (value > hi).any():
        raise ValueError(f"value components must lie in [0, {hi}]")
    return int(value @ _radices(scheme, num_states))


def from_index(scheme: AggregationScheme, index: int, num_states: int) -> np.ndarray:
    """Aggregation value vector for a dense index."""
    size = domain_size(scheme, num_states)
    if not (0 <= index < size):
        raise ValueError(f"index {index} outside [0, {size})")
    if isinstance(scheme, CountingScheme):
        base, length = scheme.b + 1, num_states
    elif isinstance(scheme, PositionalScheme):
        base, length = num_states, scheme.d
    else:
        base, length = 2, num_states
    out = np.zeros(length, dtype=np.int64)
    for i in range(length):
        out[i] = index % base
        index //= base
    return out


@lru_cache(maxsize=None)
def _domain_table(scheme: AggregationScheme, num_states: int) -> np.ndarray:
    """All aggregation values in index order, shape (|Z|, value_length)."""
    size = domain_size(scheme, num_states)
    return np.stack([from_index(scheme, a, num_states) for a in range(size)])


def enumerate_domain(scheme: AggregationScheme, num_states: int) -> np.ndarray:
    return _domain_table(scheme, num_states).copy()


def _state_counts(graph: Graph, states: np.ndarray, num_states: int) -> np.ndarray:
    """Per-node neighbor state counts, shape (n, |M|). O(|V||M| + |E|)."""
    counts = np.zeros((graph.num_nodes, num_states), dtype=np.int64)
    src, dst = graph.directed_edges
    np.add.at(counts, (src, states[dst]), 1)
    return counts


def aggregation_values(
    scheme: AggregationScheme, graph: Graph, states: np.ndarray, num_states: int
) -> np.ndarray:
    """Aggregation value vectors for every node, shape (n, value_length).

    Works for any state count; unlike :func:`aggregate_indices` it never
    builds dense indices, so the domain may exceed the table limit.
    """
    states = np.asarray(states, dtype=np.int64)
    if states.shape != (graph.num_nodes,):
        raise ValueError("one state per node required")
    if (states < 0).any() or (states >= num_states).any():
        raise ValueError("state out of range")
    if isinstance(scheme, CountingScheme):
        return np.minimum(_state_counts(graph, states, num_states), scheme.b)
    if isinstance(scheme, PositionalScheme):
        if graph.ports is None and graph.num_edges > 0:
            raise ValueError("positional aggregation needs port labels")
        slots = graph.slot_matrix(scheme.d)
        return np.where(slots >= 0, states[np.maximum(slots, 0)], scheme.fill)
    counts = _state_counts(graph, states, num_states)
    deg = graph.degrees
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = counts / deg[:, None]
    return np.where(deg[:, None] > 0, frac >= scheme.tau, False).astype(np.int64)


def aggregate_indices(
    scheme: AggregationScheme, graph: Graph, states: np.ndarray, num_states: int
) -> np.ndarray:
    """Dense aggregation index for every node at once."""
    check_scheme(scheme, num_states)
    values = aggregation_values(scheme, graph, states, num_states)
    return values @ _radices(scheme, num_states)


def aggregate(
    scheme: AggregationScheme,
    node: int,
    graph: Graph,
    states: np.ndarray,
    num_states: int,
) -> np.ndarray:
    """Aggregation value vector observed by one node."""
    return aggregation_values(scheme, graph, states, num_states)[node]


def soft_aggregate(
    scheme: AggregationScheme,
    node: int,
    graph: Graph,
    soft_states: np.ndarray,
    num_states: int | None = None,
) -> np.ndarray:
    """Exact distribution of the node's aggregation value when every
    neighbor's state is drawn independently from its given distribution.

    ``soft_states`` has shape (n, |M|), one probability row per node.
    """
    from . import soft  # local import: soft builds on torch

    soft_states = np.asarray(soft_states, dtype=np.float64)
    if soft_states.ndim != 2 or soft_states.shape[0] != graph.num_nodes:
        raise ValueError("soft_states must have shape (num_nodes, num_states)")
    m = soft_states.shape[1]
    if num_states is not None and num_states != m:
        raise ValueError("num_states disagrees with distribution width")
    row_sums = soft_states.sum(axis=1)
    if (soft_states < 0).any() or (np.abs(row_sums - 1.0) > 1e-9).any():
        raise ValueError("each node distribution must be nonnegative and sum to 1")
    dist = soft.aggregate_distributions(scheme, graph, soft_states, m)
    return dist[node]
