"""The discrete automaton shared by all nodes, and its synchronous executor.

A ``GraphFSA`` bundles a state count, designated starting and final
state sets, an aggregation scheme, and a dense transition table indexed
``state * |Z| + aggregation_index``. Final states are absorbing: the
validator rejects tables with outgoing final transitions and the
executor preserves final states structurally.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .aggregation import AggregationScheme, aggregate_indices, check_scheme, domain_size
from .graph import Graph

StateAssignment = np.ndarray  # int64 vector, one state per node


@dataclass(frozen=True, eq=False)
class GraphFSA:
    """Finite state automaton executed synchronously on every graph node."""

    num_states: int
    starting_states: frozenset[int]
    final_states: frozenset[int]
    scheme: AggregationScheme
    table: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphFSA):
            return NotImplemented
        return (
            self.num_states == other.num_states
            and self.starting_states == other.starting_states
            and self.final_states == other.final_states
            and self.scheme == other.scheme
            and np.array_equal(self.table, other.table)
        )

    def __post_init__(self):
        check_scheme(self.scheme, self.num_states)
        object.__setattr__(self, "starting_states", frozenset(int(s) for s in self.starting_states))
        object.__setattr__(self, "final_states", frozenset(int(s) for s in self.final_states))
        table = np.ascontiguousarray(np.asarray(self.table, dtype=np.int64))
        object.__setattr__(self, "table", table)

    @property
    def domain(self) -> int:
        return domain_size(self.scheme, self.num_states)

    @cached_property
    def final_array(self) -> np.ndarray:
        return np.asarray(sorted(self.final_states), dtype=np.int64)

    def entry(self, state: int, agg_index: int) -> int:
        return int(self.table[state * self.domain + agg_index])

    def is_final(self, state: int) -> bool:
        return state in self.final_states


def validate(fsa: GraphFSA) -> List[str]:
    """All invariant violations, as human-readable strings; [] when valid.

    Reports rather than raises so callers can show every problem at once.
    """
    problems: List[str] = []
    m, z = fsa.num_states, fsa.domain
    if m < 1:
        problems.append("state count must be at least 1")
        return problems
    if not fsa.starting_states:
        problems.append("starting state set is empty")
    for name, group in (("starting", fsa.starting_states), ("final", fsa.final_states)):
        for s in sorted(group):
            if not (0 <= s < m):
                problems.append(f"{name} state {s} out of range [0, {m})")
    if fsa.table.shape != (m * z,):
        problems.append(f"table has shape {fsa.table.shape}, expected ({m * z},)")
        return problems
    bad = np.nonzero((fsa.table < 0) | (fsa.table >= m))[0]
    for flat in bad[:20]:
        problems.append(f"table[{int(flat)}] = {int(fsa.table[flat])}: state out of range")
    for f in sorted(fsa.final_states):
        if 0 <= f < m:
            row = fsa.table[f * z : (f + 1) * z]
            for a in np.nonzero(row != f)[0][:20]:
                problems.append(
                    f"table[{f * z + int(a)}]: final state {f} not absorbing "
                    f"(maps to {int(row[a])} on aggregation {int(a)})"
                )
    return problems


@dataclass(frozen=True)
class Trace:
    """Per-step, per-node transition records from a run.

    ``records`` has shape (steps, num_nodes, 3); the last axis holds
    (state, aggregation index, next state).
    """

    records: np.ndarray

    @property
    def num_steps(self) -> int:
        return self.records.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.records.shape[1]

    def triples(self) -> set[Tuple[int, int, int]]:
        """Distinct (state, aggregation index, next state) triples."""
        flat = self.records.reshape(-1, 3)
        return {tuple(int(x) for x in row) for row in flat}


def _check_assignment(fsa: GraphFSA, graph: Graph, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=np.int64)
    if states.shape != (graph.num_nodes,):
        raise ValueError(
            f"assignment has {states.shape} entries for {graph.num_nodes} nodes"
        )
    if (states < 0).any() or (states >= fsa.num_states).any():
        raise ValueError("assignment contains states outside the automaton")
    return states


def _advance(fsa: GraphFSA, graph: Graph, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    agg = aggregate_indices(fsa.scheme, graph, states, fsa.num_states)
    nxt = fsa.table[states * fsa.domain + agg]
    if len(fsa.final_array):
        final = np.isin(states, fsa.final_array)
        nxt = np.where(final, states, nxt)
    return nxt, agg


def step(fsa: GraphFSA, graph: Graph, states: StateAssignment) -> StateAssignment:
    """One synchronous update; every output depends only on the inputs."""
    states = _check_assignment(fsa, graph, states)
    return _advance(fsa, graph, states)[0]


def run(
    fsa: GraphFSA,
    graph: Graph,
    states: StateAssignment,
    steps: int,
    record_trace: bool = False,
) -> Tuple[StateAssignment, Optional[Trace]]:
    """Apply ``step`` ``steps`` times; optionally record every transition."""
    if steps < 0:
        raise ValueError("step count must be >= 0")
    states = _check_assignment(fsa, graph, states)
    records = np.zeros((steps, graph.num_nodes, 3), dtype=np.int64) if record_trace else None
    for t in range(steps):
        nxt, agg = _advance(fsa, graph, states)
        if records is not None:
            records[t, :, 0] = states
            records[t, :, 1] = agg
            records[t, :, 2] = nxt
        states = nxt
    return states, (Trace(records) if record_trace else None)


def identity_fsa(
    num_states: int,
    scheme: AggregationScheme,
    starting: Sequence[int] | None = None,
    final: Sequence[int] = (),
) -> GraphFSA:
    """Automaton whose every transition keeps the current state."""
    z = domain_size(scheme, num_states)
    table = np.repeat(np.arange(num_states, dtype=np.int64), z)
    starting_set = frozenset(starting) if starting is not None else frozenset(range(num_states))
    return GraphFSA(num_states, starting_set, frozenset(final), scheme, table)
