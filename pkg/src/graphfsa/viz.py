"""DOT exports of transition tables and plain-text grid renderings.

State naming follows the diagram convention: final states are f0, f1,
... (in index order), starting states s0, s1, ..., remaining states q0,
q1, ... Edge labels decode aggregation indices to bracketed value
vectors, one vector per line when parallel edges merge.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Mapping, Sequence, Set, Tuple

import numpy as np

from .aggregation import from_index
from .automaton import GraphFSA, Trace, validate
from .graph import Graph

__all__ = [
    "Trace",
    "state_names",
    "export_complete_dot",
    "export_partial_dot",
    "render_grid_trace",
]


def state_names(fsa: GraphFSA) -> List[str]:
    names = [""] * fsa.num_states
    for i, f in enumerate(sorted(fsa.final_states)):
        names[f] = f"f{i}"
    for i, s in enumerate(sorted(fsa.starting_states)):
        names[s] = f"s{i}"
    free = 0
    for m in range(fsa.num_states):
        if not names[m]:
            names[m] = f"q{free}"
            free += 1
    return names


def _label(fsa: GraphFSA, agg_index: int) -> str:
    value = from_index(fsa.scheme, agg_index, fsa.num_states)
    return "[" + ", ".join(str(int(x)) for x in value) + "]"


def _reachable_states(fsa: GraphFSA) -> Set[int]:
    z = fsa.domain
    seen = set(fsa.starting_states)
    frontier = list(fsa.starting_states)
    while frontier:
        m = frontier.pop()
        for a in range(z):
            nxt = int(fsa.table[m * z + a])
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def _render_dot(
    fsa: GraphFSA,
    states: Iterable[int],
    edges: Mapping[Tuple[int, int], List[int]],
    dashed: Set[int],
) -> str:
    names = state_names(fsa)
    lines = ["digraph fsa {", "  rankdir=LR;", "  node [shape=circle];"]
    shown = sorted(states)
    for m in shown:
        attrs = []
        if m in fsa.final_states:
            attrs.append("shape=doublecircle")
        if m in dashed:
            attrs.append("style=dashed")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f'  "{names[m]}"{suffix};')
    for m in shown:
        if m in fsa.starting_states:
            lines.append(f"  start_{names[m]} [shape=point];")
            lines.append(f'  start_{names[m]} -> "{names[m]}";')
    for (src, dst) in sorted(edges):
        label = "\\n".join(_label(fsa, a) for a in sorted(edges[(src, dst)]))
        lines.append(f'  "{names[src]}" -> "{names[dst]}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_complete_dot(fsa: GraphFSA) -> str:
    """Every state and every table transition; unreachable states dashed.

    Output is deterministic: states in index order, parallel edges
    merged with one aggregation vector per label line.
    """
    problems = validate(fsa)
    if problems:
        raise ValueError("cannot draw an invalid automaton: " + "; ".join(problems))
    z = fsa.domain
    edges: Dict[Tuple[int, int], List[int]] = {}
    for m in range(fsa.num_states):
        for a in range(z):
            nxt = int(fsa.table[m * z + a])
            edges.setdefault((m, nxt), []).append(a)
    dashed = set(range(fsa.num_states)) - _reachable_states(fsa)
    return _render_dot(fsa, range(fsa.num_states), edges, dashed)


def export_partial_dot(fsa: GraphFSA, traces: Sequence[Trace]) -> str:
    """Only the states and transitions observed in the given traces."""
    problems = validate(fsa)
    if problems:
        raise ValueError("cannot draw an invalid automaton: " + "; ".join(problems))
    z = fsa.domain
    edges: Dict[Tuple[int, int], List[int]] = {}
    states: Set[int] = set()
    for trace in traces:
        for state, agg, nxt in trace.triples():
            if not (0 <= state < fsa.num_states and 0 <= nxt < fsa.num_states):
                raise ValueError(f"trace references unknown state in ({state},{agg},{nxt})")
            if not (0 <= agg < z):
                raise ValueError(f"trace references aggregation index {agg} outside [0,{z})")
            if fsa.entry(state, agg) != nxt:
                raise ValueError(
                    f"trace transition ({state},{agg},{nxt}) disagrees with the table"
                )
            states.update((state, nxt))
            aggs = edges.setdefault((state, nxt), [])
            if agg not in aggs:
                aggs.append(agg)
    return _render_dot(fsa, states, edges, set())


def render_grid_trace(
    graph: Graph,
    assignments: Sequence[np.ndarray],
    palette: Mapping[int, str],
) -> str:
    """One character block per timestep, row-major over the grid."""
    if graph.grid_shape is None:
        raise ValueError("graph is not a grid (no grid_shape)")
    rows, cols = graph.grid_shape
    if rows * cols != graph.num_nodes:
        raise ValueError("grid_shape does not match the node count")
    blocks = []
    for states in assignments:
        states = np.asarray(states, dtype=np.int64)
        if states.shape != (graph.num_nodes,):
            raise ValueError("assignment length does not match the grid")
        missing = sorted(set(states.tolist()) - set(palette))
        if missing:
            raise ValueError(f"palette misses states {missing}")
        grid = states.reshape(rows, cols)
        blocks.append("\n".join("".join(palette[int(s)] for s in row) for row in grid))
    return "\n\n".join(blocks) + "\n"
