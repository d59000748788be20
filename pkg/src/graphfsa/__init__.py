"""Finite state automata executed synchronously on graph nodes.

Core pieces: a discrete executor (`automaton`), finite aggregation
schemes (`aggregation`), benchmark generators (`datasets`), a
differentiable trainer that recovers transition tables from
input/output pairs (`training`), evaluation and refinement comparators
(`evaluation`), and DOT/text visualization (`viz`).
"""

__version__ = "0.1.0"

from .aggregation import (
    AggregationScheme,
    AvgThresholdScheme,
    CountingScheme,
    PositionalScheme,
    aggregate,
    aggregate_indices,
    aggregation_values,
    domain_size,
    from_index,
    soft_aggregate,
    to_index,
)
from .automaton import GraphFSA, StateAssignment, Trace, identity_fsa, run, step, validate
from .datasets import (
    ALGORITHM_TASKS,
    CompleteDist,
    Dataset,
    ErdosRenyiDist,
    Example,
    GrabResult,
    GrabSpec,
    GraphDistribution,
    GridDist,
    HexGridDist,
    PathDist,
    RegularDist,
    TreeDist,
    algorithm_dataset,
    builtin_automaton,
    ca_dataset,
    ca_rule_fsa,
    child_rng,
    derive_seed,
    gol_fsa,
    make_grab_dataset,
    path_graph,
    random_fsa,
    sample_graph,
    wireworld_fsa,
)
from .evaluation import (
    EvalReport,
    EvalRow,
    Partition,
    bounded_refinement,
    evaluate,
    evaluate_sizes,
    iteration_stability_sweep,
    node_accuracy,
    partition_refines,
    two_hub_example,
    wl_refinement,
)
from .graph import Graph, bfs_distances, center_node, diameter, is_connected
from .training import (
    SoftStateField,
    SoftTransitionModel,
    TrainConfig,
    TrainingError,
    extract,
    grad,
    loss,
    model_from_fsa,
    one_hot_field,
    rollout,
    soft_step,
    train,
)
from .viz import export_complete_dot, export_partial_dot, render_grid_trace
