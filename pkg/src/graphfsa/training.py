"""Learning transition tables from input/output state pairs.

The discrete table is relaxed to a row-stochastic tensor (softmax over
free logits of shape M x |Z| x M). A relaxed rollout pushes per-node
state distributions through the exact aggregation-value distributions,
an L2 data loss compares the final field against one-hot targets, and
an L1 penalty discourages probability mass that leaves final states.
After training the table is recovered by per-row argmax.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from . import soft
from .aggregation import (
    AggregationScheme,
    AvgThresholdScheme,
    CountingScheme,
    PositionalScheme,
    domain_size,
)
from .automaton import GraphFSA
from .datasets import Dataset, Example
from .graph import Graph

SoftStateField = np.ndarray  # (num_nodes, num_states) probability rows


class TrainingError(RuntimeError):
    """Raised when optimization cannot continue (for example a
    non-finite loss)."""


@dataclass
class SoftTransitionModel:
    """Probabilistic transition tensor plus the automaton's metadata.

    ``logits`` has shape (num_states, |Z|, num_states); softmax over the
    last axis yields the transition probabilities.
    """

    logits: torch.Tensor
    num_states: int
    scheme: AggregationScheme
    starting_states: frozenset[int]
    final_states: frozenset[int]

    def __post_init__(self):
        z = domain_size(self.scheme, self.num_states)
        expected = (self.num_states, z, self.num_states)
        if tuple(self.logits.shape) != expected:
            raise ValueError(f"logits must have shape {expected}")
        self.logits = self.logits.to(torch.float64)
        self.starting_states = frozenset(int(s) for s in self.starting_states)
        self.final_states = frozenset(int(s) for s in self.final_states)

    @property
    def domain(self) -> int:
        return domain_size(self.scheme, self.num_states)

    def probabilities(self) -> torch.Tensor:
        return torch.softmax(self.logits, dim=-1)

    def probabilities_array(self) -> np.ndarray:
        with torch.no_grad():
            return self.probabilities().numpy()


def model_from_fsa(fsa: GraphFSA, sharpness: float = 60.0) -> SoftTransitionModel:
    """Delta-row model whose argmax reproduces the discrete table."""
    z = fsa.domain
    logits = np.zeros((fsa.num_states, z, fsa.num_states))
    table = fsa.table.reshape(fsa.num_states, z)
    for m in range(fsa.num_states):
        for a in range(z):
            logits[m, a, table[m, a]] = sharpness
    return SoftTransitionModel(
        torch.from_numpy(logits),
        fsa.num_states,
        fsa.scheme,
        fsa.starting_states,
        fsa.final_states,
    )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 2000
    batch_size: int = 32
    iteration_offset_max: int = 3
    final_state_penalty: float = 0.1
    seed: int = 0
    optimizer: str = "adam"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    logit_init_scale: float = 0.1
    stop_loss: Optional[float] = None  # end early once the epoch loss dips below
    # "full" scores the whole distribution against the one-hot target;
    # "final" scores only the final-state coordinates, which prices an
    # undecided node at half a wrong commitment and is what makes
    # wave-style solutions reachable on final-state prediction tasks
    data_loss: str = "full"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")
        if self.iteration_offset_max < 0 or self.final_state_penalty < 0:
            raise ValueError("offset max and penalty weight must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.data_loss not in ("full", "final"):
            raise ValueError("data_loss must be 'full' or 'final'")


# ---------------------------------------------------------------------------
# relaxed execution (public, numpy boundary)

def one_hot_field(states: np.ndarray, num_states: int) -> SoftStateField:
    field = np.zeros((len(states), num_states))
    field[np.arange(len(states)), np.asarray(states, dtype=np.int64)] = 1.0
    return field


def _check_field(field: np.ndarray, num_states: int) -> np.ndarray:
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2 or field.shape[1] != num_states:
        raise ValueError("field must have shape (num_nodes, num_states)")
    if (field < 0).any() or (np.abs(field.sum(axis=1) - 1.0) > 1e-9).any():
        raise ValueError("field rows must be distributions (nonnegative, sum 1)")
    return field


def soft_step(model: SoftTransitionModel, graph: Graph, field: SoftStateField) -> SoftStateField:
    """One relaxed synchronous update of all node distributions."""
    field = _check_field(field, model.num_states)
    if field.shape[0] != graph.num_nodes:
        raise ValueError("one distribution row per node required")
    ctx = soft.build_context(graph, model.scheme, model.num_states)
    with torch.no_grad():
        out = soft.soft_step(ctx, model.probabilities(), torch.from_numpy(field))
    result = out.numpy()
    sums = result.sum(axis=1)
    assert np.abs(sums - 1.0).max() <= 1e-9, "probability mass not conserved"
    return result


def rollout(model: SoftTransitionModel, graph: Graph, inputs: np.ndarray, steps: int) -> SoftStateField:
    """One-hot encode the inputs and apply ``soft_step`` ``steps`` times."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    inputs = np.asarray(inputs, dtype=np.int64)
    if inputs.shape != (graph.num_nodes,):
        raise ValueError("one input state per node required")
    if (inputs < 0).any() or (inputs >= model.num_states).any():
        raise ValueError("input state out of range")
    ctx = soft.build_context(graph, model.scheme, model.num_states)
    field = soft.one_hot(inputs, model.num_states)
    transition = model.probabilities()
    with torch.no_grad():
        for _ in range(steps):
            field = soft.soft_step(ctx, transition, field)
    return field.numpy()


def _penalty_term(probabilities: torch.Tensor, final_states: frozenset[int]) -> torch.Tensor:
    """Total probability of leaving any final state, over all rows."""
    total = probabilities.new_zeros(())
    for f in sorted(final_states):
        row = probabilities[f]  # (Z, M)
        total = total + row.sum() - row[:, f].sum()
    return total


def loss(
    model: SoftTransitionModel,
    field: SoftStateField,
    targets: np.ndarray,
    penalty_weight: float,
) -> float:
    """Mean squared distance to one-hot targets plus the leave-final penalty."""
    field = _check_field(field, model.num_states)
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape != (field.shape[0],):
        raise ValueError("targets must align with the field")
    target_field = one_hot_field(targets, model.num_states)
    data = float(np.mean(np.sum((field - target_field) ** 2, axis=1)))
    with torch.no_grad():
        pen = float(_penalty_term(model.probabilities(), model.final_states))
    return data + penalty_weight * pen


# ---------------------------------------------------------------------------
# batched execution over disjoint unions

@dataclass
class _Prepared:
    num_nodes: int
    steps: int
    nbr: np.ndarray  # (n, maxdeg) -1 padded
    deg: np.ndarray
    slots: Optional[np.ndarray]  # (n, d) for positional
    ks: Optional[np.ndarray]  # threshold counts for avg_threshold
    inputs: np.ndarray
    targets: np.ndarray


def _prepare_example(ex: Example, scheme: AggregationScheme, num_states: int) -> _Prepared:
    if (ex.inputs >= num_states).any() or (ex.targets >= num_states).any():
        raise ValueError("example uses states outside the model")
    g = ex.graph
    slots = g.slot_matrix(scheme.d) if isinstance(scheme, PositionalScheme) else None
    ks = None
    if isinstance(scheme, AvgThresholdScheme):
        ks = np.array([soft.threshold_count(int(d), scheme.tau) for d in g.degrees])
    return _Prepared(g.num_nodes, ex.steps, g.neighbor_matrix, g.degrees, slots, ks, ex.inputs, ex.targets)


def _union_context(
    batch: Sequence[_Prepared], scheme: AggregationScheme, num_states: int
) -> Tuple[soft.ExecContext, List[int]]:
    """Stack a batch of graphs into one block-diagonal execution context."""
    total = sum(p.num_nodes for p in batch)
    maxdeg = max(p.nbr.shape[1] for p in batch)
    nbr = np.full((total, maxdeg), -1, dtype=np.int64)
    deg = np.zeros(total, dtype=np.int64)
    bases: List[int] = []
    base = 0
    for p in batch:
        bases.append(base)
        n, w = p.nbr.shape
        block = p.nbr.copy()
        block[block >= 0] += base
        nbr[base : base + n, :w] = block
        deg[base : base + n] = p.deg
        base += n
    z = domain_size(scheme, num_states)
    ctx = soft.ExecContext(
        num_nodes=total,
        num_states=num_states,
        scheme=scheme,
        domain=z,
        nbr=torch.from_numpy(nbr),
        deg=torch.from_numpy(deg),
    )
    if isinstance(scheme, CountingScheme):
        ctx.step_index = soft._count_step_index(scheme.b, num_states)
        ctx.dp_domain = z
    elif isinstance(scheme, AvgThresholdScheme):
        ks = np.concatenate([p.ks for p in batch])
        k_max = int(ks.max()) if len(ks) else 1
        ctx.step_index = soft._count_step_index(k_max, num_states)
        ctx.dp_domain = (k_max + 1) ** num_states
        proj = torch.empty((total, ctx.dp_domain), dtype=torch.int64)
        for k in np.unique(ks):
            rows = torch.from_numpy(np.nonzero(ks == k)[0])
            proj[rows] = soft._bits_projection(k_max, num_states, int(k))
        ctx.proj = proj
    else:
        slots = np.full((total, scheme.d), -1, dtype=np.int64)
        for p, b in zip(batch, bases):
            block = p.slots.copy()
            block[block >= 0] += b
            slots[b : b + p.num_nodes] = block
        ctx.slots = torch.from_numpy(slots)
        onehot = torch.zeros(num_states, dtype=torch.float64)
        onehot[scheme.fill] = 1.0
        ctx.fill_onehot = onehot
    return ctx, bases


def _batch_loss(
    logits: torch.Tensor,
    batch: Sequence[_Prepared],
    scheme: AggregationScheme,
    num_states: int,
    final_states: frozenset[int],
    penalty_weight: float,
    offset: int = 0,
    data_loss: str = "full",
) -> torch.Tensor:
    """Mean per-example data loss plus the penalty, differentiable in logits."""
    ctx, bases = _union_context(batch, scheme, num_states)
    transition = torch.softmax(logits, dim=-1)
    transition_flat = soft.flat_transition(transition)
    steps_needed = [p.steps + offset for p in batch]
    max_t = max(steps_needed)
    field = soft.one_hot(np.concatenate([p.inputs for p in batch]), num_states)
    snapshots = [field]
    for _ in range(max_t):
        field = soft.soft_step(ctx, transition, field, transition_flat)
        snapshots.append(field)
    target_field = soft.one_hot(np.concatenate([p.targets for p in batch]), num_states)
    coords = sorted(final_states) if (data_loss == "final" and final_states) else None
    data = logits.new_zeros(())
    for p, base, t in zip(batch, bases, steps_needed):
        rows = slice(base, base + p.num_nodes)
        diff = snapshots[t][rows] - target_field[rows]
        if coords is not None:
            diff = diff[:, coords]
        data = data + diff.pow(2).sum(dim=1).mean()
    data = data / len(batch)
    if final_states and penalty_weight > 0:
        data = data + penalty_weight * _penalty_term(transition, final_states)
    return data


def grad(
    model: SoftTransitionModel, batch: Sequence[Example], penalty_weight: float
) -> np.ndarray:
    """Exact gradient of the mean batch loss with respect to the logits."""
    if not batch:
        raise ValueError("batch must be nonempty")
    prepared = [_prepare_example(ex, model.scheme, model.num_states) for ex in batch]
    logits = model.logits.detach().clone().requires_grad_(True)
    value = _batch_loss(
        logits, prepared, model.scheme, model.num_states, model.final_states, penalty_weight
    )
    if not value.requires_grad:
        # loss does not depend on the logits (e.g. zero-step batch, no penalty)
        return np.zeros(logits.shape)
    value.backward()
    return logits.grad.numpy().copy()


def batch_loss_value(
    model: SoftTransitionModel, batch: Sequence[Example], penalty_weight: float
) -> float:
    """Mean batch loss at the model's current logits (no gradient)."""
    prepared = [_prepare_example(ex, model.scheme, model.num_states) for ex in batch]
    with torch.no_grad():
        value = _batch_loss(
            model.logits, prepared, model.scheme, model.num_states, model.final_states, penalty_weight
        )
    return float(value)


# ---------------------------------------------------------------------------
# optimization

def train(
    dataset: Dataset,
    config: TrainConfig,
    num_states: int,
    scheme: AggregationScheme,
    starting_states: Sequence[int],
    final_states: Sequence[int] = (),
) -> Tuple[SoftTransitionModel, List[float]]:
    """Minibatch gradient descent on the relaxed rollout loss.

    Per batch, every example runs for its own recorded step count plus
    one shared random offset in [0, iteration_offset_max]. Returns the
    trained model and the mean loss per epoch. Deterministic per seed.
    """
    if not dataset:
        raise ValueError("dataset must be nonempty")
    z = domain_size(scheme, num_states)
    rng = np.random.default_rng(config.seed)
    logits = torch.tensor(
        rng.normal(0.0, config.logit_init_scale, size=(num_states, z, num_states)),
        dtype=torch.float64,
        requires_grad=True,
    )
    if config.optimizer == "adam":
        opt = torch.optim.Adam(
            [logits],
            lr=config.learning_rate,
            betas=(config.adam_beta1, config.adam_beta2),
            eps=config.adam_eps,
        )
    else:
        opt = torch.optim.SGD([logits], lr=config.learning_rate)
    prepared = [_prepare_example(ex, scheme, num_states) for ex in dataset]
    finals = frozenset(int(s) for s in final_states)
    history: List[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(prepared))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = [prepared[i] for i in idx]
            offset = int(rng.integers(0, config.iteration_offset_max + 1))
            value = _batch_loss(
                logits, batch, scheme, num_states, finals,
                config.final_state_penalty, offset, config.data_loss,
            )
            if not torch.isfinite(value):
                raise TrainingError(
                    f"non-finite loss {value.item()} at epoch {epoch}; "
                    "lower the learning rate or the init scale"
                )
            if value.requires_grad:
                opt.zero_grad()
                value.backward()
                opt.step()
            epoch_loss += value.item() * len(batch)
        epoch_loss /= len(prepared)
        history.append(epoch_loss)
        if config.stop_loss is not None and epoch_loss < config.stop_loss:
            break
    model = SoftTransitionModel(
        logits.detach(), num_states, scheme, frozenset(int(s) for s in starting_states), finals
    )
    return model, history


def extract(model: SoftTransitionModel, clamp_final: bool = True) -> GraphFSA:
    """Most likely next state per row; ties resolve to the smallest index.

    With ``clamp_final`` (default) final rows are overwritten with
    self-loops so the result always validates.
    """
    probs = model.probabilities_array()
    table = np.argmax(probs, axis=-1).astype(np.int64).reshape(-1)
    z = model.domain
    if clamp_final:
        for f in sorted(model.final_states):
            table[f * z : (f + 1) * z] = f
    return GraphFSA(
        model.num_states, model.starting_states, model.final_states, model.scheme, table
    )
