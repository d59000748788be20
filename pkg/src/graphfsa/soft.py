"""Distributional (soft) execution primitives on torch tensors.

Node states are relaxed to probability rows over M. Treating node
marginals as independent, the distribution of each node's aggregation
value is computed exactly:

* counting / avg_threshold: dynamic programming over neighbors that
  maintains a distribution over capped count vectors; one neighbor
  update costs O(|Z|·|M|) per node and all nodes advance in lockstep
  (nodes whose degree is exhausted keep their distribution).
* positional: product of per-slot neighbor marginals.

Everything here is pure torch (float64) so gradients flow through the
whole pipeline; numpy callers convert at the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import torch

from .aggregation import (
    AggregationScheme,
    AvgThresholdScheme,
    CountingScheme,
    domain_size,
    enumerate_domain,
)
from .graph import Graph


@lru_cache(maxsize=256)
def _count_step_index(bound: int, num_states: int) -> torch.Tensor:
    """Flat map (z, m) -> z' where z' adds one neighbor in state m, capped.

    Shape (Z*M,), indexing z*M + m, for the counting domain with the
    given bound.
    """
    scheme = CountingScheme(bound)
    vectors = enumerate_domain(scheme, num_states)  # (Z, M)
    weights = (bound + 1) ** np.arange(num_states, dtype=np.int64)
    out = np.zeros((vectors.shape[0], num_states), dtype=np.int64)
    for m in range(num_states):
        bumped = vectors.copy()
        bumped[:, m] = np.minimum(bound, bumped[:, m] + 1)
        out[:, m] = bumped @ weights
    return torch.from_numpy(out.reshape(-1))




@lru_cache(maxsize=256)
def _bits_projection(bound: int, num_states: int, k: int) -> torch.Tensor:
    """Map counting index (cap ``bound``) -> bit-vector index with
    threshold count ``k`` (component >= k sets the bit)."""
    vectors = enumerate_domain(CountingScheme(bound), num_states)
    bits = (vectors >= k).astype(np.int64)
    weights = 2 ** np.arange(num_states, dtype=np.int64)
    return torch.from_numpy(bits @ weights)


def threshold_count(degree: int, tau: float) -> int:
    """Smallest neighbor count whose share of ``degree`` reaches ``tau``.

    Scans the exact predicate used by the hard path so both routes
    agree bit for bit; degree 0 maps to 1 (no bit can ever be set).
    """
    if degree == 0:
        return 1
    for c in range(degree + 1):
        if c / degree >= tau:
            return c
    return degree


@dataclass
class ExecContext:
    """Precomputed tensors for running soft steps on one graph."""

    num_nodes: int
    num_states: int
    scheme: AggregationScheme
    domain: int
    nbr: torch.Tensor  # (n, maxdeg) neighbor ids, -1 padded
    deg: torch.Tensor  # (n,)
    # counting / avg_threshold
    step_index: torch.Tensor | None = None  # flat (Zdp*M,) capped-add map
    dp_domain: int = 0
    proj: torch.Tensor | None = None  # (n, Zdp) avg_threshold projection
    # positional
    slots: torch.Tensor | None = None  # (n, d), -1 empty
    fill_onehot: torch.Tensor | None = None  # (M,)


def build_context(graph: Graph, scheme: AggregationScheme, num_states: int) -> ExecContext:
    z = domain_size(scheme, num_states)
    ctx = ExecContext(
        num_nodes=graph.num_nodes,
        num_states=num_states,
        scheme=scheme,
        domain=z,
        nbr=torch.from_numpy(graph.neighbor_matrix),
        deg=torch.from_numpy(graph.degrees),
    )
    if isinstance(scheme, CountingScheme):
        ctx.step_index = _count_step_index(scheme.b, num_states)
        ctx.dp_domain = z
    elif isinstance(scheme, AvgThresholdScheme):
        ks = np.array([threshold_count(int(d), scheme.tau) for d in graph.degrees])
        k_max = int(ks.max()) if len(ks) else 1
        ctx.step_index = _count_step_index(k_max, num_states)
        ctx.dp_domain = (k_max + 1) ** num_states
        proj = torch.empty((graph.num_nodes, ctx.dp_domain), dtype=torch.int64)
        for k in np.unique(ks):
            rows = torch.from_numpy(np.nonzero(ks == k)[0])
            proj[rows] = _bits_projection(k_max, num_states, int(k))
        ctx.proj = proj
    else:
        ctx.slots = torch.from_numpy(graph.slot_matrix(scheme.d))
        onehot = torch.zeros(num_states, dtype=torch.float64)
        onehot[scheme.fill] = 1.0
        ctx.fill_onehot = onehot
    return ctx


def _counting_dp(ctx: ExecContext, field: torch.Tensor) -> torch.Tensor:
    n = field.shape[0]
    z = ctx.dp_domain
    dist = torch.zeros(n, z, dtype=field.dtype)
    dist[:, 0] = 1.0
    index = ctx.step_index.expand(n, -1)
    rounds = ctx.nbr.shape[1]
    for r in range(rounds):
        neighbor = ctx.nbr[:, r].clamp(min=0)
        p = field[neighbor]  # (n, M)
        contrib = (dist.unsqueeze(2) * p.unsqueeze(1)).reshape(n, -1)
        updated = torch.zeros_like(dist).scatter_add(1, index, contrib)
        active = (ctx.deg > r).unsqueeze(1)
        dist = torch.where(active, updated, dist)
    return dist


def aggregation_distribution(ctx: ExecContext, field: torch.Tensor) -> torch.Tensor:
    """Per-node distribution over the aggregation domain, shape (n, |Z|)."""
    if isinstance(ctx.scheme, CountingScheme):
        return _counting_dp(ctx, field)
    if isinstance(ctx.scheme, AvgThresholdScheme):
        dist = _counting_dp(ctx, field)
        out = torch.zeros(ctx.num_nodes, ctx.domain, dtype=field.dtype)
        return out.scatter_add(1, ctx.proj, dist)
    n, m = field.shape
    valid = (ctx.slots >= 0).unsqueeze(2)
    per_slot = torch.where(valid, field[ctx.slots.clamp(min=0)], ctx.fill_onehot)
    q = torch.ones(n, 1, dtype=field.dtype)
    for s in range(ctx.scheme.d):
        q = (per_slot[:, s, :].unsqueeze(2) * q.unsqueeze(1)).reshape(n, -1)
    return q


def flat_transition(transition: torch.Tensor) -> torch.Tensor:
    """(M, Z, M) row-stochastic tensor reshaped to (Z, M*M) for fast steps."""
    m = transition.shape[0]
    return transition.permute(1, 0, 2).reshape(transition.shape[1], m * m)


def soft_step(
    ctx: ExecContext,
    transition: torch.Tensor,
    field: torch.Tensor,
    transition_flat: torch.Tensor | None = None,
) -> torch.Tensor:
    """One synchronous relaxed update.

    ``transition`` is the row-stochastic tensor (M, |Z|, M); the new row
    of node v is sum over (own state, aggregation value) of
    field[v, m1] * Q[v, a] * transition[m1, a, m2].
    """
    q = aggregation_distribution(ctx, field)
    if transition_flat is None:
        transition_flat = flat_transition(transition)
    n, m = field.shape
    per_state = (q @ transition_flat).view(n, m, m)  # (n, own state, next)
    return torch.bmm(field.unsqueeze(1), per_state).squeeze(1)


def one_hot(states: np.ndarray, num_states: int) -> torch.Tensor:
    eye = torch.eye(num_states, dtype=torch.float64)
    return eye[torch.from_numpy(np.asarray(states, dtype=np.int64))]


def aggregate_distributions(
    scheme: AggregationScheme, graph: Graph, soft_states: np.ndarray, num_states: int
) -> np.ndarray:
    """Numpy boundary for :func:`aggregation_distribution`."""
    ctx = build_context(graph, scheme, num_states)
    field = torch.from_numpy(np.ascontiguousarray(soft_states, dtype=np.float64))
    with torch.no_grad():
        dist = aggregation_distribution(ctx, field)
    return dist.numpy()
