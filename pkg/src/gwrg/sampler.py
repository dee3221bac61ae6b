"""Group-walk random graphs R^i_n assembled from walk traces."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .ball import Ball
from .rng import Stream
from .walks import ParticleScheme, TraceBatch, run_round


@dataclass(frozen=True)
class GwrgState:
    """Edge multiset of R^i_n on the boundary, in boundary-position space.

    Keys of ``edges`` are pairs ``(u, v)`` with ``u <= v``; ``u == v`` is a
    self-loop left by a walk that returned to its own start.
    """

    ball: Ball
    stream: Stream
    scheme: ParticleScheme = ParticleScheme.DEGREE
    rounds_done: int = 0
    edges: Counter = field(default_factory=Counter)

    @property
    def num_vertices(self) -> int:
        return len(self.ball.boundary)

    @property
    def simple_edges(self) -> set[tuple[int, int]]:
        return {e for e in self.edges if e[0] != e[1]}

    def total_multiplicity(self) -> int:
        return sum(self.edges.values())

    def edge_list(self, seed=None) -> str:
        head = (f"# host={self.ball.host.name} n={self.ball.n} i={self.rounds_done} "
                f"seed={seed if seed is not None else f'0x{self.stream.key:016x}'}\n")
        return head + "".join(f"{u} {v} {m}\n" for (u, v), m in sorted(self.edges.items()))


def new_state(ball: Ball, stream: Stream, scheme=ParticleScheme.DEGREE) -> GwrgState:
    return GwrgState(ball, stream, scheme)


def trace_edges(ball: Ball, traces: TraceBatch) -> np.ndarray:
    """Unordered (u, v) pairs in boundary-position space, u <= v, one per trace."""
    a = ball.boundary_pos[traces.start]
    b = ball.boundary_pos[traces.end]
    return np.column_stack([np.minimum(a, b), np.maximum(a, b)])


def advance_round(state: GwrgState, scheme: ParticleScheme | None = None,
                  stream: Stream | None = None) -> GwrgState:
    """Union with one more independent R^1_n; round ``i`` uses ``stream.child(i)``."""
    scheme = scheme or state.scheme
    stream = stream or state.stream
    r = state.rounds_done + 1
    traces = run_round(state.ball, scheme, stream.child(r))
    edges = Counter(state.edges)
    edges.update(map(tuple, trace_edges(state.ball, traces).tolist()))
    return GwrgState(state.ball, stream, scheme, r, edges)


def sample_gwrg(ball: Ball, rounds: int, stream: Stream, scheme=ParticleScheme.DEGREE) -> GwrgState:
    state = new_state(ball, stream, scheme)
    for _ in range(rounds):
        state = advance_round(state)
    return state


def _boundary_mask(ball: Ball, subset) -> np.ndarray:
    """Convert a set of ball indices (or a boolean mask over the ball) to a
    mask over boundary positions."""
    subset = np.asarray(subset)
    if subset.dtype == bool:
        if subset.shape != (ball.size,):
            raise ValueError("boolean subset must cover the whole ball")
        if np.any(subset & ~ball.is_boundary):
            raise ValueError("subset contains non-boundary vertices")
        return subset[ball.boundary]
    subset = subset.astype(np.int64)
    if np.any((subset < 0) | (subset >= ball.size)) or not np.all(ball.is_boundary[subset]):
        raise ValueError("subset contains non-boundary vertices")
    mask = np.zeros(len(ball.boundary), dtype=bool)
    mask[ball.boundary_pos[subset]] = True
    return mask


def _crossing_weights(u, v, x, y):
    return (x[u] & y[v]) | (y[u] & x[v])


def crossing_count(obj, X, Y, simple: bool = False, ball: Ball | None = None) -> int:
    """Edges with one end in X and the other in Y (an edge inside X and Y counts once).

    ``obj`` is a :class:`GwrgState` or a :class:`TraceBatch` (then ``ball`` is
    required). Multiset edges are counted unless ``simple`` is set.
    """
    if isinstance(obj, GwrgState):
        ball = obj.ball
        items = obj.edges.items()
        if simple:
            items = [(e, 1) for e in obj.simple_edges]
        if not items:
            return 0
        pairs = np.array([e for e, _ in items], dtype=np.int64)
        mult = np.array([m for _, m in items], dtype=np.int64)
    else:
        if ball is None:
            raise ValueError("ball required when counting crossings of raw traces")
        pairs = trace_edges(ball, obj)
        if simple:
            pairs = np.unique(pairs[pairs[:, 0] != pairs[:, 1]], axis=0)
        mult = np.ones(len(pairs), dtype=np.int64)
    x, y = _boundary_mask(ball, X), _boundary_mask(ball, Y)
    if len(pairs) == 0:
        return 0
    hit = _crossing_weights(pairs[:, 0], pairs[:, 1], x, y)
    return int(mult[hit].sum())


def crossing_counts_by_group(ball: Ball, traces: TraceBatch, X, Y, groups: int) -> np.ndarray:
    """Multiset crossing count of each trace group (e.g. one group per trial)."""
    x, y = _boundary_mask(ball, X), _boundary_mask(ball, Y)
    a, b = ball.boundary_pos[traces.start], ball.boundary_pos[traces.end]
    hit = _crossing_weights(a, b, x, y)
    return np.bincount(traces.group[hit], minlength=groups)
