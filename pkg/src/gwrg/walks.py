"""Stopped simple random walks inside a ball.

All walks of a batch advance together as numpy arrays. Every walker owns a
counter-based stream key, and step ``t`` of a walker uses draw ``t`` of its
key, so a trajectory does not depend on which other walkers share its batch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .ball import Ball
from .rng import Stream, child_keys, draw_uniform


class ParticleScheme(enum.Enum):
    DEGREE = "degree"
    POISSON = "poisson"


@dataclass(frozen=True)
class WalkTrace:
    start: int
    end: int
    steps: int
    path: np.ndarray | None = None

    def format(self) -> str:
        head = f"{self.start} {self.end} {self.steps}"
        if self.path is None:
            return head
        return head + " " + " ".join(str(p) for p in self.path)


@dataclass
class TraceBatch:
    """Column-oriented collection of traces.

    ``group`` labels the round (or trial) each trace came from and
    ``particle`` its index among the particles launched from ``start``.
    Paths, when recorded, are stored flat: trace ``k`` occupies
    ``path[path_ptr[k]:path_ptr[k + 1]]``.
    """

    start: np.ndarray
    end: np.ndarray
    steps: np.ndarray
    group: np.ndarray
    particle: np.ndarray
    path_ptr: np.ndarray | None = None
    path: np.ndarray | None = None

    def __len__(self):
        return len(self.start)

    def __getitem__(self, k) -> WalkTrace:
        p = None
        if self.path is not None:
            p = self.path[self.path_ptr[k]:self.path_ptr[k + 1]]
        return WalkTrace(int(self.start[k]), int(self.end[k]), int(self.steps[k]), p)

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    @property
    def recorded(self) -> bool:
        return self.path is not None

    def path_owner(self) -> np.ndarray:
        """Trace index of every entry of ``path``."""
        return np.repeat(np.arange(len(self)), np.diff(self.path_ptr))

    def dump(self) -> str:
        return "".join(t.format() + "\n" for t in self)

    @classmethod
    def empty(cls, record=False) -> "TraceBatch":
        z = np.zeros(0, dtype=np.int64)
        if record:
            return cls(z, z, z, z, z, np.zeros(1, dtype=np.int64), z)
        return cls(z, z, z, z, z)


def simulate(ball: Ball, starts, keys, stop_mask, record=False, max_steps=None):
    """Run walkers from ``starts`` until the first time t >= 1 they sit in ``stop_mask``.

    Returns ``(end, steps, path_ptr, path)``; the last two are None unless
    ``record`` is set.
    """
    starts = np.asarray(starts, dtype=np.int64)
    keys = np.asarray(keys, dtype=np.uint64)
    m = len(starts)
    table, deg = ball.nbr_table, ball.deg
    if m and np.any(deg[starts] == 0):
        raise AssertionError("walk started at a vertex with no neighbors in the ball")
    pos = starts.copy()
    steps = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    log = []
    t = 0
    while len(active):
        t += 1
        if max_steps is not None and t > max_steps:
            raise RuntimeError(f"walks exceeded {max_steps} steps")
        cur = pos[active]
        u = draw_uniform(keys[active], t)
        nxt = table[cur, (u * deg[cur]).astype(np.int64)]
        pos[active] = nxt
        if record:
            log.append((active, nxt))
        done = stop_mask[nxt]
        steps[active[done]] = t
        active = active[~done]
    if not record:
        return pos, steps, None, None
    owner = np.concatenate([np.arange(m)] + [a for a, _ in log])
    where = np.concatenate([starts] + [p for _, p in log])
    order = np.argsort(owner, kind="stable")
    ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(steps + 1, out=ptr[1:])
    return pos, steps, ptr, where[order]


def particle_counts(ball: Ball, scheme: ParticleScheme, vertex_keys: np.ndarray,
                    starts: np.ndarray) -> np.ndarray:
    d = ball.deg[starts]
    if scheme is ParticleScheme.DEGREE:
        return d.astype(np.int64)
    u = draw_uniform(vertex_keys, 0)
    return poisson.ppf(u, d).astype(np.int64)


def run_rounds(ball: Ball, scheme: ParticleScheme, round_keys, record=False,
               groups=None) -> TraceBatch:
    """One GWRG round for each key in ``round_keys``.

    Streams: round key -> boundary vertex (ball index) -> particle index.
    Traces come back sorted by (group, start, particle).
    """
    round_keys = np.atleast_1d(np.asarray(round_keys, dtype=np.uint64))
    if groups is None:
        groups = np.arange(len(round_keys))
    groups = np.asarray(groups, dtype=np.int64)
    b = ball.boundary
    g_rep = np.repeat(np.arange(len(round_keys)), len(b))
    starts = np.tile(b, len(round_keys))
    vkeys = child_keys(round_keys[g_rep], starts)
    counts = particle_counts(ball, scheme, vkeys, starts)
    owner = np.repeat(np.arange(len(starts)), counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    particle = np.arange(len(owner)) - first
    pkeys = child_keys(vkeys[owner], particle)
    start = starts[owner]
    end, steps, ptr, path = simulate(ball, start, pkeys, ball.is_boundary, record)
    return TraceBatch(start, end, steps, groups[g_rep[owner]], particle, ptr, path)


def run_round(ball: Ball, scheme: ParticleScheme, stream: Stream, record=False) -> TraceBatch:
    return run_rounds(ball, scheme, np.array([stream.key], dtype=np.uint64), record)


def run_walk(ball: Ball, start: int, stream: Stream, record=False) -> WalkTrace:
    """A single boundary-to-boundary walk driven by ``stream``."""
    if not ball.is_boundary[start]:
        raise ValueError(f"vertex {start} is not on the boundary")
    end, steps, ptr, path = simulate(ball, [start], np.array([stream.key], dtype=np.uint64),
                                     ball.is_boundary, record)
    return WalkTrace(int(start), int(end[0]), int(steps[0]), path)


def visit_counts(traces: TraceBatch, ball: Ball, per_group: int | None = None) -> np.ndarray:
    """Total occupancy of every ball vertex over all traces.

    With ``per_group=k`` the result is a (k, V) table split by trace group.
    """
    if not traces.recorded:
        raise ValueError("visit counts need traces recorded with paths")
    if per_group is None:
        return np.bincount(traces.path, minlength=ball.size)
    g = traces.group[traces.path_owner()]
    flat = np.bincount(g * ball.size + traces.path, minlength=per_group * ball.size)
    return flat.reshape(per_group, ball.size)


def walk_path(ball: Ball, start: int, stream: Stream, max_steps: int, stop_mask=None):
    """Path of one walk from ``start`` for at most ``max_steps`` steps.

    Stops early at the first time >= 1 in ``stop_mask`` (the ball boundary by
    default). Returns ``(path, stopped)``.
    """
    stop_mask = ball.is_boundary if stop_mask is None else stop_mask
    u = draw_uniform(np.array([stream.key], dtype=np.uint64)[0], np.arange(1, max_steps + 1))
    path = [int(start)]
    for t in range(max_steps):
        cur = path[-1]
        nxt = int(ball.nbr_table[cur, int(u[t] * ball.deg[cur])])
        path.append(nxt)
        if stop_mask[nxt]:
            return np.array(path), True
    return np.array(path), False
