"""Observables of GWRG samples: isolation, components, diameters, connectivity times."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .ball import Ball
from .rng import child_keys
from .sampler import GwrgState, advance_round, new_state
from .walks import ParticleScheme, run_rounds


class UnionFind:
    """Union-find with path halving and union by size."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size
        self.count = size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.count -= 1
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for v in range(len(self.parent)):
            out.setdefault(self.find(v), []).append(v)
        return list(out.values())


@dataclass(frozen=True)
class SampleStats:
    n: int
    i: int
    boundary_size: int
    isolated: int
    components: int
    largest_size: int
    diameter: int


@dataclass(frozen=True)
class ConnectivityTimes:
    """First rounds at which R^i_n is connected (``tau``) and free of isolated
    vertices (``tau_star``). Censored values equal the cap."""

    tau: int
    tau_star: int
    censored: bool = False


def _adjacency(num: int, edges) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(num)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return adj


def _bfs(adj, src) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def component_diameter(adj, component) -> int:
    """Exact diameter by BFS from every vertex, cross-checked against a double sweep."""
    if len(component) <= 1:
        return 0
    far = _bfs(adj, component[0])
    u = max(far, key=lambda k: (far[k], -k))
    sweep = max(_bfs(adj, u).values())
    diam = max(max(_bfs(adj, s).values()) for s in component)
    assert sweep <= diam, "double sweep exceeded the exact diameter"
    return diam


def graph_stats(num: int, edges, n: int = 0, i: int = 0) -> SampleStats:
    """Statistics of the simple graph on ``range(num)``; self-loops are ignored."""
    edges = [(u, v) for u, v in edges if u != v]
    uf = UnionFind(num)
    touched = [False] * num
    for u, v in edges:
        uf.union(u, v)
        touched[u] = touched[v] = True
    if num == 0:
        return SampleStats(n, i, 0, 0, 0, 0, 0)
    comps = uf.groups()
    largest = min(comps, key=lambda c: (-len(c), min(c)))
    largest.sort()
    diam = component_diameter(_adjacency(num, edges), largest)
    return SampleStats(n, i, num, touched.count(False), uf.count, len(largest), diam)


def compute_stats(state: GwrgState) -> SampleStats:
    return graph_stats(state.num_vertices, sorted(state.simple_edges),
                       state.ball.n, state.rounds_done)


def connectivity_times(ball: Ball, scheme: ParticleScheme, stream, i_cap: int) -> ConnectivityTimes:
    """Advance one trial round by round until R^i_n is connected or ``i_cap`` is hit."""
    if i_cap < 1:
        raise ValueError("i_cap must be >= 1")
    num = len(ball.boundary)
    state = new_state(ball, stream, scheme)
    uf = UnionFind(num)
    touched = np.zeros(num, dtype=bool)
    tau_star = None
    while state.rounds_done < i_cap:
        before = state.edges
        state = advance_round(state)
        for (u, v) in state.edges.keys() - before.keys():
            if u != v:
                uf.union(u, v)
                touched[u] = touched[v] = True
        if tau_star is None and (touched.all() or num == 1):
            tau_star = state.rounds_done
        if uf.count == 1:
            return ConnectivityTimes(state.rounds_done, tau_star, False)
    return ConnectivityTimes(i_cap, tau_star if tau_star is not None else i_cap, True)


def connectivity_campaign(ball: Ball, scheme: ParticleScheme, trial_keys, i_cap: int):
    """Vectorized :func:`connectivity_times` over many trials.

    All unfinished trials advance one round together; components are tracked
    by relabelling with ``scipy.sparse.csgraph`` on the disjoint union of the
    trial graphs. Returns arrays ``(tau, tau_star, censored)``.
    """
    trial_keys = np.asarray(trial_keys, dtype=np.uint64)
    T, B = len(trial_keys), len(ball.boundary)
    N = T * B
    rep = np.arange(N)
    touched = np.zeros(N, dtype=bool)
    tau = np.zeros(T, dtype=np.int64)
    tau_star = np.zeros(T, dtype=np.int64)
    active = np.arange(T)
    pos = ball.boundary_pos
    r = 0
    while len(active) and r < i_cap:
        r += 1
        traces = run_rounds(ball, scheme, child_keys(trial_keys[active], r), groups=active)
        u = traces.group * B + pos[traces.start]
        v = traces.group * B + pos[traces.end]
        keep = u != v
        u, v = u[keep], v[keep]
        touched[u] = touched[v] = True
        g = sp.coo_matrix((np.ones(N + len(u)), (np.r_[np.arange(N), u], np.r_[rep, v])),
                          shape=(N, N))
        ncomp, labels = connected_components(g, directed=False)
        first = np.full(ncomp, N)
        np.minimum.at(first, labels, np.arange(N))
        rep = first[labels]
        per_trial = np.bincount(first // B, minlength=T)
        no_iso = touched.reshape(T, B).all(axis=1) | (B == 1)
        newly_star = active[(tau_star[active] == 0) & no_iso[active]]
        tau_star[newly_star] = r
        done = per_trial[active] == 1
        tau[active[done]] = r
        active = active[~done]
    censored = np.zeros(T, dtype=bool)
    censored[active] = True
    tau[active] = i_cap
    tau_star[tau_star == 0] = i_cap
    return tau, tau_star, censored


def stats_campaign(ball: Ball, scheme: ParticleScheme, trial_keys, rounds: int) -> list[SampleStats]:
    """:func:`compute_stats` of R^rounds_n for each trial key, rounds simulated in bulk.

    Trial ``k`` uses the same streams as ``sample_gwrg(ball, rounds, Stream(_key=key_k))``.
    """
    trial_keys = np.asarray(trial_keys, dtype=np.uint64)
    T, B = len(trial_keys), len(ball.boundary)
    pos = ball.boundary_pos
    parts = []
    for r in range(1, rounds + 1):
        tr = run_rounds(ball, scheme, child_keys(trial_keys, r))
        parts.append(np.column_stack([tr.group, pos[tr.start], pos[tr.end]]))
    e = np.concatenate(parts) if parts else np.zeros((0, 3), dtype=np.int64)
    e = e[e[:, 1] != e[:, 2]]
    e[:, 1:] = np.sort(e[:, 1:], axis=1)
    e = np.unique(e, axis=0)
    cuts = np.searchsorted(e[:, 0], np.arange(T + 1))
    return [graph_stats(B, e[cuts[k]:cuts[k + 1], 1:].tolist(), ball.n, rounds) for k in range(T)]


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    adj_r2: float
    slope_se: float
    intercept_se: float
    points: int


def linear_fit(points) -> LinearFit:
    """Ordinary least squares with adjusted R^2 = 1 - (1 - R^2)(m - 1)/(m - 2)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    m = len(pts)
    if m < 3:
        raise ValueError("linear fit needs at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx <= 1e-12 * max(1.0, np.sum(x ** 2)):
        raise ValueError("x values are degenerate")
    slope = np.sum((x - x.mean()) * (y - y.mean())) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = y - (slope * x + intercept)
    sse = float(np.sum(resid ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else 1.0
    adj = 1.0 - (1.0 - r2) * (m - 1) / (m - 2)
    s2 = sse / (m - 2)
    slope_se = float(np.sqrt(s2 / sxx))
    intercept_se = float(np.sqrt(s2 * (1.0 / m + x.mean() ** 2 / sxx)))
    return LinearFit(float(slope), float(intercept), float(adj), slope_se, intercept_se, m)
