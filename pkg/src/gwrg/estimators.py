"""Monte Carlo estimators of boundary quantities, each with an exact counterpart.

Monte Carlo results come back as :class:`EstimateRecord`; the exact values
come from :mod:`gwrg.oracle` on the same ball.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .ball import Ball, UnsupportedHost, branch_mask, build_ball
from .host import (HostGraph, LamplighterState, LatticePoint, TreeWord, Vertex,
                   parse_vertex, serialize_vertex)
from .rng import Stream, child_keys, draw_uniform, trial_keys
from .sampler import crossing_counts_by_group
from .walks import ParticleScheme, TraceBatch, run_rounds, simulate, walk_path

# walkers per vectorized batch; bounds peak memory only
CHUNK_WALKERS = 400_000


@dataclass(frozen=True)
class EstimateRecord:
    quantity: str
    params: str
    estimate: float
    stderr: float
    trials: int
    seed: int
    host: str = ""
    n: int = 0
    note: str = ""

    @classmethod
    def from_samples(cls, quantity, params, samples, seed, host="", n=0, note=""):
        samples = np.asarray(samples, dtype=float)
        if len(samples) < 2:
            raise ValueError("an estimate needs at least 2 trials")
        se = float(samples.std(ddof=1) / np.sqrt(len(samples)))
        return cls(quantity, params, float(samples.mean()), se, len(samples), seed, host, n, note)

    def row(self) -> dict:
        return {"quantity": self.quantity, "host": self.host, "n": self.n,
                "params": self.params, "estimate": self.estimate, "stderr": self.stderr,
                "trials": self.trials, "seed": self.seed}

    def agrees(self, exact: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - exact) <= sigmas * self.stderr + 1e-12


def _chunks(total: int, per_item: int):
    step = max(1, CHUNK_WALKERS // max(per_item, 1))
    for lo in range(0, total, step):
        yield lo, min(total, lo + step)


# -- boundary-set rules -------------------------------------------------------

class BoundaryRule:
    """Selects a subset of the boundary of a ball; ``mask`` covers all ball vertices."""

    text = "?"

    def mask(self, ball: Ball) -> np.ndarray:
        keep = np.array([self.contains(ball, v) for v in ball.vertices], dtype=bool)
        return keep & ball.is_boundary

    def contains(self, ball: Ball, v: Vertex) -> bool:
        raise NotImplementedError

    def __str__(self):
        return self.text


class Branch(BoundaryRule):
    """Component of ``G - uv`` containing ``v`` (tree hosts only)."""

    def __init__(self, u: Vertex, v: Vertex):
        self.u, self.v = u, v
        self.text = f"branch:{serialize_vertex(u)}|{serialize_vertex(v)}"

    def mask(self, ball):
        return branch_mask(ball, (self.u, self.v)) & ball.is_boundary


class CoordSign(BoundaryRule):
    def __init__(self, axis: int, positive: bool):
        self.axis, self.positive = axis, positive
        self.text = f"coord:{axis}:{'+' if positive else '-'}"

    def contains(self, ball, v):
        if not isinstance(v, LatticePoint):
            raise UnsupportedHost(f"coordinate rules need a grid host, not {ball.host.name}")
        c = v.coords[self.axis]
        return c > 0 if self.positive else c < 0


class LampRule(BoundaryRule):
    def __init__(self, position: int, on: bool):
        self.position, self.on = position, on
        self.text = f"lamp:{position}:{'on' if on else 'off'}"

    def contains(self, ball, v):
        if not isinstance(v, LamplighterState):
            raise UnsupportedHost(f"lamp rules need the lamplighter host, not {ball.host.name}")
        return (self.position in v.lamps) == self.on


class PositionSign(BoundaryRule):
    def __init__(self, positive: bool):
        self.positive = positive
        self.text = f"pos:{'+' if positive else '-'}"

    def contains(self, ball, v):
        if not isinstance(v, LamplighterState):
            raise UnsupportedHost(f"position rules need the lamplighter host, not {ball.host.name}")
        return v.pos > 0 if self.positive else v.pos < 0


class Predicate(BoundaryRule):
    def __init__(self, fn: Callable[[Vertex], bool], text="predicate"):
        self.fn, self.text = fn, text

    def contains(self, ball, v):
        return bool(self.fn(v))


class Everything(BoundaryRule):
    text = "all"

    def mask(self, ball):
        return ball.is_boundary.copy()


class Nothing(BoundaryRule):
    text = "none"

    def mask(self, ball):
        return np.zeros(ball.size, dtype=bool)


def parse_rule(text: str) -> BoundaryRule:
    """``branch:<u>|<v>``, ``coord:<axis>:+|-``, ``lamp:<k>:on|off``, ``pos:+|-``, ``all``, ``none``."""
    text = text.strip()
    if text == "all":
        return Everything()
    if text == "none":
        return Nothing()
    if text.startswith("branch:"):
        u, _, v = text[len("branch:"):].partition("|")
        return Branch(parse_vertex(u), parse_vertex(v))
    if m := re.fullmatch(r"coord:(\d+):([+-])", text):
        return CoordSign(int(m.group(1)), m.group(2) == "+")
    if m := re.fullmatch(r"lamp:(-?\d+):(on|off)", text):
        return LampRule(int(m.group(1)), m.group(2) == "on")
    if m := re.fullmatch(r"pos:([+-])", text):
        return PositionSign(m.group(1) == "+")
    raise ValueError(f"cannot parse boundary rule {text!r}")


# -- crossings ----------------------------------------------------------------

def crossing_samples(ball: Ball, x_mask, y_mask, rounds: int, keys,
                     scheme=ParticleScheme.DEGREE) -> np.ndarray:
    """Multiset crossing count of R^rounds_n for each trial key."""
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.zeros(len(keys), dtype=np.int64)
    if not x_mask.any() or not y_mask.any():
        return out
    per = int(ball.deg[ball.boundary].sum()) * rounds
    for lo, hi in _chunks(len(keys), per):
        for r in range(1, rounds + 1):
            tr = run_rounds(ball, scheme, child_keys(keys[lo:hi], r))
            out[lo:hi] += crossing_counts_by_group(ball, tr, x_mask, y_mask, hi - lo)
    return out


@dataclass(frozen=True)
class CrossingPoint:
    n: int
    estimate: float
    stderr: float
    trials: int
    exact: float | None


@dataclass
class CrossingCurve:
    x_rule: str
    y_rule: str
    rounds: int
    points: list[CrossingPoint] = field(default_factory=list)


def crossing_curve(host: HostGraph, x_rule: BoundaryRule, y_rule: BoundaryRule,
                   n_range: Sequence[int], rounds: int = 1, trials: int = 1000,
                   seed: int = 0, scheme=ParticleScheme.DEGREE, exact: bool = True,
                   monte_carlo: bool = True) -> CrossingCurve:
    """Expected crossing counts between two boundary sets as a function of n."""
    curve = CrossingCurve(str(x_rule), str(y_rule), rounds)
    for n in n_range:
        ball = build_ball(host, n)
        xm, ym = x_rule.mask(ball), y_rule.mask(ball)
        # Poisson counts have the same mean as the degree scheme
        ex = oracle.expected_crossings(ball, xm, ym, rounds) if exact else None
        if monte_carlo:
            keys = trial_keys(seed, "crossings", n, trials)
            s = crossing_samples(ball, xm, ym, rounds, keys, scheme)
            se = float(s.std(ddof=1) / np.sqrt(trials)) if trials > 1 else float("nan")
            curve.points.append(CrossingPoint(n, float(s.mean()), se, trials, ex))
        else:
            curve.points.append(CrossingPoint(n, float("nan"), float("nan"), 0, ex))
    return curve


# -- Green function, Naim and Martin kernels ----------------------------------

def _kill_mask(ball: Ball, kill) -> np.ndarray:
    if kill is None:
        return ball.is_boundary
    m = np.zeros(ball.size, dtype=bool)
    m[np.asarray(kill, dtype=np.int64)] = True
    return m


def green_samples(ball: Ball, x: int, y: int, keys, kill=None) -> np.ndarray:
    """Visits to ``y`` (time 0 included) by walks from ``x`` absorbed on ``kill``."""
    km = _kill_mask(ball, kill)
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.zeros(len(keys), dtype=np.int64)
    if km[x] or km[y]:
        return out
    for lo, hi in _chunks(len(keys), 1):
        _, _, ptr, path = simulate(ball, np.full(hi - lo, x), keys[lo:hi], km, record=True)
        owner = np.repeat(np.arange(hi - lo), np.diff(ptr))
        out[lo:hi] = np.bincount(owner[path == y], minlength=hi - lo)
    return out


def green_function(ball: Ball, x: int, y: int, trials: int, seed: int = 0,
                   kill=None) -> EstimateRecord:
    """Monte Carlo killed Green function; absorbing vertices are never counted."""
    km = _kill_mask(ball, kill)
    note = "degenerate: endpoint on the absorbing set" if km[x] or km[y] else ""
    keys = trial_keys(seed, f"green:{x}:{y}", ball.n, trials)
    s = green_samples(ball, x, y, keys, kill)
    return EstimateRecord.from_samples("green", f"x={x};y={y}", s, seed,
                                       ball.host.name, ball.n, note)


@dataclass(frozen=True)
class NaimValue:
    theta: float
    martin: float
    stderr: float = 0.0


def _naim_from_green(Gxy, Gxo, Goy, Gox, cx, cy, co, printed_form):
    # symmetric Green kernel g(a, b) = G(a, b) / c_b
    gxy, gxo, goy, gox = Gxy / cy, Gxo / co, Goy / cy, Gox / cx
    denom = gxo * (gox if printed_form else goy)
    if denom == 0 or Goy == 0:
        raise ZeroDivisionError("Naim kernel denominator vanishes")
    return gxy / denom, Gxy / Goy


def naim_kernel(obj, o: int, x: int, y: int, kill=None, exact: bool = True,
                trials: int = 10_000, seed: int = 0, printed_form: bool = False) -> NaimValue:
    """Naim kernel g(x,y) / (g(x,o) g(o,y)) of the killed walk, plus the
    Martin kernel G(x,y) / G(o,y).

    ``g(a, b) = G(a, b) / c_b`` is the symmetric Green kernel, G the expected
    number of visits. ``printed_form`` swaps the second denominator factor for
    g(o, x). ``kill`` defaults to the ball boundary.
    """
    if kill is None:
        if not isinstance(obj, Ball):
            raise ValueError("kill set required for a bare network")
        kill = obj.boundary
    if exact:
        net = oracle.as_network(obj)
        G = oracle.killed_green(net, kill, columns=[y, o, x])
        c = net.c
        th, mk = _naim_from_green(G[x, 0], G[x, 1], G[o, 0], G[o, 2],
                                  c[x], c[y], c[o], printed_form)
        return NaimValue(float(th), float(mk))
    if not isinstance(obj, Ball):
        raise ValueError("Monte Carlo mode runs on a ball")
    ball = obj
    est = {}
    for a, b in ((x, y), (x, o), (o, y), (o, x)):
        keys = trial_keys(seed, f"naim:{a}:{b}", ball.n, trials)
        s = green_samples(ball, a, b, keys, kill)
        est[a, b] = (s.mean(), s.std(ddof=1) / np.sqrt(trials))
    c = ball.deg
    th, mk = _naim_from_green(est[x, y][0], est[x, o][0], est[o, y][0], est[o, x][0],
                              c[x], c[y], c[o], printed_form)
    used = [(x, y), (x, o), (o, x) if printed_form else (o, y)]
    rel = np.sqrt(sum((est[k][1] / est[k][0]) ** 2 for k in used if est[k][0] > 0))
    return NaimValue(float(th), float(mk), float(abs(th) * rel))


def boundary_pair_naim(obj, x: int, y: int) -> float:
    """Naim kernel of two boundary points of a finite network.

    The reference point is ``x`` itself and the walk is killed at ``y``, so the
    kernel reduces to ``1 / g_y(x, x)``, where ``g_y(x, x)`` is the Green kernel
    of the walk killed at y. It equals the effective conductance between x and y.
    """
    return naim_kernel(obj, o=x, x=x, y=y, kill=[y]).theta


@dataclass
class NaimSeries:
    times: np.ndarray
    theta: np.ndarray
    truncated: bool
    oscillation: float
    x_path: np.ndarray
    y_path: np.ndarray


def oscillation(series: np.ndarray) -> float:
    """max |theta_t - theta_T| over the last quarter of the series."""
    if len(series) == 0:
        return float("nan")
    tail = series[int(np.floor(0.75 * (len(series) - 1))):]
    return float(np.max(np.abs(tail - series[-1])))


def naim_convergence_experiment(host: HostGraph, n_max: int, pairs: int, max_time: int,
                                seed: int = 0) -> list[NaimSeries]:
    """Theta(x_t, y_t) along pairs of independent walks from the root.

    The Green kernel is that of the ball of radius ``n_max`` killed at its
    boundary; a pair is truncated (and flagged) once either walk reaches it.
    """
    if not host.transient:
        raise ValueError(f"{host.name} is recurrent; the Naim kernel needs a transient host")
    ball = build_ball(host, n_max)
    net = oracle.as_network(ball)
    o = 0
    base = Stream(seed).child(n_max)
    out = []
    for p in range(pairs):
        xs, xstop = walk_path(ball, o, base.child(p, 0), max_time)
        ys, ystop = walk_path(ball, o, base.child(p, 1), max_time)
        T = min(len(xs), len(ys))
        if xstop or ystop:
            T -= 1  # the final position sits on the killing boundary
        xs, ys = xs[:T], ys[:T]
        cols = np.unique(np.r_[ys, o])
        col = {int(v): k for k, v in enumerate(cols)}
        G = oracle.killed_green(net, ball.boundary, columns=cols)
        c = net.c
        theta = np.array([
            (G[a, col[b]] / c[b]) / ((G[a, col[o]] / c[o]) * (G[o, col[b]] / c[b]))
            for a, b in zip(xs, ys)
        ])
        out.append(NaimSeries(np.arange(T), theta, xstop or ystop, oscillation(theta), xs, ys))
    return out


# -- equilibrium measure and interlacements -----------------------------------

@dataclass(frozen=True)
class EquilibriumResult:
    K: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    @property
    def capacity(self) -> float:
        return float(self.values.sum())

    def at(self, x: int) -> float:
        k = np.flatnonzero(self.K == x)
        return float(self.values[k[0]]) if len(k) else 0.0


def escape_samples(ball: Ball, K, x: int, keys) -> np.ndarray:
    """1 if the walk from x reaches the boundary before returning to K, else 0."""
    stop = ball.is_boundary.copy()
    stop[np.asarray(K, dtype=np.int64)] = True
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.zeros(len(keys), dtype=np.int64)
    for lo, hi in _chunks(len(keys), 1):
        end, _, _, _ = simulate(ball, np.full(hi - lo, x), keys[lo:hi], stop)
        out[lo:hi] = ball.is_boundary[end]
    return out


def equilibrium_measure(ball: Ball, K, exact: bool = True, trials: int = 10_000,
                        seed: int = 0) -> EquilibriumResult:
    """e_K(x) = deg(x) * P_x[reach the boundary before returning to K] for x in K."""
    K = np.unique(np.asarray(K, dtype=np.int64))
    if ball.is_boundary[K].any():
        raise ValueError("K must not touch the boundary of the ball")
    vals, ses = [], []
    for x in K:
        d = ball.deg[x]
        if exact:
            vals.append(d * oracle.escape_probability(ball, K, int(x)))
            ses.append(0.0)
        else:
            s = escape_samples(ball, K, int(x), trial_keys(seed, f"escape:{x}", ball.n, trials))
            vals.append(d * s.mean())
            ses.append(d * s.std(ddof=1) / np.sqrt(trials))
    return EquilibriumResult(K, np.array(vals, dtype=float), np.array(ses, dtype=float))


def validate_cylinder(host: HostGraph, Z: Sequence[Vertex]) -> list[Vertex]:
    Z = list(Z)
    if not Z:
        raise ValueError("a cylinder walk needs at least one vertex")
    for v in Z:
        host.validate(v)
    for a, b in zip(Z, Z[1:]):
        if not host.is_adjacent(a, b):
            raise ValueError(f"{serialize_vertex(a)} and {serialize_vertex(b)} are not adjacent")
    return Z


def contains_subwalk(traces: TraceBatch, Z: Sequence[int], oriented: bool = False) -> np.ndarray:
    """Boolean per trace: does the recorded path contain Z (or its reversal)
    as consecutive entries?"""
    if not traces.recorded:
        raise ValueError("subwalk search needs recorded paths")
    Z = np.asarray(Z, dtype=np.int64)
    path, ptr = traces.path, traces.path_ptr
    owner = traces.path_owner()
    hit = np.zeros(len(traces), dtype=bool)
    patterns = [Z] if oriented or len(Z) == 1 else [Z, Z[::-1]]
    L = len(Z)
    for pat in patterns:
        cand = np.flatnonzero(path == pat[0])
        cand = cand[cand + L - 1 < ptr[owner[cand] + 1]]
        for j in range(1, L):
            cand = cand[path[cand + j] == pat[j]]
        hit[owner[cand]] = True
    return hit


def interlacement_samples(ball: Ball, Z_idx, keys, scheme=ParticleScheme.DEGREE) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    out = np.zeros(len(keys), dtype=np.int64)
    per = int(ball.deg[ball.boundary].sum())
    for lo, hi in _chunks(len(keys), per * 8):
        tr = run_rounds(ball, scheme, child_keys(keys[lo:hi], 1), record=True)
        hit = contains_subwalk(tr, Z_idx)
        out[lo:hi] = np.bincount(tr.group[hit], minlength=hi - lo)
    return out


def interlacement_intensity(host: HostGraph, Z: Sequence[Vertex], n_range: Sequence[int],
                            trials: int = 10_000, seed: int = 0) -> list[EstimateRecord]:
    """Mean number of R^1_n trajectories containing Z (either orientation), per n."""
    Z = validate_cylinder(host, Z)
    ztext = ",".join(serialize_vertex(v) for v in Z)
    out = []
    for n in n_range:
        ball = build_ball(host, n)
        if any(v not in ball.index for v in Z):
            out.append(EstimateRecord("interlacement", f"Z={ztext}", 0.0, 0.0, trials, seed,
                                      host.name, n, "Z leaves the ball"))
            continue
        Z_idx = [ball.index[v] for v in Z]
        s = interlacement_samples(ball, Z_idx, trial_keys(seed, "interlacement", n, trials))
        out.append(EstimateRecord.from_samples("interlacement", f"Z={ztext}", s, seed,
                                               host.name, n))
    return out


def reversibility_check(ball: Ball, K, x: int) -> float:
    """|c_x P_x[X_tau = *] - c_* P_*[X_tau = x]| on the ball with its exterior contracted."""
    return oracle.reversibility_residual(ball, K, x)[2]


# -- sampling from a crossing matrix ------------------------------------------

def branch_cells(ball: Ball, depth: int) -> list[np.ndarray]:
    """Boundary of a tree ball grouped by ancestor at ``depth``."""
    if not ball.host.is_tree:
        raise UnsupportedHost("branch cells need a tree host")
    if not 0 <= depth <= ball.n:
        raise ValueError("depth must lie between 0 and the radius")
    groups: dict[tuple, list[int]] = {}
    for i in ball.boundary:
        groups.setdefault(ball.vertices[i].word[:depth], []).append(int(i))
    return [np.array(groups[k]) for k in sorted(groups)]


def _cell_index(ball: Ball, cells) -> np.ndarray:
    lab = np.full(ball.size, -1, dtype=np.int64)
    for k, c in enumerate(cells):
        if np.any(lab[c] >= 0):
            raise ValueError("cells overlap")
        lab[c] = k
    if np.any(lab[ball.boundary] < 0):
        raise ValueError("cells must partition the boundary")
    return lab


def crossing_matrix_exact(ball: Ball, cells) -> np.ndarray:
    """Expected one-round walk-edges between cells (diagonal: edges inside a cell)."""
    lab = _cell_index(ball, cells)[ball.boundary]
    C = oracle.boundary_conductance(ball)
    L = np.zeros((len(lab), len(cells)))
    L[np.arange(len(lab)), lab] = 1.0
    M = L.T @ C @ L
    return M + M.T - np.diag(np.diag(M))


def crossing_matrix_mc(ball: Ball, cells, trials: int, seed: int = 0,
                       scheme=ParticleScheme.DEGREE) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error of one-round walk-edges between cells."""
    lab = _cell_index(ball, cells)
    k = len(cells)
    keys = trial_keys(seed, "crossing-matrix", ball.n, trials)
    per = int(ball.deg[ball.boundary].sum())
    counts = np.zeros((trials, k * k))
    for lo, hi in _chunks(trials, per):
        tr = run_rounds(ball, scheme, child_keys(keys[lo:hi], 1))
        a, b = lab[tr.start], lab[tr.end]
        lo_c, hi_c = np.minimum(a, b), np.maximum(a, b)
        flat = tr.group * k * k + lo_c * k + hi_c
        counts[lo:hi] = np.bincount(flat, minlength=(hi - lo) * k * k).reshape(hi - lo, k * k)
    mean = counts.mean(axis=0).reshape(k, k)
    se = (counts.std(axis=0, ddof=1) / np.sqrt(trials)).reshape(k, k)
    sym = lambda M: np.triu(M) + np.triu(M, 1).T
    return sym(mean), sym(se)


def sample_from_crossing_matrix(intensity, stream: Stream) -> list[tuple[int, int]]:
    """Random graph on the cells: a and b joined with probability 1 - exp(-lambda_ab)."""
    lam = np.asarray(intensity, dtype=float)
    if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
        raise ValueError("intensity matrix must be square")
    if np.any(lam < 0):
        raise ValueError("intensities must be nonnegative")
    if not np.allclose(lam, lam.T, equal_nan=False):
        raise ValueError("intensity matrix must be symmetric")
    a, b = np.triu_indices(len(lam), 1)
    p = -np.expm1(-lam[a, b])
    u = draw_uniform(np.uint64(stream.key), np.arange(len(a)))
    keep = u < p
    return list(zip(a[keep].tolist(), b[keep].tolist()))


def edge_frequencies(intensity, stream: Stream, samples: int) -> np.ndarray:
    """Empirical edge frequency of each cell pair over repeated samples."""
    lam = np.asarray(intensity, dtype=float)
    freq = np.zeros_like(lam)
    for s in range(samples):
        for a, b in sample_from_crossing_matrix(lam, stream.child(s)):
            freq[a, b] += 1
            freq[b, a] += 1
    return freq / samples
