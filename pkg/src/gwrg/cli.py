"""Command-line front end: ``gwrg --experiment <name> --host <host> ...``.

Every Monte Carlo trial draws from a key derived from (seed, experiment, n,
trial index), so result files do not depend on ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__, estimators as est, oracle
from .ball import DEFAULT_VERTEX_CAP, BallTooLarge, UnsupportedHost, build_ball
from .host import TreeWord, VertexEncodingError, make_host, parse_vertex, serialize_vertex
from .rng import Stream, trial_keys, trial_seed
from .stats import LinearFit, connectivity_campaign, linear_fit, stats_campaign
from .walks import ParticleScheme, run_rounds, simulate, visit_counts

EXPERIMENTS = ("stats", "connectivity", "crossings", "naim", "green", "equilibrium",
               "interlacement", "graphon-sample", "oracle-suite")

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_SUITE = 0, 1, 2, 3

# published fit of mean connectivity time against n on the binary tree
REFERENCE_FIT = {"slope": 0.26, "slope_pm": 0.003, "intercept": 0.90,
                 "intercept_pm": 0.02, "adj_r2": 0.9993}


class UsageError(Exception):
    pass


class ResourceError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_n_range(text: str) -> list[int]:
    """``"5"``, ``"2..8"`` or ``"3,5,7"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad radius list {text!r}") from None
    if not out or min(out) < 1:
        raise UsageError("radii must be positive")
    return out


@dataclass
class ExperimentConfig:
    experiment: str
    host: str = "btree2"
    n: list[int] = field(default_factory=lambda: [4])
    i: int = 1
    scheme: str = "degree"
    trials: int = 10_000
    seed: int = 0
    out: str = "results"
    format: str = "csv"
    threads: int = 1
    vertex_cap: int = DEFAULT_VERTEX_CAP
    x: str = ""
    y: str = ""
    K: str = ""
    Z: str = ""
    depth: int = 1
    max_time: int = 200

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}")
        for name in ("i", "trials", "threads", "vertex_cap", "max_time"):
            if getattr(self, name) <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.seed < 0 or self.depth < 0:
            raise UsageError("--seed and --depth must be nonnegative")
        if self.scheme not in ("degree", "poisson"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        try:
            make_host(self.host)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    @property
    def particle_scheme(self) -> ParticleScheme:
        return ParticleScheme(self.scheme)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gwrg", description="Group-walk random graph experiments.")
    p.add_argument("--config", help="key=value or JSON file; flags override it")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--host")
    p.add_argument("--n", help="radius, range a..b, or list a,b,c")
    p.add_argument("--i", type=int, help="rounds (stats, crossings) or round cap (connectivity)")
    p.add_argument("--scheme", choices=("degree", "poisson"))
    p.add_argument("--trials", type=int)
    p.add_argument("--fast", action="store_true", help="1000 trials unless --trials is given")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path without extension")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int)
    p.add_argument("--vertex-cap", type=int, dest="vertex_cap")
    p.add_argument("--x", help="vertex or boundary rule, depending on the experiment")
    p.add_argument("--y", help="vertex or boundary rule, depending on the experiment")
    p.add_argument("--K", help="semicolon-separated vertex set")
    p.add_argument("--Z", help="semicolon-separated cylinder walk")
    p.add_argument("--depth", type=int, help="branch-cell depth for graphon-sample")
    p.add_argument("--max-time", type=int, dest="max_time")
    return p


def _read_config_file(path: str) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            k, _, v = line.partition("=")
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def config_from_args(argv) -> ExperimentConfig:
    args = build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        try:
            values.update(_read_config_file(args.config))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "fast"):
            values[k] = v
    if "experiment" not in values:
        raise UsageError("--experiment is required")
    if "trials" not in values:
        values["trials"] = 1000 if args.fast else 10_000
    if "n" in values:
        values["n"] = parse_n_range(values["n"])
    known = ExperimentConfig.__dataclass_fields__
    unknown = set(values) - set(known)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for k, f in known.items():
        if k in values and f.type == "int":
            try:
                values[k] = int(values[k])
            except (TypeError, ValueError):
                raise UsageError(f"{k} must be an integer") from None
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


# -- parallel trial dispatch --------------------------------------------------

@lru_cache(maxsize=8)
def _ball(host: str, n: int, cap: int):
    return build_ball(make_host(host), n, cap)


def _chunk_bounds(trials: int) -> list[tuple[int, int]]:
    # fixed chunking independent of the worker count
    size = max(1, min(2_000, math.ceil(trials / 8)))
    return [(lo, min(trials, lo + size)) for lo in range(0, trials, size)]


def _dispatch(task, jobs: list[tuple], threads: int) -> list:
    """Apply ``task`` to every job; results come back in job order."""
    if threads == 1 or len(jobs) <= 1:
        return [task(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, *zip(*jobs)))


def _stats_task(host, n, cap, scheme, seed, lo, hi, rounds):
    keys = trial_keys(seed, "stats", n, hi - lo, start=lo)
    return stats_campaign(_ball(host, n, cap), ParticleScheme(scheme), keys, rounds)


def _connectivity_task(host, n, cap, scheme, seed, lo, hi, cap_rounds):
    keys = trial_keys(seed, "connectivity", n, hi - lo, start=lo)
    return connectivity_campaign(_ball(host, n, cap), ParticleScheme(scheme), keys, cap_rounds)


def _crossing_task(host, n, cap, scheme, seed, lo, hi, rounds, x, y):
    ball = _ball(host, n, cap)
    keys = trial_keys(seed, "crossings", n, hi - lo, start=lo)
    return est.crossing_samples(ball, est.parse_rule(x).mask(ball), est.parse_rule(y).mask(ball),
                                rounds, keys, ParticleScheme(scheme))


def _green_task(host, n, cap, seed, lo, hi, x, y):
    keys = trial_keys(seed, f"green:{x}:{y}", n, hi - lo, start=lo)
    return est.green_samples(_ball(host, n, cap), x, y, keys)


def _escape_task(host, n, cap, seed, lo, hi, K, x):
    keys = trial_keys(seed, f"escape:{x}", n, hi - lo, start=lo)
    return est.escape_samples(_ball(host, n, cap), list(K), x, keys)


def _interlacement_task(host, n, cap, scheme, seed, lo, hi, Z):
    keys = trial_keys(seed, "interlacement", n, hi - lo, start=lo)
    return est.interlacement_samples(_ball(host, n, cap), list(Z), keys, ParticleScheme(scheme))


def _samples(cfg: ExperimentConfig, task, n, *extra, scheme=True) -> np.ndarray:
    head = (cfg.host, n, cfg.vertex_cap) + ((cfg.scheme,) if scheme else ()) + (cfg.seed,)
    jobs = [head + (lo, hi) + extra for lo, hi in _chunk_bounds(cfg.trials)]
    parts = _dispatch(task, jobs, cfg.threads)
    if isinstance(parts[0], list):
        return [x for p in parts for x in p]
    return np.concatenate(parts)


# -- experiments --------------------------------------------------------------

@dataclass
class Result:
    columns: list[str]
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    failed: bool = False


def _record(quantity, host, n, params, samples, seed) -> dict:
    return est.EstimateRecord.from_samples(quantity, params, samples, seed, host, n).row()


def _exact_row(quantity, host, n, params, value, seed) -> dict:
    return {"quantity": quantity, "host": host, "n": n, "params": params,
            "estimate": float(value), "stderr": 0.0, "trials": 0, "seed": seed}


EST_COLUMNS = ["quantity", "host", "n", "params", "estimate", "stderr", "trials", "seed"]


def _default_rules(cfg, host):
    if cfg.x and cfg.y:
        return cfg.x, cfg.y
    if not host.is_tree:
        raise UsageError(f"{host.name} has no default boundary sets; pass --x and --y rules")
    root = host.root
    return (f"branch:{serialize_vertex(root)}|{serialize_vertex(TreeWord((0,)))}",
            f"branch:{serialize_vertex(root)}|{serialize_vertex(TreeWord((1,)))}")


def _vertex(ball, text, default=None):
    if not text:
        if default is None:
            raise UsageError("vertex argument required")
        return default
    try:
        return ball.index_of(parse_vertex(text))
    except (VertexEncodingError, KeyError, ValueError) as exc:
        raise UsageError(f"bad vertex {text!r}: {exc}") from None


def _vertices(ball, text, default):
    if not text:
        return default
    return [_vertex(ball, t) for t in text.split(";") if t.strip()]


def run_stats(cfg) -> Result:
    cols = ["host", "n", "i", "seed", "boundary_size", "isolated", "components",
            "largest_size", "diameter"]
    rows, summary = [], {}
    for n in cfg.n:
        stats = _samples(cfg, _stats_task, n, cfg.i)
        for t, s in enumerate(stats):
            rows.append({"host": cfg.host, "n": n, "i": cfg.i,
                         "seed": f"{trial_seed(cfg.seed, 'stats', n, t):032x}",
                         "boundary_size": s.boundary_size, "isolated": s.isolated,
                         "components": s.components, "largest_size": s.largest_size,
                         "diameter": s.diameter})
        B = stats[0].boundary_size
        summary[f"n{n}.boundary_size"] = B
        summary[f"n{n}.isolated_fraction"] = float(np.mean([s.isolated for s in stats]) / B)
        summary[f"n{n}.component_fraction"] = float(np.mean([s.components for s in stats]) / B)
        summary[f"n{n}.mean_diameter"] = float(np.mean([s.diameter for s in stats]))
    if len(cfg.n) >= 3:
        fit = linear_fit([(math.log(summary[f"n{n}.boundary_size"]), summary[f"n{n}.mean_diameter"])
                          for n in cfg.n])
        summary.update({"diameter_vs_log_boundary.slope": fit.slope,
                        "diameter_vs_log_boundary.intercept": fit.intercept,
                        "diameter_vs_log_boundary.adj_r2": fit.adj_r2})
    return Result(cols, rows, summary)


@dataclass(frozen=True)
class FitReport:
    fit: LinearFit
    censored: int
    reference: dict

    def lines(self) -> list[str]:
        r, f = self.reference, self.fit
        return [
            f"slope      {f.slope:.4f} +- {f.slope_se:.4f}   reference {r['slope']} +- {r['slope_pm']}",
            f"intercept  {f.intercept:.4f} +- {f.intercept_se:.4f}   reference {r['intercept']} +- {r['intercept_pm']}",
            f"adj R^2    {f.adj_r2:.6f}   reference {r['adj_r2']}",
            f"censored   {self.censored}",
        ]


def fit_report(tau_by_n: dict[int, np.ndarray], censored_by_n: dict[int, np.ndarray] | None = None
               ) -> FitReport:
    """OLS of mean uncensored tau against n, next to the reference fit."""
    pts, cens = [], 0
    for n in sorted(tau_by_n):
        tau = np.asarray(tau_by_n[n], dtype=float)
        mask = np.zeros(len(tau), dtype=bool) if censored_by_n is None else np.asarray(censored_by_n[n])
        cens += int(mask.sum())
        if (~mask).any():
            pts.append((n, float(tau[~mask].mean())))
    if len({p[0] for p in pts}) < 3:
        raise ValueError("fit report needs at least 3 radii with uncensored trials")
    return FitReport(linear_fit(pts), cens, dict(REFERENCE_FIT))


def run_connectivity(cfg) -> Result:
    cols = ["host", "n", "seed", "tau", "tau_star", "censored"]
    # --i is the round cap; the default of 1 is too small to be meaningful here
    cap = cfg.i if cfg.i > 1 else 1000
    rows, taus, cens, summary = [], {}, {}, {}
    for n in cfg.n:
        tau, tau_star, censored = _join_campaign(cfg, n, cap)
        taus[n], cens[n] = tau, censored
        for t in range(cfg.trials):
            rows.append({"host": cfg.host, "n": n,
                         "seed": f"{trial_seed(cfg.seed, 'connectivity', n, t):032x}",
                         "tau": int(tau[t]), "tau_star": int(tau_star[t]),
                         "censored": int(censored[t])})
        ok = ~censored
        summary[f"n{n}.mean_tau"] = float(tau[ok].mean()) if ok.any() else float("nan")
        summary[f"n{n}.mean_tau_star"] = float(tau_star.mean())
        summary[f"n{n}.censored"] = int(censored.sum())
    if len(cfg.n) >= 3:
        rep = fit_report(taus, cens)
        summary.update({"fit.slope": rep.fit.slope, "fit.intercept": rep.fit.intercept,
                        "fit.adj_r2": rep.fit.adj_r2, "fit.slope_se": rep.fit.slope_se,
                        "fit.intercept_se": rep.fit.intercept_se,
                        **{f"reference.{k}": v for k, v in rep.reference.items()}})
        for line in rep.lines():
            print(line)
    return Result(cols, rows, summary)


def _join_campaign(cfg, n, cap):
    head = (cfg.host, n, cfg.vertex_cap, cfg.scheme, cfg.seed)
    jobs = [head + (lo, hi, cap) for lo, hi in _chunk_bounds(cfg.trials)]
    parts = _dispatch(_connectivity_task, jobs, cfg.threads)
    return tuple(np.concatenate([p[k] for p in parts]) for k in range(3))


def run_crossings(cfg) -> Result:
    host = make_host(cfg.host)
    xr, yr = _default_rules(cfg, host)
    try:
        est.parse_rule(xr), est.parse_rule(yr)
    except (ValueError, VertexEncodingError) as exc:
        raise UsageError(str(exc)) from None
    rows = []
    params = f"X={xr};Y={yr};i={cfg.i}"
    for n in cfg.n:
        ball = _ball(cfg.host, n, cfg.vertex_cap)
        try:
            xm, ym = est.parse_rule(xr).mask(ball), est.parse_rule(yr).mask(ball)
        except (UnsupportedHost, KeyError, ValueError) as exc:
            raise UsageError(f"boundary rule does not apply to {cfg.host}: {exc}") from None
        s = _samples(cfg, _crossing_task, n, cfg.i, xr, yr)
        rows.append(_record("crossings", cfg.host, n, params, s, cfg.seed))
        if ball.size <= oracle.ORACLE_CAP:
            rows.append(_exact_row("crossings-exact", cfg.host, n, params,
                                   oracle.expected_crossings(ball, xm, ym, cfg.i), cfg.seed))
    return Result(EST_COLUMNS, rows)


def run_green(cfg) -> Result:
    rows = []
    for n in cfg.n:
        ball = _ball(cfg.host, n, cfg.vertex_cap)
        x, y = _vertex(ball, cfg.x, 0), _vertex(ball, cfg.y, 0)
        params = f"x={serialize_vertex(ball.vertices[x])};y={serialize_vertex(ball.vertices[y])}"
        s = _samples(cfg, _green_task, n, x, y, scheme=False)
        rows.append(_record("green", cfg.host, n, params, s, cfg.seed))
        if ball.size <= oracle.ORACLE_CAP:
            G = oracle.killed_green(ball, ball.boundary, columns=[y], interior_visits=True)
            rows.append(_exact_row("green-exact", cfg.host, n, params, G[x, 0], cfg.seed))
    return Result(EST_COLUMNS, rows)


def run_equilibrium(cfg) -> Result:
    rows = []
    for n in cfg.n:
        ball = _ball(cfg.host, n, cfg.vertex_cap)
        K = sorted(set(_vertices(ball, cfg.K, [0])))
        if ball.is_boundary[K].any():
            raise UsageError(f"K touches the boundary at n={n}")
        ktext = ",".join(serialize_vertex(ball.vertices[k]) for k in K)
        total = np.zeros(cfg.trials)
        for x in K:
            params = f"K={ktext};x={serialize_vertex(ball.vertices[x])}"
            s = ball.deg[x] * _samples(cfg, _escape_task, n, tuple(K), x, scheme=False)
            total += s
            rows.append(_record("equilibrium", cfg.host, n, params, s, cfg.seed))
            if ball.size <= oracle.ORACLE_CAP:
                ex = ball.deg[x] * oracle.escape_probability(ball, K, x)
                rows.append(_exact_row("equilibrium-exact", cfg.host, n, params, ex, cfg.seed))
        # trials of different x are independent, so the summed standard error is
        # conservative only in its pairing; report the exact capacity alongside
        rows.append(_record("capacity", cfg.host, n, f"K={ktext}", total, cfg.seed))
        if ball.size <= oracle.ORACLE_CAP:
            rows.append(_exact_row("capacity-exact", cfg.host, n, f"K={ktext}",
                                   oracle.capacity(ball, K), cfg.seed))
    return Result(EST_COLUMNS, rows)


def run_interlacement(cfg) -> Result:
    host = make_host(cfg.host)
    try:
        Z = [parse_vertex(t) for t in cfg.Z.split(";") if t.strip()] if cfg.Z else [host.root]
        Z = est.validate_cylinder(host, Z)
    except (ValueError, VertexEncodingError) as exc:
        raise UsageError(f"bad cylinder walk: {exc}") from None
    ztext = ",".join(serialize_vertex(v) for v in Z)
    rows = []
    for n in cfg.n:
        ball = _ball(cfg.host, n, cfg.vertex_cap)
        if any(v not in ball.index for v in Z):
            rows.append(_exact_row("interlacement", cfg.host, n, f"Z={ztext}", 0.0, cfg.seed))
            continue
        idx = tuple(ball.index[v] for v in Z)
        s = _samples(cfg, _interlacement_task, n, idx)
        rows.append(_record("interlacement", cfg.host, n, f"Z={ztext}", s, cfg.seed))
        if len(Z) == 1 and not ball.is_boundary[idx[0]] and ball.size <= oracle.ORACLE_CAP:
            x = idx[0]
            rows.append(_exact_row("equilibrium-exact", cfg.host, n, f"Z={ztext}",
                                   ball.deg[x] * oracle.escape_probability(ball, [x], x),
                                   cfg.seed))
    return Result(EST_COLUMNS, rows)


def run_naim(cfg) -> Result:
    host = make_host(cfg.host)
    if not host.transient:
        raise UsageError(f"{host.name} is recurrent; the Naim experiment needs a transient host")
    n_max = max(cfg.n)
    series = est.naim_convergence_experiment(host, n_max, cfg.trials, cfg.max_time, cfg.seed)
    rows = []
    for p, s in enumerate(series):
        for t, th in zip(s.times, s.theta):
            rows.append({"quantity": "naim", "host": cfg.host, "n": n_max,
                         "params": f"pair={p};t={int(t)};truncated={int(s.truncated)}",
                         "estimate": float(th), "stderr": 0.0, "trials": 1, "seed": cfg.seed})
        rows.append({"quantity": "naim-oscillation", "host": cfg.host, "n": n_max,
                     "params": f"pair={p};length={len(s.theta)};truncated={int(s.truncated)}",
                     "estimate": s.oscillation, "stderr": 0.0, "trials": 1, "seed": cfg.seed})
    return Result(EST_COLUMNS, rows, {"truncated_pairs": sum(s.truncated for s in series)})


def run_graphon(cfg) -> Result:
    host = make_host(cfg.host)
    if not host.is_tree:
        raise UsageError("graphon-sample uses branch cells and needs a tree host")
    rows = []
    n = max(cfg.n)
    ball = _ball(cfg.host, n, cfg.vertex_cap)
    if cfg.depth > n:
        raise UsageError("--depth exceeds the radius")
    cells = est.branch_cells(ball, cfg.depth)
    mean, se = est.crossing_matrix_mc(ball, cells, cfg.trials, cfg.seed, cfg.particle_scheme)
    k = len(cells)
    for a in range(k):
        for b in range(a, k):
            rows.append({"quantity": "crossing-matrix", "host": cfg.host, "n": n,
                         "params": f"a={a};b={b}", "estimate": float(mean[a, b]),
                         "stderr": float(se[a, b]), "trials": cfg.trials, "seed": cfg.seed})
    lam = mean.copy()
    np.fill_diagonal(lam, 0.0)
    for a, b in est.sample_from_crossing_matrix(lam, Stream(cfg.seed).child(n, cfg.depth)):
        rows.append({"quantity": "graphon-edge", "host": cfg.host, "n": n,
                     "params": f"a={a};b={b}", "estimate": 1.0, "stderr": 0.0,
                     "trials": 1, "seed": cfg.seed})
    return Result(EST_COLUMNS, rows, {"cells": k})


EXPERIMENT_RUNNERS = {
    "stats": run_stats, "connectivity": run_connectivity, "crossings": run_crossings,
    "green": run_green, "equilibrium": run_equilibrium, "interlacement": run_interlacement,
    "naim": run_naim, "graphon-sample": run_graphon,
}


# -- oracle-equivalence suite -------------------------------------------------

SUITE_FIXTURES = (("z1", 3), ("z2", 3), ("btree2", 4), ("tree-d3", 3), ("hyptree", 3),
                  ("lamplighter", 2))
SUITE_COLUMNS = ["check", "host", "n", "params", "estimate", "stderr", "exact", "z", "passed"]


def _check(rows, name, ball, params, samples, exact, sigmas=3.0):
    samples = np.asarray(samples, dtype=float)
    mean = float(samples.mean())
    se = float(samples.std(ddof=1) / np.sqrt(len(samples)))
    z = abs(mean - exact) / se if se > 0 else (0.0 if abs(mean - exact) < 1e-12 else math.inf)
    rows.append({"check": name, "host": ball.host.name, "n": ball.n, "params": params,
                 "estimate": mean, "stderr": se, "exact": float(exact), "z": z,
                 "passed": int(z <= sigmas)})


def oracle_suite(trials: int, seed: int, fixtures=SUITE_FIXTURES) -> Result:
    """Monte Carlo estimators against the exact oracle on small balls.

    A check passes when the estimate is within 3 standard errors.
    """
    rows: list[dict] = []
    for name, n in fixtures:
        ball = build_ball(make_host(name), n)
        if ball.size > 200:
            continue
        tag = f"{name}:{n}"
        B, I = ball.boundary, ball.interior
        # hitting distribution of one boundary-to-boundary walk
        b0 = int(B[0])
        keys = trial_keys(seed, f"suite-hit:{tag}", n, trials)
        end, _, _, _ = simulate(ball, np.full(trials, b0), keys, ball.is_boundary)
        dist = oracle.first_return_distribution(ball, b0, B)
        for j in np.argsort(-dist)[:3]:
            _check(rows, "hitting", ball, f"start={b0};end={int(B[j])}",
                   end == B[j], dist[j])
        # Green function from the root
        y = int(I[-1])
        G = oracle.killed_green(ball, B, columns=[0, y], interior_visits=True)
        for col, target in enumerate((0, y)):
            s = est.green_samples(ball, 0, target, trial_keys(seed, f"suite-green:{tag}:{target}",
                                                              n, trials))
            _check(rows, "green", ball, f"x=0;y={target}", s, G[0, col])
        # visits per interior vertex under the degree scheme equal the degree
        keys = trial_keys(seed, f"suite-visits:{tag}", n, trials)
        tr = run_rounds(ball, ParticleScheme.DEGREE, keys, record=True)
        vc = visit_counts(tr, ball, per_group=trials)
        exact_visits = oracle.expected_visits_constant_boundary(ball)
        for k, x in enumerate(I[:3]):
            _check(rows, "visits", ball, f"x={int(x)}", vc[:, x], exact_visits[k])
        # crossings between two halves of the boundary
        xm = np.zeros(ball.size, dtype=bool)
        xm[B[: len(B) // 2]] = True
        ym = ball.is_boundary & ~xm
        s = est.crossing_samples(ball, xm, ym, 1, trial_keys(seed, f"suite-cross:{tag}", n, trials))
        _check(rows, "crossings", ball, "X=first-half;Y=second-half", s,
               oracle.expected_crossings(ball, xm, ym))
        # escape from the root
        s = est.escape_samples(ball, [0], 0, trial_keys(seed, f"suite-escape:{tag}", n, trials))
        esc = oracle.escape_probability(ball, [0], 0)
        _check(rows, "escape", ball, "K=root;x=root", s, esc)
        # single-vertex interlacement intensity against the equilibrium measure
        s = est.interlacement_samples(ball, [0], trial_keys(seed, f"suite-mu:{tag}", n, trials))
        _check(rows, "interlacement", ball, "Z=root", s, ball.deg[0] * esc)
    return Result(SUITE_COLUMNS, rows, {"checks": len(rows),
                                        "failed": sum(1 - r["passed"] for r in rows)},
                  failed=any(not r["passed"] for r in rows))


# -- output -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(result: Result, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result.rows, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for r in result.rows:
        w.writerow([_fmt(r[c]) for c in result.columns])
    return buf.getvalue()


def write_outputs(cfg: ExperimentConfig, result: Result, wall: float) -> tuple[Path, Path]:
    base = Path(cfg.out)
    base.parent.mkdir(parents=True, exist_ok=True)
    data = base.with_name(base.name + "." + cfg.format)
    data.write_text(render(result, cfg.format))
    man = base.with_name(base.name + ".manifest")
    items = {k: (",".join(map(str, v)) if isinstance(v, list) else v)
             for k, v in asdict(cfg).items()}
    items.update({"version": __version__, "result_file": data.name,
                  "rows": len(result.rows), "wall_time_s": f"{wall:.3f}"})
    items.update({f"summary.{k}": _fmt(v) for k, v in result.summary.items()})
    man.write_text("".join(f"{k}={v}\n" for k, v in items.items()))
    return data, man


def run(cfg: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    if cfg.experiment == "oracle-suite":
        result = oracle_suite(cfg.trials, cfg.seed)
    else:
        result = EXPERIMENT_RUNNERS[cfg.experiment](cfg)
    data, _ = write_outputs(cfg, result, time.perf_counter() - t0)
    for k, v in result.summary.items():
        print(f"{k}={_fmt(v)}")
    print(f"wrote {data}")
    if result.failed:
        return EXIT_SUITE
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BallTooLarge, oracle.OracleTooLarge, MemoryError, ResourceError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
