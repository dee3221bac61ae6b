import numpy as np
import pytest

from gwrg import oracle
from gwrg.ball import build_ball
from gwrg.host import LatticePoint, make_host
from gwrg.rng import Stream, child_keys, trial_keys
from gwrg.walks import (ParticleScheme, TraceBatch, particle_counts, run_round, run_rounds,
                        run_walk, simulate, visit_counts, walk_path)

from conftest import SMALL_FIXTURES


def within(samples, exact, sigmas=3.0):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    return abs(samples.mean() - exact) <= sigmas * se + 1e-12


def test_gamblers_ruin_on_z1():
    b = build_ball(make_host("z1"), 2)
    start = b.index_of(LatticePoint((2,)))
    keys = trial_keys(0, "ruin", 2, 20_000)
    end, steps, _, _ = simulate(b, np.full(len(keys), start), keys, b.is_boundary)
    assert within(end == start, 0.75)
    assert np.all(steps >= 2)
    dist = oracle.first_return_distribution(b, start, b.boundary)
    assert dist[b.boundary_pos[start]] == pytest.approx(0.75, abs=1e-12)


def test_binary_tree_radius_one():
    b = build_ball(make_host("btree2"), 1)
    leaf = int(b.boundary[0])
    keys = trial_keys(0, "leaf", 1, 10_000)
    end, _, _, _ = simulate(b, np.full(len(keys), leaf), keys, b.is_boundary)
    dist = oracle.first_return_distribution(b, leaf, b.boundary)
    for k, target in enumerate(b.boundary):
        assert within(end == target, dist[k])


def test_walks_ignore_batch_composition():
    b = build_ball(make_host("z2"), 4)
    keys = trial_keys(3, "batch", 4, 40)
    starts = np.resize(b.boundary, 40)
    e1, s1, p1, w1 = simulate(b, starts, keys, b.is_boundary, record=True)
    e2, s2, p2, w2 = simulate(b, starts[:13], keys[:13], b.is_boundary, record=True)
    assert np.array_equal(e1[:13], e2) and np.array_equal(s1[:13], s2)
    assert np.array_equal(w1[:p1[13]], w2)


def test_recorded_paths_are_walks():
    b = build_ball(make_host("hyptree"), 3)
    tr = run_rounds(b, ParticleScheme.DEGREE, trial_keys(0, "paths", 3, 5), record=True)
    A = b.adjacency()
    for t in tr:
        assert len(t.path) == t.steps + 1
        assert t.path[0] == t.start and t.path[-1] == t.end
        assert all(b.is_boundary[t.path[[0, -1]]])
        assert not b.is_boundary[t.path[1:-1]].any()
        for u, v in zip(t.path, t.path[1:]):
            assert v in A[u]


def test_degree_scheme_counts():
    b = build_ball(make_host("z2"), 3)
    tr = run_round(b, ParticleScheme.DEGREE, Stream(0))
    assert len(tr) == b.deg[b.boundary].sum()
    per_start = np.bincount(tr.start, minlength=b.size)
    assert np.array_equal(per_start[b.boundary], b.deg[b.boundary])
    assert np.all(np.diff(tr.start) >= 0)


def test_poisson_scheme_mean():
    b = build_ball(make_host("btree2"), 3)
    keys = child_keys(trial_keys(0, "poisson", 3, 4000), 1)
    tr = run_rounds(b, ParticleScheme.POISSON, keys)
    totals = np.bincount(tr.group, minlength=len(keys))
    assert within(totals, b.deg[b.boundary].sum())
    # a single boundary vertex of degree 1 launches Poisson(1) particles
    v = int(b.boundary[0])
    counts = particle_counts(b, ParticleScheme.POISSON, child_keys(keys, v), np.full(len(keys), v))
    assert within(counts, 1.0)
    assert within(counts == 0, np.exp(-1.0))


def test_run_walk_and_format():
    b = build_ball(make_host("z1"), 2)
    w = run_walk(b, int(b.boundary[0]), Stream(1), record=True)
    assert w.format().split()[:3] == [str(w.start), str(w.end), str(w.steps)]
    assert len(w.format().split()) == 3 + w.steps + 1
    with pytest.raises(ValueError):
        run_walk(b, 0, Stream(1))


def test_trace_batch_dump_and_empty():
    b = build_ball(make_host("btree2"), 2)
    tr = run_round(b, ParticleScheme.DEGREE, Stream(2))
    assert len(tr.dump().splitlines()) == len(tr)
    assert len(TraceBatch.empty()) == 0 and TraceBatch.empty(record=True).recorded


@pytest.mark.parametrize("host,n", SMALL_FIXTURES)
def test_visits_match_degree(ball_cache, host, n):
    b = ball_cache(host, n)
    rounds = 10_000
    tr = run_rounds(b, ParticleScheme.DEGREE, trial_keys(0, "visits", n, rounds), record=True)
    vc = visit_counts(tr, b, per_group=rounds)
    assert np.array_equal(vc.sum(axis=0), visit_counts(tr, b))
    for x in b.interior:
        assert within(vc[:, x], b.deg[x]), (host, n, x)


def test_walk_path_stops_on_boundary():
    b = build_ball(make_host("tree-d3"), 4)
    path, stopped = walk_path(b, 0, Stream(5), 10_000)
    assert stopped and b.is_boundary[path[-1]] and not b.is_boundary[path[:-1]].any()
    path, stopped = walk_path(b, 0, Stream(5), 2)
    assert not stopped and len(path) == 3


def test_max_steps_guard():
    b = build_ball(make_host("z2"), 6)
    with pytest.raises(RuntimeError):
        simulate(b, [int(b.boundary[0])], trial_keys(0, "g", 6, 1), b.is_boundary, max_steps=1)


@pytest.mark.parametrize("host,n,count", [("z1", 2, 2), ("tree-d3", 2, 6)])
def test_trace_counts(host, n, count):
    b = build_ball(make_host(host), n)
    assert len(run_round(b, ParticleScheme.DEGREE, Stream(0))) == count
