import numpy as np
import pytest

from gwrg import oracle
from gwrg.ball import build_ball
from gwrg.host import LatticePoint, TreeWord, make_host
from gwrg.rng import Stream, trial_keys
from gwrg.sampler import (advance_round, crossing_count, new_state, sample_gwrg)
from gwrg.walks import ParticleScheme, run_round


def test_z1_edge_probability():
    b = build_ball(make_host("z1"), 2)
    lo, hi = b.index_of(LatticePoint((-2,))), b.index_of(LatticePoint((2,)))
    pair = tuple(sorted((b.boundary_pos[lo], b.boundary_pos[hi])))
    trials = 20_000
    hits = np.array([pair in sample_gwrg(b, 1, Stream(k)).simple_edges for k in range(trials)])
    se = np.sqrt(7 / 16 * 9 / 16 / trials)
    assert abs(hits.mean() - 7 / 16) < 3 * se
    # exact: 1 - (1 - p)^2 with p the oracle crossing probability
    p = oracle.first_return_distribution(b, hi, b.boundary)[b.boundary_pos[lo]]
    assert 1 - (1 - p) ** 2 == pytest.approx(7 / 16, abs=1e-12)


def test_rounds_accumulate():
    b = build_ball(make_host("btree2"), 3)
    s0 = new_state(b, Stream(9))
    assert s0.rounds_done == 0 and s0.total_multiplicity() == 0
    s1 = advance_round(s0)
    s2 = advance_round(s1)
    assert s0.total_multiplicity() == 0  # states are not mutated
    per_round = b.deg[b.boundary].sum()
    assert s1.total_multiplicity() == per_round and s2.total_multiplicity() == 2 * per_round
    assert s1.simple_edges <= s2.simple_edges
    assert sample_gwrg(b, 2, Stream(9)).edges == s2.edges
    for (u, v) in s2.edges:
        assert 0 <= u <= v < s2.num_vertices


def test_edge_list_format():
    b = build_ball(make_host("btree2"), 2)
    s = sample_gwrg(b, 1, Stream(4))
    lines = s.edge_list(seed=4).splitlines()
    assert lines[0] == "# host=btree2 n=2 i=1 seed=4"
    assert sum(int(l.split()[2]) for l in lines[1:]) == s.total_multiplicity()


def test_crossing_count_conventions():
    b = build_ball(make_host("btree2"), 3)
    s = sample_gwrg(b, 3, Stream(1))
    everything = b.boundary
    assert crossing_count(s, [], everything) == 0
    # an edge inside X and Y counts once, so X = Y = boundary gives every edge
    assert crossing_count(s, everything, everything) == s.total_multiplicity()
    assert crossing_count(s, everything, everything, simple=True) == len(s.simple_edges)
    left = b.boundary[:4]
    right = b.boundary[4:]
    a = crossing_count(s, left, right)
    assert a == crossing_count(s, right, left)
    tr = run_round(b, ParticleScheme.DEGREE, Stream(1).child(1))
    s1 = sample_gwrg(b, 1, Stream(1))
    assert crossing_count(tr, left, right, ball=b) == crossing_count(s1, left, right)
    with pytest.raises(ValueError):
        crossing_count(s, [0], right)
    with pytest.raises(ValueError):
        crossing_count(tr, left, right)


def test_mc_crossings_match_oracle():
    from gwrg.estimators import crossing_samples
    b = build_ball(make_host("btree2"), 4)
    xm = np.zeros(b.size, dtype=bool)
    xm[b.boundary[:8]] = True
    ym = b.is_boundary & ~xm
    s = crossing_samples(b, xm, ym, 2, trial_keys(0, "c", 4, 10_000))
    exact = oracle.expected_crossings(b, xm, ym, rounds=2)
    assert abs(s.mean() - exact) < 3 * s.std(ddof=1) / np.sqrt(len(s))


def test_multiplicity_total_on_small_tree():
    b = build_ball(make_host("tree-d3"), 2)
    for i in range(4):
        assert sample_gwrg(b, i, Stream(i)).total_multiplicity() == 6 * i
