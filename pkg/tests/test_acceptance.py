"""The ten acceptance criteria, one test each, at their stated tolerances.

Every test prints (and logs to the terminal summary) one PASS/FAIL line.
"""

import math

import numpy as np

from gwrg import cli, estimators as est, oracle
from gwrg.ball import branch_mask, build_ball
from gwrg.host import TreeWord, make_host
from gwrg.oracle import Network
from gwrg.rng import trial_keys
from gwrg.stats import connectivity_campaign, linear_fit, stats_campaign
from gwrg.walks import ParticleScheme, run_rounds, visit_counts

from conftest import ACCEPTANCE_LINES

ROOT = TreeWord(())


def report(number, title, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def within_3se(samples, exact):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / np.sqrt(len(samples))
    return abs(samples.mean() - exact) <= 3 * se + 1e-12, samples.mean(), se


def test_01_connectivity_time_fit():
    host = make_host("btree2")
    pts, censored = [], 0
    for n in range(2, 9):
        ball = build_ball(host, n)
        tau, _, cens = connectivity_campaign(ball, ParticleScheme.DEGREE,
                                             trial_keys(0, "connectivity", n, 1000), 10_000)
        censored += int(cens.sum())
        pts.append((n, tau[~cens].mean()))
    fit = linear_fit(pts)
    ok = 0.20 <= fit.slope <= 0.32 and fit.adj_r2 >= 0.98
    report(1, "connectivity-time fit", ok,
           f"slope={fit.slope:.4f} (target [0.20, 0.32]) intercept={fit.intercept:.3f} "
           f"adjR2={fit.adj_r2:.4f} censored={censored} means="
           + ",".join(f"{m:.3f}" for _, m in pts))


def test_02_doyle_snell_identity():
    fixtures = [("z1", 3), ("z2", 3), ("btree2", 4), ("tree-d3", 3), ("hyptree", 3)]
    worst_exact, worst_z, ok = 0.0, 0.0, True
    for name, n in fixtures:
        ball = build_ball(make_host(name), n)
        visits = oracle.expected_visits_constant_boundary(ball)
        err = float(np.max(np.abs(visits - ball.deg[ball.interior])))
        worst_exact = max(worst_exact, err)
        ok &= err <= 1e-9
        rounds = 10_000
        tr = run_rounds(ball, ParticleScheme.DEGREE, trial_keys(0, "doyle-snell", n, rounds),
                        record=True)
        vc = visit_counts(tr, ball, per_group=rounds)
        for x in ball.interior:
            good, mean, se = within_3se(vc[:, x], ball.deg[x])
            worst_z = max(worst_z, abs(mean - ball.deg[x]) / se)
            ok &= good
    report(2, "Doyle-Snell identity", ok,
           f"max exact error={worst_exact:.2e} (<=1e-9), max MC z={worst_z:.2f} (<=3)")


def test_03_naim_kernel_equals_conductance():
    path = Network.from_edges(3, [(0, 1), (1, 2)])
    cycle = Network.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    m = 3
    grid_edges = [(r * m + c, r * m + c + 1) for r in range(m) for c in range(m - 1)]
    grid_edges += [(r * m + c, (r + 1) * m + c) for r in range(m - 1) for c in range(m)]
    grid = Network.from_edges(9, grid_edges)
    cases = [("3-path", path, 0, 2), ("4-cycle", cycle, 0, 2), ("3x3 grid corners", grid, 0, 8)]
    parts, ok = [], True
    for label, net, x, y in cases:
        theta = est.boundary_pair_naim(net, x, y)
        ceff = oracle.effective_conductance(net, x, y)
        ok &= abs(theta - ceff) <= 1e-9
        parts.append(f"{label} theta={theta:.12f} C={ceff:.12f}")
    report(3, "Naim kernel equals effective conductance", ok, "; ".join(parts))


def _branch_sets(ball, a, b, c, d):
    X = branch_mask(ball, (a, b)) & ball.is_boundary
    Y = branch_mask(ball, (c, d)) & ball.is_boundary
    return X, Y


def test_04_crossing_convergence_and_divergence():
    host = make_host("btree2")
    disjoint = (ROOT, TreeWord((0,)), ROOT, TreeWord((1,)))
    # C = branch below 0.0, D = branch below 0; C is contained in D
    nested = (TreeWord((0,)), TreeWord((0, 0)), ROOT, TreeWord((0,)))
    ex = {}
    for n in (5, 9, 10):
        ball = build_ball(host, n)
        ex["d", n] = oracle.expected_crossings(ball, *_branch_sets(ball, *disjoint))
        ex["o", n] = oracle.expected_crossings(ball, *_branch_sets(ball, *nested))
    rel = abs(ex["d", 10] - ex["d", 9]) / ex["d", 9]
    ok = rel < 0.02 and ex["o", 10] > 2 * ex["o", 5]
    worst = 0.0
    for n in range(2, 9):
        ball = build_ball(host, n)
        for kind, sets in (("d", disjoint), ("o", nested)):
            if n < 2 + (kind == "o"):
                continue
            X, Y = _branch_sets(ball, *sets)
            s = est.crossing_samples(ball, X, Y, 1, trial_keys(0, f"crossings-{kind}", n, 10_000))
            good, mean, se = within_3se(s, oracle.expected_crossings(ball, X, Y))
            worst = max(worst, abs(mean - oracle.expected_crossings(ball, X, Y)) / se)
            ok &= good
    report(4, "crossing convergence/divergence", ok,
           f"disjoint n9={ex['d', 9]:.5f} n10={ex['d', 10]:.5f} rel={rel:.4f} (<0.02); "
           f"nested n5={ex['o', 5]:.3f} n10={ex['o', 10]:.3f} (>2x); max MC z={worst:.2f}")


def test_05_reversibility_identity():
    fixtures = [("z2", 3, 0), ("btree2", 4, 0), ("btree2", 4, 5), ("tree-d3", 4, 2),
                ("hyptree", 3, 4), ("lamplighter", 3, 0), ("z3", 2, 0)]
    worst = 0.0
    for name, n, x in fixtures:
        ball = build_ball(make_host(name), n)
        worst = max(worst, est.reversibility_check(ball, [x], x))
    report(5, "reversibility identity", worst <= 1e-9,
           f"{len(fixtures)} fixtures, max residual={worst:.2e} (<=1e-9)")


def test_06_equilibrium_measure_limit():
    host = make_host("tree-d3")
    esc = {}
    for n in range(2, 13):
        esc[n] = oracle.escape_probability(build_ball(host, n), [0], 0)
    vals = [esc[n] for n in sorted(esc)]
    monotone = all(a >= b for a, b in zip(vals, vals[1:]))
    e12 = 3 * esc[12]
    ok = abs(esc[12] - 0.5) <= 1e-3 and abs(e12 - 1.5) <= 3e-3 and monotone
    parts = [f"esc(12)={esc[12]:.6f} e(12)={e12:.6f} monotone={monotone}"]
    for n, trials in ((6, 10_000), (12, 400)):
        rec = est.interlacement_intensity(host, [ROOT], [n], trials=trials, seed=0)[0]
        good = rec.agrees(3 * esc[n])
        ok &= good
        parts.append(f"mu(n={n})={rec.estimate:.4f}+-{rec.stderr:.4f} vs e={3 * esc[n]:.4f}")
    report(6, "equilibrium-measure limit", ok, "; ".join(parts))


def test_07_diameter_scaling():
    host = make_host("btree2")
    pts = []
    for n in range(3, 9):
        ball = build_ball(host, n)
        s = stats_campaign(ball, ParticleScheme.DEGREE, trial_keys(0, "stats", n, 1000), 1)
        pts.append((math.log(len(ball.boundary)), np.mean([r.diameter for r in s])))
    fit = linear_fit(pts)
    report(7, "diameter scaling", fit.adj_r2 >= 0.9,
           f"slope={fit.slope:.3f} adjR2={fit.adj_r2:.4f} (>=0.9)")


def test_08_isolated_vertex_proportionality():
    ok, parts = True, []
    for name in ("btree2", "z2"):
        frac = {}
        for n in (7, 8):
            ball = build_ball(make_host(name), n)
            s = stats_campaign(ball, ParticleScheme.DEGREE, trial_keys(0, "stats", n, 1000), 1)
            frac[n] = np.mean([r.isolated for r in s]) / len(ball.boundary)
        rel = abs(frac[8] - frac[7]) / frac[7]
        ok &= rel < 0.10
        parts.append(f"{name} n7={frac[7]:.4f} n8={frac[8]:.4f} rel={rel:.4f}")
    report(8, "isolated-vertex proportionality", ok, "; ".join(parts) + " (<0.10)")


def test_09_oracle_equivalence_suite(tmp_path, capsys):
    code = cli.main(["--experiment", "oracle-suite", "--trials", "10000",
                     "--out", str(tmp_path / "suite")])
    rows = (tmp_path / "suite.csv").read_text().splitlines()[1:]
    failed = [r for r in rows if r.endswith(",0")]
    capsys.readouterr()
    report(9, "oracle-equivalence suite", code == 0 and not failed and len(rows) > 0,
           f"exit={code} checks={len(rows)} failed={len(failed)}")


def test_10_determinism(tmp_path, capsys):
    runs = [
        ["--experiment", "stats", "--host", "z2", "--n", "3..5", "--trials", "2000"],
        ["--experiment", "connectivity", "--host", "btree2", "--n", "2..5", "--trials", "2000"],
        ["--experiment", "crossings", "--host", "btree2", "--n", "5", "--trials", "3000",
         "--format", "json"],
        ["--experiment", "interlacement", "--host", "tree-d3", "--n", "3..4", "--trials", "2000"],
        ["--experiment", "equilibrium", "--host", "z3", "--n", "3", "--trials", "2000"],
    ]
    same = True
    for k, args in enumerate(runs):
        blobs = []
        for threads in (1, 2, 8):
            out = tmp_path / f"run{k}_{threads}"
            assert cli.main(args + ["--seed", "11", "--threads", str(threads),
                                    "--out", str(out)]) == 0
            ext = "json" if "json" in args else "csv"
            blobs.append(out.with_name(out.name + "." + ext).read_bytes())
        same &= blobs[0] == blobs[1] == blobs[2]
    capsys.readouterr()
    report(10, "determinism across 1/2/8 workers", same, f"{len(runs)} experiments compared")
