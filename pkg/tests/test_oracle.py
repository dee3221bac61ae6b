import numpy as np
import pytest
import scipy.sparse as sp

from gwrg import oracle
from gwrg.ball import build_ball
from gwrg.host import LatticePoint, TreeWord, make_host
from gwrg.oracle import Network

from conftest import SMALL_FIXTURES


def path_network(k):
    return Network.from_edges(k, [(i, i + 1) for i in range(k - 1)])


def grid_network(m):
    idx = lambda r, c: r * m + c
    edges = [(idx(r, c), idx(r, c + 1)) for r in range(m) for c in range(m - 1)]
    edges += [(idx(r, c), idx(r + 1, c)) for r in range(m - 1) for c in range(m)]
    return Network.from_edges(m * m, edges)


@pytest.mark.parametrize("host,n", SMALL_FIXTURES)
def test_expected_visits_equal_degree(ball_cache, host, n):
    b = ball_cache(host, n)
    visits = oracle.expected_visits_constant_boundary(b)
    assert np.max(np.abs(visits - b.deg[b.interior])) < 1e-9


def test_series_and_parallel_laws():
    assert oracle.effective_conductance(path_network(3), 0, 2) == pytest.approx(0.5, abs=1e-12)
    assert oracle.effective_conductance(path_network(6), 0, 5) == pytest.approx(0.2, abs=1e-12)
    cycle = Network.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert oracle.effective_conductance(cycle, 0, 2) == pytest.approx(1.0, abs=1e-12)
    weighted = Network.from_edges(2, [(0, 1), (0, 1)], weights=[2.0, 3.0])
    assert oracle.effective_conductance(weighted, 0, 1) == pytest.approx(5.0)
    # corners of a 3x3 grid: resistance 3/2 by symmetry and series-parallel reduction
    assert oracle.effective_conductance(grid_network(3), 0, 8) == pytest.approx(2 / 3, abs=1e-12)


def test_dense_and_iterative_solvers_agree(monkeypatch):
    b = build_ball(make_host("z2"), 8)
    dense = oracle.killed_green(b, b.boundary, columns=[0, 5, 40])
    monkeypatch.setattr(oracle, "DENSE_LIMIT", 10)
    iterative = oracle.killed_green(b, b.boundary, columns=[0, 5, 40])
    assert np.max(np.abs(dense - iterative)) < 1e-9


def test_green_rows_and_absorption():
    b = build_ball(make_host("btree2"), 4)
    G = oracle.killed_green(b, b.boundary)
    # columns of killed vertices hold absorption probabilities summing to one
    assert np.allclose(G[:, b.boundary].sum(axis=1), 1.0)
    assert np.allclose(G[b.boundary][:, b.boundary], np.eye(len(b.boundary)))
    G2 = oracle.killed_green(b, b.boundary, interior_visits=True)
    assert np.all(G2[:, b.boundary] == 0)
    # symmetry of the reversible walk: c_x G(x, y) = c_y G(y, x)
    I = b.interior
    c = b.deg
    lhs = c[I][:, None] * G[np.ix_(I, I)]
    assert np.allclose(lhs, lhs.T, atol=1e-12)


def test_green_against_hitting_route():
    # G(x, y) = P_x[hit y] * G(y, y), with the hitting probability from a
    # separate harmonic solve
    b = build_ball(make_host("z2"), 4)
    x, y = 0, b.index_of(LatticePoint((1, 1)))
    G = oracle.killed_green(b, b.boundary, columns=[y])
    h = oracle.hitting_distribution(b, x, np.r_[y, b.boundary])[0]
    assert G[x, 0] == pytest.approx(h * G[y, 0], abs=1e-10)


def test_tree_green_at_root():
    b = build_ball(make_host("tree-d3"), 12)
    G = oracle.killed_green(b, b.boundary, columns=[0])
    assert G[0, 0] == pytest.approx(2.0, abs=1e-3)


@pytest.mark.parametrize("n", [3, 6, 9, 12])
def test_tree_escape_closed_form(n):
    b = build_ball(make_host("tree-d3"), n)
    assert oracle.escape_probability(b, [0], 0) == pytest.approx(0.5 / (1 - 2.0 ** -n), abs=1e-12)


def test_capacity_is_conductance_to_boundary():
    # short K into one vertex and the boundary into another: capacity = effective conductance
    for name, n, K in [("z2", 4, [0, 1]), ("btree2", 5, [0, 1, 2]), ("hyptree", 4, [0])]:
        b = build_ball(make_host(name), n)
        net = oracle.as_network(b)
        lab = np.arange(b.size)
        lab[np.asarray(K)] = K[0]
        lab[b.boundary] = b.boundary[0]
        _, lab = np.unique(lab, return_inverse=True)
        W = net.W.tocoo()
        keep = lab[W.row] != lab[W.col]
        m = lab.max() + 1
        short = Network(sp.coo_matrix((W.data[keep], (lab[W.row][keep], lab[W.col][keep])),
                                      shape=(m, m)))
        ceff = oracle.effective_conductance(short, lab[K[0]], lab[b.boundary[0]])
        assert oracle.capacity(b, K) == pytest.approx(ceff, abs=1e-10)


def test_capacity_monotone_in_K():
    b = build_ball(make_host("z3"), 3)
    nested = [[0], [0, 1], [0, 1, 2, 3], list(b.interior[:12])]
    caps = [oracle.capacity(b, K) for K in nested]
    assert all(a <= c + 1e-12 for a, c in zip(caps, caps[1:]))


@pytest.mark.parametrize("host,n,xs", [("z2", 3, [0, 5]), ("btree2", 4, [0, 3]),
                                       ("tree-d3", 3, [0, 2]), ("hyptree", 3, [0, 6]),
                                       ("lamplighter", 3, [0, 4]), ("z1", 3, [0])])
def test_reversibility_identity(host, n, xs):
    b = build_ball(make_host(host), n)
    for x in xs:
        lhs, rhs, res = oracle.reversibility_residual(b, [x], x)
        assert res <= 1e-9 and lhs > 0
    # a boundary vertex next to the contracted exterior
    x = int(b.boundary[0])
    assert oracle.reversibility_residual(b, [x], x)[2] <= 1e-9


def test_contracted_network_degrees():
    b = build_ball(make_host("z2"), 3)
    net, star = Network.contracted(b)
    assert np.allclose(net.c[:star], b.host_deg)
    assert net.c[star] == (b.host_deg - b.deg).sum()


def test_expected_crossings_two_routes():
    b = build_ball(make_host("btree2"), 5)
    xm = np.zeros(b.size, dtype=bool)
    xm[b.boundary[:10]] = True
    ym = np.zeros(b.size, dtype=bool)
    ym[b.boundary[6:]] = True
    C = oracle.boundary_conductance(b)
    x, y = xm[b.boundary].astype(float), ym[b.boundary].astype(float)
    z = x * y
    # direct sum over ordered (start, end) pairs of the exit matrix
    direct = sum(C[i, j] for i in range(len(x)) for j in range(len(x))
                 if (x[i] and y[j]) or (y[i] and x[j]))
    assert oracle.expected_crossings(b, xm, ym) == pytest.approx(direct, abs=1e-10)
    assert oracle.expected_crossings(b, xm, ym, rounds=3) == pytest.approx(3 * direct, abs=1e-9)
    assert np.allclose(C, C.T, atol=1e-12)
    assert np.allclose(oracle.exit_matrix(b).sum(axis=1), 1.0)


def test_binary_tree_branch_crossings_converge():
    from gwrg.ball import branch_mask
    vals = []
    for n in (8, 9, 10):
        b = build_ball(make_host("btree2"), n)
        root = TreeWord(())
        X = branch_mask(b, (root, TreeWord((0,)))) & b.is_boundary
        Y = branch_mask(b, (root, TreeWord((1,)))) & b.is_boundary
        vals.append(oracle.expected_crossings(b, X, Y))
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert vals[2] == pytest.approx(0.5, abs=2e-3)


def test_errors():
    with pytest.raises(oracle.SingularSystem):
        oracle.harmonic_extension(Network.from_edges(4, [(0, 1), (2, 3)]), [0], [1.0])
    with pytest.raises(ValueError):
        oracle.effective_conductance(path_network(3), 1, 1)
    with pytest.raises(ValueError):
        Network(sp.csr_matrix(np.array([[0, 1.0], [0, 0]])))
    with pytest.raises(oracle.OracleTooLarge):
        oracle.as_network(build_ball(make_host("z3"), 30))
    b = build_ball(make_host("z2"), 2)
    with pytest.raises(ValueError):
        oracle.escape_probability(b, [int(b.boundary[0])], int(b.boundary[0]))
    with pytest.raises(ValueError):
        oracle.killed_green(b, [])


def test_dump_triplets():
    text = oracle.dump_triplets(np.array([[0.0, 1.5], [2.0, 0.0]]))
    assert text.splitlines() == ["0 1 1.5", "1 0 2"]
