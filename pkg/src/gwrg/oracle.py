"""Exact linear-algebra ground truth on small finite networks.

Everything reduces to Dirichlet problems for the graph Laplacian
``L = C - W`` restricted to the free vertices. Systems with fewer than
``DENSE_LIMIT`` unknowns are solved by dense LU; larger ones by conjugate
gradients with a Jacobi preconditioner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .ball import Ball

DENSE_LIMIT = 2000
ORACLE_CAP = 20_000
CG_RTOL = 1e-12
RESIDUAL_TOL = 1e-9


class SingularSystem(np.linalg.LinAlgError):
    pass


class OracleTooLarge(MemoryError):
    pass


@dataclass(frozen=True)
class LinearSystemSolution:
    values: np.ndarray
    residual: float


class Network:
    """Finite multigraph with symmetric conductances ``W`` (parallel edges add up)."""

    def __init__(self, W):
        W = sp.csr_matrix(W, dtype=np.float64)
        if W.shape[0] != W.shape[1]:
            raise ValueError("conductance matrix must be square")
        if W.shape[0] > ORACLE_CAP:
            raise OracleTooLarge(f"{W.shape[0]} vertices exceeds the oracle cap of {ORACLE_CAP}")
        if W.nnz and abs(W - W.T).max() > 1e-12:
            raise ValueError("conductances must be symmetric")
        if W.nnz and W.data.min() < 0:
            raise ValueError("conductances must be nonnegative")
        self.W = W
        self.c = np.asarray(W.sum(axis=1)).ravel()

    @property
    def size(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_edges(cls, n: int, edges, weights=None) -> "Network":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        w = np.ones(len(edges)) if weights is None else np.asarray(weights, dtype=float)
        W = sp.coo_matrix((np.r_[w, w], (np.r_[edges[:, 0], edges[:, 1]],
                                          np.r_[edges[:, 1], edges[:, 0]])), shape=(n, n))
        return cls(W.tocsr())

    @classmethod
    def from_ball(cls, ball: Ball) -> "Network":
        if ball.size > ORACLE_CAP:
            raise OracleTooLarge(f"ball has {ball.size} vertices; use Monte Carlo")
        rows = np.repeat(np.arange(ball.size), ball.deg)
        W = sp.csr_matrix((np.ones(len(rows)), (rows, ball.nbr_idx)), shape=(ball.size,) * 2)
        return cls(W)

    @classmethod
    def contracted(cls, ball: Ball) -> tuple["Network", int]:
        """The ball plus one vertex ``*`` standing for the contracted exterior.

        A boundary vertex ``b`` is joined to ``*`` by ``host_deg(b) - deg(b)``
        parallel edges. Returns the network and the index of ``*``.
        """
        base = cls.from_ball(ball).W.tocoo()
        star = ball.size
        mult = (ball.host_deg - ball.deg).astype(float)
        out = np.flatnonzero(mult > 0)
        rows = np.r_[base.row, out, np.full(len(out), star)]
        cols = np.r_[base.col, np.full(len(out), star), out]
        vals = np.r_[base.data, mult[out], mult[out]]
        W = sp.coo_matrix((vals, (rows, cols)), shape=(star + 1,) * 2)
        return cls(W.tocsr()), star

    def laplacian(self) -> sp.csr_matrix:
        return (sp.diags(self.c) - self.W).tocsr()

    def transition(self) -> sp.csr_matrix:
        inv = np.divide(1.0, self.c, out=np.zeros_like(self.c), where=self.c > 0)
        return (sp.diags(inv) @ self.W).tocsr()


def as_network(obj) -> Network:
    if isinstance(obj, Network):
        return obj
    if isinstance(obj, Ball):
        return Network.from_ball(obj)
    raise TypeError(f"expected a Ball or Network, got {type(obj).__name__}")


def _check_reaches_fixed(net: Network, free: np.ndarray):
    """Each component of the free subgraph must touch a fixed vertex."""
    sub = net.W[free][:, free]
    ncomp, labels = connected_components(sub, directed=False)
    leak = np.asarray(net.W[free].sum(axis=1)).ravel() - np.asarray(sub.sum(axis=1)).ravel()
    touched = np.zeros(ncomp, dtype=bool)
    touched[labels[leak > 0]] = True
    if not touched.all():
        raise SingularSystem("some free vertices cannot reach the fixed set")


def solve_free(net: Network, free: np.ndarray, rhs: np.ndarray) -> LinearSystemSolution:
    """Solve ``L[free, free] X = rhs`` for one or several right-hand sides."""
    free = np.asarray(free, dtype=np.int64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if len(free) == 0:
        return LinearSystemSolution(np.zeros((0,) + rhs.shape[1:]), 0.0)
    _check_reaches_fixed(net, free)
    A = net.laplacian()[free][:, free]
    if len(free) < DENSE_LIMIT:
        X = scipy.linalg.solve(A.toarray(), rhs, assume_a="pos")
    else:
        M = sp.diags(1.0 / A.diagonal())
        cols = rhs.reshape(len(free), -1)
        X = np.empty_like(cols)
        for k in range(cols.shape[1]):
            X[:, k], info = cg(A, cols[:, k], rtol=CG_RTOL, atol=0.0, M=M, maxiter=20 * len(free))
            if info != 0:
                raise SingularSystem(f"conjugate gradients did not converge (info={info})")
        X = X.reshape(rhs.shape)
    R = A @ X - rhs
    scale = max(np.abs(rhs).max(), 1e-300)
    residual = float(np.abs(R).max() / scale)
    if residual > RESIDUAL_TOL or not np.all(np.isfinite(X)):
        raise SingularSystem(f"relative residual {residual:.2e} exceeds {RESIDUAL_TOL}")
    return LinearSystemSolution(X, residual)


def _mask(size, idx):
    m = np.zeros(size, dtype=bool)
    m[np.asarray(idx, dtype=np.int64)] = True
    return m


def harmonic_extension(net: Network, fixed, values) -> LinearSystemSolution:
    """Extend boundary data on ``fixed`` harmonically to all other vertices.

    ``values`` has shape (len(fixed),) or (len(fixed), k).
    """
    fixed = np.asarray(fixed, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    free = np.flatnonzero(~_mask(net.size, fixed))
    rhs = net.W[free][:, fixed] @ values
    sol = solve_free(net, free, rhs)
    out = np.zeros((net.size,) + values.shape[1:])
    out[fixed] = values
    out[free] = sol.values
    return LinearSystemSolution(out, sol.residual)


def hitting_distribution(obj, start: int, targets) -> np.ndarray:
    """Law of the first vertex of ``targets`` hit by a walk from ``start`` (time 0 included)."""
    net = as_network(obj)
    targets = np.asarray(targets, dtype=np.int64)
    if len(targets) == 0:
        raise ValueError("target set must be nonempty")
    hit = np.flatnonzero(targets == start)
    if len(hit):
        out = np.zeros(len(targets))
        out[hit[0]] = 1.0
        return out
    H = harmonic_extension(net, targets, np.eye(len(targets))).values
    return H[start]


def first_return_distribution(obj, start: int, targets) -> np.ndarray:
    """Law of X_tau, tau the first time >= 1 in ``targets``."""
    net = as_network(obj)
    targets = np.asarray(targets, dtype=np.int64)
    H = harmonic_extension(net, targets, np.eye(len(targets))).values
    P = net.transition()
    return np.asarray(P[start] @ H).ravel()


def exit_matrix(ball: Ball) -> np.ndarray:
    """``E[a, b]``: probability that the walk from boundary vertex ``a`` first
    returns to the boundary at ``b`` (rows and columns in ``ball.boundary`` order)."""
    net = as_network(ball)
    B = ball.boundary
    H = harmonic_extension(net, B, np.eye(len(B))).values
    return np.asarray(net.transition()[B] @ H)


def boundary_conductance(ball: Ball) -> np.ndarray:
    """Degree-weighted exit matrix ``d(a) E[a, b]``: expected one-round walks from a to b."""
    return ball.deg[ball.boundary][:, None] * exit_matrix(ball)


def expected_crossings(ball: Ball, x_mask, y_mask, rounds: int = 1) -> float:
    """Exact expected multiset count of walk-edges joining X to Y after ``rounds`` rounds.

    An edge with both ends in X and Y counts once, as in
    :func:`gwrg.sampler.crossing_count`.
    """
    net = as_network(ball)
    B = ball.boundary
    x = np.asarray(x_mask, dtype=float)[B]
    y = np.asarray(y_mask, dtype=float)[B]
    z = x * y
    if not x.any() or not y.any():
        return 0.0
    # C = W_BB + W_BI L_II^{-1} W_IB, applied to three vectors
    I = ball.interior
    W = net.W
    vecs = np.column_stack([x, y, z])
    inner = solve_free(net, I, W[I][:, B] @ vecs).values
    Cv = W[B][:, B] @ vecs + W[B][:, I] @ inner
    total = x @ Cv[:, 1] + y @ Cv[:, 0] - z @ Cv[:, 2]
    return float(rounds * total)


def killed_green(obj, kill, columns=None, interior_visits=False) -> np.ndarray:
    """Green matrix ``(I - P_kill)^{-1}`` of the walk absorbed on ``kill``.

    ``G[x, y]`` is the expected number of times ``0 <= t <= T`` with
    ``X_t = y``, T the absorption time. For ``y`` in ``kill`` that is the
    probability of being absorbed at ``y``; rows of killed vertices are unit
    vectors. With ``interior_visits`` the columns of ``kill`` are zeroed.
    ``columns`` restricts the output to those columns (shape V x len(columns)).
    """
    net = as_network(obj)
    km = _mask(net.size, kill)
    if not km.any():
        raise ValueError("kill set must be nonempty")
    free = np.flatnonzero(~km)
    cols = np.arange(net.size) if columns is None else np.asarray(columns, dtype=np.int64)
    # right-hand side: d_y e_y for free y, W[:, y] for killed y
    rhs = np.zeros((len(free), len(cols)))
    pos = np.full(net.size, -1)
    pos[free] = np.arange(len(free))
    for k, y in enumerate(cols):
        if km[y]:
            if not interior_visits:
                rhs[:, k] = net.W[free][:, [y]].toarray().ravel()
        else:
            rhs[pos[y], k] = net.c[y]
    sol = solve_free(net, free, rhs).values
    G = np.zeros((net.size, len(cols)))
    G[free] = sol
    for k, y in enumerate(cols):
        if km[y] and not interior_visits:
            G[y, k] = 1.0
    return G


def expected_visits_constant_boundary(ball: Ball) -> np.ndarray:
    """Expected visits to each interior vertex when ``d(b)`` particles start at
    every boundary vertex ``b`` and stop at their first return to the boundary.

    Returned in ``ball.interior`` order.
    """
    net = as_network(ball)
    I, B = ball.interior, ball.boundary
    if len(I) == 0:
        return np.zeros(0)
    # particles from b take their first step with weight W[b, z]; afterwards
    # visits to x accrue as in the Green function killed at the boundary
    launch = np.asarray(net.W[B][:, I].sum(axis=0)).ravel()
    G = killed_green(net, B, columns=I)[I]
    return launch @ G


def effective_conductance(obj, a: int, b: int) -> float:
    """Dissipated energy with unit potential drop from ``a`` to ``b``."""
    if a == b:
        raise ValueError("effective conductance needs two distinct vertices")
    net = as_network(obj)
    ncomp, labels = connected_components(net.W, directed=False)
    if labels[a] != labels[b]:
        raise SingularSystem("a and b are not connected")
    # vertices outside the a-b component float; pin them to zero
    other = np.flatnonzero(labels != labels[a])
    fixed = np.r_[a, b, other].astype(np.int64)
    vals = np.r_[1.0, 0.0, np.zeros(len(other))]
    h = harmonic_extension(net, fixed, vals).values
    W = net.W.tocoo()
    return float(0.5 * np.sum(W.data * (h[W.row] - h[W.col]) ** 2))


def escape_probability(obj, K, x: int, absorb=None) -> float:
    """Probability that the walk from ``x`` in ``K`` reaches ``absorb`` (the
    ball boundary by default) before returning to ``K``."""
    K = np.asarray(K, dtype=np.int64)
    if x not in set(K.tolist()):
        raise ValueError("x must belong to K")
    if absorb is None:
        if not isinstance(obj, Ball):
            raise ValueError("absorbing set required for a bare network")
        if obj.is_boundary[K].any():
            raise ValueError("K must stay inside the ball, away from its boundary")
        absorb = obj.boundary
    net = as_network(obj)
    absorb = np.asarray(absorb, dtype=np.int64)
    fixed = np.r_[K, absorb]
    h = harmonic_extension(net, fixed, np.r_[np.zeros(len(K)), np.ones(len(absorb))]).values
    return float((net.transition()[x] @ h)[0])


def reversibility_residual(ball: Ball, K, x: int) -> tuple[float, float, float]:
    """Both sides of ``c_x P_x[X_tau = *] = c_* P_*[X_tau = x]`` on the contracted ball.

    tau is the first time >= 1 in ``K`` plus ``*``. Returns (lhs, rhs, |lhs - rhs|).
    """
    net, star = Network.contracted(ball)
    K = np.asarray(K, dtype=np.int64)
    if x not in set(K.tolist()):
        raise ValueError("x must belong to K")
    P = net.transition()
    fixed = np.r_[K, star]
    to_star = harmonic_extension(net, fixed, np.r_[np.zeros(len(K)), 1.0]).values
    to_x = harmonic_extension(net, fixed, np.r_[(K == x).astype(float), 0.0]).values
    lhs = net.c[x] * float((P[x] @ to_star)[0])
    rhs = net.c[star] * float((P[star] @ to_x)[0])
    return lhs, rhs, abs(lhs - rhs)


def capacity(ball: Ball, K) -> float:
    """Sum of the equilibrium measure of ``K`` (escape to the ball boundary)."""
    return float(sum(ball.deg[x] * escape_probability(ball, K, x) for x in np.asarray(K)))


def dump_triplets(M) -> str:
    """Plain-text ``row col value`` dump of a (sparse or dense) matrix."""
    C = sp.coo_matrix(M)
    return "".join(f"{r} {c} {v:.17g}\n" for r, c, v in zip(C.row, C.col, C.data))
