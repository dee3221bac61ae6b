"""Finite balls G_n around the root of a host graph, in dense-index form."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .host import HostGraph, Vertex, serialize_vertex

DEFAULT_VERTEX_CAP = 5_000_000


class BallTooLarge(MemoryError):
    pass


class UnsupportedHost(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ball:
    """Induced subgraph on ``{v : d(v, o) <= n}``; vertex 0 is the root.

    Indices follow BFS order. ``nbr_ptr``/``nbr_idx`` is the CSR adjacency,
    ``deg`` the in-ball degree and ``host_deg`` the degree in the host.
    """

    host: HostGraph
    n: int
    vertices: list
    dist: np.ndarray
    nbr_ptr: np.ndarray
    nbr_idx: np.ndarray
    host_deg: np.ndarray
    index: dict = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.vertices)

    @cached_property
    def deg(self) -> np.ndarray:
        return np.diff(self.nbr_ptr)

    @cached_property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.dist == self.n)

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(self.dist < self.n)

    @cached_property
    def is_boundary(self) -> np.ndarray:
        return self.dist == self.n

    @cached_property
    def boundary_pos(self) -> np.ndarray:
        """Position of each vertex in ``boundary`` (-1 for interior vertices)."""
        pos = np.full(self.size, -1, dtype=np.int64)
        pos[self.boundary] = np.arange(len(self.boundary))
        return pos

    @cached_property
    def nbr_table(self) -> np.ndarray:
        """Neighbor indices padded with -1 to the maximum in-ball degree."""
        width = int(self.deg.max()) if self.size else 0
        table = np.full((self.size, max(width, 1)), -1, dtype=np.int64)
        rows = np.repeat(np.arange(self.size), self.deg)
        cols = np.arange(len(self.nbr_idx)) - np.repeat(self.nbr_ptr[:-1], self.deg)
        table[rows, cols] = self.nbr_idx
        return table

    def neighbors(self, i: int) -> np.ndarray:
        return self.nbr_idx[self.nbr_ptr[i]:self.nbr_ptr[i + 1]]

    def adjacency(self) -> list[list[int]]:
        return [self.neighbors(i).tolist() for i in range(self.size)]

    def index_of(self, v: Vertex) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise KeyError(f"{serialize_vertex(v)} is not in the ball of radius {self.n}") from None

    def edges(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v."""
        src = np.repeat(np.arange(self.size), self.deg)
        keep = src < self.nbr_idx
        return np.column_stack([src[keep], self.nbr_idx[keep]])

    def dump(self) -> str:
        lines = []
        for i, v in enumerate(self.vertices):
            nbrs = " ".join(str(j) for j in self.neighbors(i))
            lines.append(f"{i} {serialize_vertex(v)} : {nbrs}".rstrip())
        return "\n".join(lines) + "\n"


def build_ball(host: HostGraph, n: int, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Ball:
    if n < 1:
        raise ValueError("ball radius must be >= 1")
    root = host.root
    host.validate(root)
    index = {root: 0}
    vertices = [root]
    dist = [0]
    host_nbrs = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        nbrs = host._neighbors(vertices[i])
        host_nbrs.append(nbrs)
        if dist[i] == n:
            continue
        for w in nbrs:
            if w not in index:
                index[w] = len(vertices)
                vertices.append(w)
                dist.append(dist[i] + 1)
                queue.append(index[w])
                if len(vertices) > vertex_cap:
                    raise BallTooLarge(
                        f"ball of radius {n} in {host.name} exceeds {vertex_cap} vertices")
    # BFS pops in index order, so host_nbrs[i] belongs to vertex i
    ptr = [0]
    idx = []
    host_deg = []
    for nbrs in host_nbrs:
        host_deg.append(len(nbrs))
        idx.extend(index[w] for w in nbrs if w in index)
        ptr.append(len(idx))
    return Ball(
        host=host,
        n=n,
        vertices=vertices,
        dist=np.asarray(dist, dtype=np.int64),
        nbr_ptr=np.asarray(ptr, dtype=np.int64),
        nbr_idx=np.asarray(idx, dtype=np.int64),
        host_deg=np.asarray(host_deg, dtype=np.int64),
        index=index,
    )


def branch_mask(ball: Ball, edge: tuple[Vertex, Vertex]) -> np.ndarray:
    """Boolean mask over ball vertices of the component of ``G - uv`` containing ``v``."""
    if not ball.host.is_tree:
        raise UnsupportedHost(f"branches are only defined on tree hosts, not {ball.host.name}")
    u, v = edge
    iu, iv = ball.index_of(u), ball.index_of(v)
    if iv not in ball.neighbors(iu):
        raise ValueError(f"{serialize_vertex(u)} - {serialize_vertex(v)} is not an edge")
    # the ball of a tree is a subtree, so components of ball - uv are the
    # host components cut down to the ball
    seen = np.zeros(ball.size, dtype=bool)
    seen[iv] = True
    stack = [iv]
    while stack:
        a = stack.pop()
        for b in ball.neighbors(a):
            if not seen[b] and not (a == iv and b == iu):
                seen[b] = True
                stack.append(b)
    return seen


def boundary_partition_by_branch(ball: Ball, edge) -> tuple[np.ndarray, np.ndarray]:
    """Split the boundary into (inside branch, outside branch) vertex indices."""
    mask = branch_mask(ball, edge)
    b = ball.boundary
    return b[mask[b]], b[~mask[b]]
