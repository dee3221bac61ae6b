"""Implicit infinite host graphs.

Each host exposes a root, a deterministic neighbor enumeration and the graph
distance to the root. Nothing is materialized globally; finite pieces are cut
out by :func:`gwrg.ball.build_ball`.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from typing import Union


class VertexEncodingError(ValueError):
    """A vertex payload is malformed or does not belong to the host."""


@dataclass(frozen=True, slots=True)
class TreeWord:
    """Sequence of downward child indices starting at the root."""

    word: tuple[int, ...] = ()


@dataclass(frozen=True, slots=True)
class LatticePoint:
    coords: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class LamplighterState:
    """Lamplighter at ``pos`` with the lamps in ``lamps`` switched on."""

    pos: int
    lamps: tuple[int, ...] = ()

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.lamps, self.lamps[1:])):
            raise VertexEncodingError(f"lamp set must be sorted and duplicate-free: {self.lamps}")


@dataclass(frozen=True, slots=True)
class HyperbolicVertex:
    """Vertex ``index`` (0 .. 2**level - 1, planar order) on ``level``."""

    level: int
    index: int


Vertex = Union[TreeWord, LatticePoint, LamplighterState, HyperbolicVertex]


def serialize_vertex(v: Vertex) -> str:
    if isinstance(v, TreeWord):
        return "T:" + ".".join(str(c) for c in v.word)
    if isinstance(v, LatticePoint):
        return "Z:(" + ",".join(str(c) for c in v.coords) + ")"
    if isinstance(v, LamplighterState):
        return f"L:p={v.pos};lamps=" + ",".join(str(c) for c in v.lamps)
    if isinstance(v, HyperbolicVertex):
        return f"H:lvl={v.level};idx={v.index}"
    raise VertexEncodingError(f"not a vertex: {v!r}")


_INT = r"-?\d+"
_LATTICE_RE = re.compile(rf"^Z:\(({_INT}(?:,{_INT})*)\)$")
_LAMP_RE = re.compile(rf"^L:p=({_INT});lamps=((?:{_INT}(?:,{_INT})*)?)$")
_HYP_RE = re.compile(r"^H:lvl=(\d+);idx=(\d+)$")
_TREE_RE = re.compile(r"^T:((?:\d+(?:\.\d+)*)?)$")


def parse_vertex(text: str) -> Vertex:
    text = text.strip()
    if m := _TREE_RE.match(text):
        body = m.group(1)
        return TreeWord(tuple(int(c) for c in body.split(".")) if body else ())
    if m := _LATTICE_RE.match(text):
        return LatticePoint(tuple(int(c) for c in m.group(1).split(",")))
    if m := _LAMP_RE.match(text):
        lamps = tuple(int(c) for c in m.group(2).split(",")) if m.group(2) else ()
        return LamplighterState(int(m.group(1)), lamps)
    if m := _HYP_RE.match(text):
        return HyperbolicVertex(int(m.group(1)), int(m.group(2)))
    raise VertexEncodingError(f"cannot parse vertex {text!r}")


class HostGraph:
    """Base class; subclasses fill in the adjacency of one host family."""

    name: str = "host"
    is_tree: bool = False
    transient: bool = True
    max_degree: int = 0

    @property
    def root(self) -> Vertex:
        raise NotImplementedError

    def validate(self, v: Vertex) -> None:
        raise NotImplementedError

    def _neighbors(self, v):
        raise NotImplementedError

    def _dist(self, v) -> int:
        raise NotImplementedError

    def neighbors(self, v: Vertex) -> list[Vertex]:
        self.validate(v)
        return self._neighbors(v)

    def degree(self, v: Vertex) -> int:
        return len(self.neighbors(v))

    def dist_to_root(self, v: Vertex) -> int:
        self.validate(v)
        return self._dist(v)

    def is_adjacent(self, u: Vertex, v: Vertex) -> bool:
        return v in self.neighbors(u)

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class RootedBAryTree(HostGraph):
    """Rooted tree: the root has ``b`` children, every other vertex ``b + 1`` neighbors."""

    is_tree = True

    def __init__(self, b: int = 2):
        if b < 2:
            raise ValueError("branching number must be >= 2")
        self.b = b
        self.name = f"btree{b}"
        self.max_degree = b + 1

    @property
    def root(self) -> TreeWord:
        return TreeWord(())

    def validate(self, v):
        if not isinstance(v, TreeWord) or any(not 0 <= c < self.b for c in v.word):
            raise VertexEncodingError(f"{v!r} is not a vertex of {self.name}")

    def _neighbors(self, v):
        out = [TreeWord(v.word[:-1])] if v.word else []
        out.extend(TreeWord(v.word + (c,)) for c in range(self.b))
        return out

    def _dist(self, v):
        return len(v.word)


class HomogeneousTree(RootedBAryTree):
    """The d-regular tree. The first letter of a word picks one of the root's
    ``d`` branches, later letters one of ``d - 1`` children."""

    def __init__(self, d: int = 3):
        if d < 3:
            raise ValueError("degree must be >= 3")
        self.d = d
        self.b = d - 1
        self.name = f"tree-d{d}"
        self.max_degree = d

    def validate(self, v):
        ok = isinstance(v, TreeWord) and (
            not v.word
            or (0 <= v.word[0] < self.d and all(0 <= c < self.d - 1 for c in v.word[1:]))
        )
        if not ok:
            raise VertexEncodingError(f"{v!r} is not a vertex of {self.name}")

    def _neighbors(self, v):
        if not v.word:
            return [TreeWord((c,)) for c in range(self.d)]
        out = [TreeWord(v.word[:-1])]
        out.extend(TreeWord(v.word + (c,)) for c in range(self.d - 1))
        return out


class Grid(HostGraph):
    def __init__(self, d: int = 2):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = d
        self.name = f"z{d}"
        self.max_degree = 2 * d
        self.transient = d >= 3

    @property
    def root(self) -> LatticePoint:
        return LatticePoint((0,) * self.d)

    def validate(self, v):
        if not isinstance(v, LatticePoint) or len(v.coords) != self.d:
            raise VertexEncodingError(f"{v!r} is not a vertex of {self.name}")

    def _neighbors(self, v):
        out = []
        for axis in range(self.d):
            for step in (1, -1):
                c = list(v.coords)
                c[axis] += step
                out.append(LatticePoint(tuple(c)))
        return out

    def _dist(self, v):
        return sum(abs(c) for c in v.coords)


class HyperbolicTree(HostGraph):
    """Binary tree plus a cycle through each level in planar order.

    Level 1 has two vertices, so its "cycle" is the single edge between them.
    """

    name = "hyptree"
    max_degree = 5

    @property
    def root(self) -> HyperbolicVertex:
        return HyperbolicVertex(0, 0)

    def validate(self, v):
        if not isinstance(v, HyperbolicVertex) or v.level < 0 or not 0 <= v.index < (1 << v.level):
            raise VertexEncodingError(f"{v!r} is not a vertex of {self.name}")

    def _neighbors(self, v):
        lvl, i = v.level, v.index
        out = []
        if lvl > 0:
            out.append(HyperbolicVertex(lvl - 1, i >> 1))
        out.append(HyperbolicVertex(lvl + 1, 2 * i))
        out.append(HyperbolicVertex(lvl + 1, 2 * i + 1))
        width = 1 << lvl
        for j in ((i - 1) % width, (i + 1) % width):
            if j != i:
                u = HyperbolicVertex(lvl, j)
                if u not in out:
                    out.append(u)
        return out

    def _dist(self, v):
        # cycle edges stay on a level, tree edges change it by one
        return v.level


class LamplighterZ(HostGraph):
    """Lamplighter over Z with the switch-or-walk generators (3-regular)."""

    name = "lamplighter"
    max_degree = 3

    def __init__(self):
        self._dist_cache: dict[LamplighterState, int] = {self.root: 0}
        self._frontier: list[LamplighterState] = [self.root]
        self._radius = 0

    @property
    def root(self) -> LamplighterState:
        return LamplighterState(0, ())

    def validate(self, v):
        if not isinstance(v, LamplighterState):
            raise VertexEncodingError(f"{v!r} is not a vertex of {self.name}")

    def _neighbors(self, v):
        lamps = set(v.lamps)
        lamps ^= {v.pos}
        return [
            LamplighterState(v.pos - 1, v.lamps),
            LamplighterState(v.pos + 1, v.lamps),
            LamplighterState(v.pos, tuple(sorted(lamps))),
        ]

    def _dist(self, v):
        # every state is reachable from the root, so this terminates
        while v not in self._dist_cache:
            self._grow()
        return self._dist_cache[v]

    def _grow(self):
        nxt = []
        self._radius += 1
        for u in self._frontier:
            for w in self._neighbors(u):
                if w not in self._dist_cache:
                    self._dist_cache[w] = self._radius
                    nxt.append(w)
        self._frontier = nxt


def bfs_distances(host: HostGraph, radius: int) -> dict:
    """Plain BFS from the root; used as an independent check of ``dist_to_root``."""
    dist = {host.root: 0}
    queue = deque([host.root])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for w in host._neighbors(u):
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


_HOST_RE = re.compile(r"^(?:btree(\d+)|tree-d(\d+)|z(\d+)|hyptree|lamplighter)$")


def make_host(name: str) -> HostGraph:
    """Build a host from its command-line name (``btree2``, ``tree-d3``, ``z2``, ...)."""
    m = _HOST_RE.match(name)
    if not m:
        raise ValueError(f"unknown host {name!r}")
    if m.group(1):
        return RootedBAryTree(int(m.group(1)))
    if m.group(2):
        return HomogeneousTree(int(m.group(2)))
    if m.group(3):
        return Grid(int(m.group(3)))
    if name == "hyptree":
        return HyperbolicTree()
    return LamplighterZ()


def neighbors(host: HostGraph, v: Vertex) -> list[Vertex]:
    return host.neighbors(v)


def dist_to_root(host: HostGraph, v: Vertex) -> int:
    return host.dist_to_root(v)
