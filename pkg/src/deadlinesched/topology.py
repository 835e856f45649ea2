"""Network graphs, phi-hop interference conflict graphs, and topology generators.

A network is a directed graph whose links carry exact rational capacities
(packets per slot).  Two links conflict under the phi-hop model when their
endpoint sets are fewer than phi hops apart on the undirected support; the
conflict graph's independent sets are exactly the link sets that may be
activated together in one slot.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

MIS_VERTEX_GUARD = 50


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    capacity: Fraction

    def endpoints(self) -> tuple[int, int]:
        return (self.src, self.dst)


@dataclass
class NetworkGraph:
    """Directed link topology over integer node ids."""

    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    _index: dict[tuple[int, int], int] = field(init=False, repr=False)
    _adj: dict[int, list[int]] = field(init=False, repr=False)
    _dist: dict[int, dict[int, int]] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate node ids")
        index: dict[tuple[int, int], int] = {}
        adj: dict[int, list[int]] = {v: [] for v in self.nodes}
        for i, link in enumerate(self.links):
            if link.src not in node_set or link.dst not in node_set:
                raise ValueError(f"link {link.src}->{link.dst} has unknown endpoint")
            if link.capacity <= 0:
                raise ValueError("capacities must be positive")
            key = (link.src, link.dst)
            if key in index:
                raise ValueError(f"duplicate link {key}")
            index[key] = i
        for src, dst in index:
            if dst not in adj[src]:
                adj[src].append(dst)
            if src not in adj[dst]:
                adj[dst].append(src)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adj", {v: sorted(ns) for v, ns in adj.items()})
        if len(self.nodes) > 1 and len(self._bfs(self.nodes[0])) != len(self.nodes):
            raise ValueError("undirected support is not connected")

    def link_id(self, src: int, dst: int) -> int:
        try:
            return self._index[(src, dst)]
        except KeyError:
            raise KeyError(f"unknown link ({src},{dst})") from None

    def has_link(self, src: int, dst: int) -> bool:
        return (src, dst) in self._index

    def neighbors(self, node: int) -> list[int]:
        return self._adj[node]

    def _bfs(self, origin: int) -> dict[int, int]:
        dist = {origin: 0}
        frontier = deque([origin])
        while frontier:
            u = frontier.popleft()
            for v in self._adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    frontier.append(v)
        return dist

    def node_distance(self, u: int, v: int) -> int:
        if u not in self._dist:
            self._dist[u] = self._bfs(u)
        return self._dist[u][v]


@dataclass(frozen=True)
class InterferenceModel:
    """phi-hop interference: links fewer than phi hops apart conflict."""

    phi: int

    def __post_init__(self):
        if self.phi < 0:
            raise ValueError("phi must be nonnegative")

    @staticmethod
    def total(net: NetworkGraph) -> "InterferenceModel":
        return InterferenceModel(len(net.links) - 1)


@dataclass
class ConflictGraph:
    """Undirected conflict structure over link indices of a NetworkGraph."""

    n_vertices: int
    edges: frozenset[tuple[int, int]]
    _adj: tuple[frozenset[int], ...] = field(init=False, repr=False)

    def __post_init__(self):
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges:
            if a == b:
                raise ValueError("self-conflict is not allowed")
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", tuple(frozenset(s) for s in adj))

    def adjacent(self, a: int, b: int) -> bool:
        return b in self._adj[a]

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def max_degree(self) -> int:
        return max((len(s) for s in self._adj), default=0)

    def is_independent(self, vertices) -> bool:
        vs = list(vertices)
        return not any(self.adjacent(a, b) for i, a in enumerate(vs) for b in vs[i + 1 :])


def link_distance(net: NetworkGraph, e: int, e2: int) -> int:
    """Hop distance between the endpoint sets of two links (undirected)."""
    if not 0 <= e < len(net.links) or not 0 <= e2 < len(net.links):
        raise KeyError("unknown link id")
    a, b = net.links[e].endpoints(), net.links[e2].endpoints()
    return min(net.node_distance(u, v) for u in a for v in b)


def build_conflict_graph(net: NetworkGraph, model: InterferenceModel) -> ConflictGraph:
    n = len(net.links)
    edges = set()
    if model.phi > 0:
        for e in range(n):
            for e2 in range(e + 1, n):
                if link_distance(net, e, e2) < model.phi:
                    edges.add((e, e2))
    return ConflictGraph(n, frozenset(edges))


def _make_net(edges, capacity: Fraction) -> NetworkGraph:
    """Both directed links for every undirected edge, in the given order."""
    nodes: list[int] = []
    seen = set()
    links = []
    for u, v in edges:
        for w in (u, v):
            if w not in seen:
                seen.add(w)
                nodes.append(w)
        links.append(Link(u, v, capacity))
        links.append(Link(v, u, capacity))
    return NetworkGraph(tuple(nodes), tuple(links))


def line(n: int, capacity: Fraction = Fraction(1)) -> NetworkGraph:
    if n < 2:
        raise ValueError("line needs at least 2 nodes")
    return _make_net([(i, i + 1) for i in range(1, n)], capacity)


def grid(rows: int, cols: int, capacity: Fraction = Fraction(1)) -> NetworkGraph:
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ValueError("degenerate grid")
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1))
            if r + 1 < rows:
                edges.append((u, u + cols))
    return _make_net(edges, capacity)


def sink_tree(depth: int, degree: int, capacity: Fraction = Fraction(1)) -> NetworkGraph:
    if depth < 1 or degree < 1:
        raise ValueError("degenerate tree")
    edges = []
    level = [0]
    next_id = 1
    for _ in range(depth):
        nxt = []
        for parent in level:
            for _ in range(degree):
                edges.append((parent, next_id))
                nxt.append(next_id)
                next_id += 1
        level = nxt
    return _make_net(edges, capacity)


def grid_random(
    rows: int, cols: int, p: float, seed: int, capacity: Fraction = Fraction(1)
) -> NetworkGraph:
    """Grid whose undirected edges each fail with probability p; resamples
    until the surviving graph is connected."""
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0,1]")
    full = grid(rows, cols)
    edges = sorted({tuple(sorted(l.endpoints())) for l in full.links})
    rng = random.Random(seed)
    for _ in range(10000):
        kept = [e for e in edges if rng.random() >= p]
        if not kept:
            continue
        if len({v for e in kept for v in e}) != rows * cols:
            continue
        try:
            return _make_net(kept, capacity)
        except ValueError:
            continue
    raise RuntimeError("could not sample a connected grid; p too high?")


def generate_topology(kind: str, *args, **kwargs) -> NetworkGraph:
    makers = {"line": line, "grid": grid, "sink_tree": sink_tree, "grid_random": grid_random}
    try:
        maker = makers[kind]
    except KeyError:
        raise ValueError(f"unknown topology kind {kind!r}") from None
    return maker(*args, **kwargs)


def maximal_independent_sets(cg: ConflictGraph) -> list[frozenset[int]]:
    """All maximal independent sets, i.e. maximal cliques of the complement
    (Bron-Kerbosch with pivoting)."""
    n = cg.n_vertices
    if n > MIS_VERTEX_GUARD:
        raise ValueError(f"conflict graph too large ({n} > {MIS_VERTEX_GUARD} vertices)")
    # complement adjacency
    comp = [frozenset(set(range(n)) - cg.neighbors(v) - {v}) for v in range(n)]
    out: list[frozenset[int]] = []

    def expand(r: set[int], p: set[int], x: set[int]):
        if not p and not x:
            out.append(frozenset(r))
            return
        pivot = max(p | x, key=lambda v: len(p & comp[v]))
        for v in sorted(p - comp[pivot]):
            expand(r | {v}, p & comp[v], x & comp[v])
            p.remove(v)
            x.add(v)

    expand(set(), set(range(n)), set())
    return sorted(out, key=sorted)
