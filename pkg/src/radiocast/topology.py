"""Network topologies for broadcast simulation.

A network is an undirected, connected graph without self-loops. Stations are
numbered 0..n-1 and node 0 is the broadcast originator by convention (callers
may override the origin when running trials).

Besides the generic constructors this module provides the two structured
families used by the lower-bound experiments:

* star-permutation graphs: a hub, an inner layer S, and an outer layer X wired
  through a derangement, so both S-neighbors of every outer node are
  interchangeable to any oblivious schedule;
* pair chains: a path of anchor nodes where consecutive anchors are joined by
  two parallel relay nodes instead of an edge, giving diameter 2*segments on
  3*segments+1 nodes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationFailureError, GraphFormatError, InvalidParameterError

__all__ = [
    "Graph",
    "make_graph",
    "make_path",
    "make_random_connected",
    "sample_derangement",
    "make_star_permutation",
    "make_pair_chain",
    "bfs_from",
    "diameter",
    "read_edge_list",
    "write_edge_list",
]


@dataclass(eq=False)
class Graph:
    """Undirected graph with per-node sorted adjacency.

    Attributes:
        n: number of nodes, numbered 0..n-1.
        adj: tuple of n sorted tuples; adj[u] lists the neighbors of u.
    """

    n: int
    adj: tuple[tuple[int, ...], ...]
    _diameter: int | None = field(default=None, repr=False, compare=False)

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.adj) // 2

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (u, v) pairs with u < v, lexicographically sorted."""
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def degree(self, v: int) -> int:
        return len(self.adj[v])


def make_graph(n: int, edges, require_connected: bool = True) -> Graph:
    """Build a validated Graph from an edge list.

    Rejects self-loops, duplicate edges, endpoints outside 0..n-1, and (by
    default) disconnected graphs.
    """
    if n < 1:
        raise InvalidParameterError(f"need at least one node, got n={n}")
    seen: set[tuple[int, int]] = set()
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"edge ({u},{v}) out of range for n={n}")
        if u == v:
            raise GraphFormatError(f"self-loop at node {u}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge ({key[0]},{key[1]})")
        seen.add(key)
        nbrs[u].append(v)
        nbrs[v].append(u)
    g = Graph(n=n, adj=tuple(tuple(sorted(nb)) for nb in nbrs))
    if require_connected and not _is_connected(g):
        raise GraphFormatError("graph is not connected")
    return g


def _bfs_distances(g: Graph, src: int) -> list[int]:
    """Distances from src; unreachable nodes get -1."""
    dist = [-1] * g.n
    dist[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        du = dist[u]
        for v in g.adj[u]:
            if dist[v] < 0:
                dist[v] = du + 1
                q.append(v)
    return dist


def _is_connected(g: Graph) -> bool:
    return all(d >= 0 for d in _bfs_distances(g, 0))


def bfs_from(g: Graph, src: int) -> list[int]:
    """Hop distances from src to every node.

    Raises InvalidParameterError for a bad src and GraphFormatError if some
    node is unreachable (the toolkit only works with connected graphs).
    """
    if not (0 <= src < g.n):
        raise InvalidParameterError(f"source {src} not in 0..{g.n - 1}")
    dist = _bfs_distances(g, src)
    if any(d < 0 for d in dist):
        raise GraphFormatError("graph is not connected")
    return dist


def diameter(g: Graph) -> int:
    """Exact diameter via all-pairs BFS (cached on the graph instance)."""
    if g._diameter is None:
        best = 0
        for src in range(g.n):
            best = max(best, max(_bfs_distances(g, src)))
        g._diameter = best
    return g._diameter


def make_path(n: int) -> Graph:
    """Path 0-1-...-(n-1); diameter n-1."""
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    return make_graph(n, [(i, i + 1) for i in range(n - 1)])


def make_random_connected(
    n: int, p: float, rng: np.random.Generator, max_attempts: int = 1000
) -> Graph:
    """Sample G(n, p) conditioned on connectivity, by rejection.

    Each attempt draws every unordered pair independently with probability p.
    Raises GenerationFailureError after max_attempts disconnected draws.
    """
    if n < 1:
        raise InvalidParameterError(f"need n >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise InvalidParameterError(f"edge probability must be in [0,1], got {p}")
    if n == 1:
        return Graph(n=1, adj=((),))
    iu, iv = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        mask = rng.random(iu.shape[0]) < p
        edges = list(zip(iu[mask].tolist(), iv[mask].tolist()))
        try:
            return make_graph(n, edges)
        except GraphFormatError:
            continue
    raise GenerationFailureError(
        f"no connected G({n},{p}) sample in {max_attempts} attempts"
    )


def sample_derangement(m: int, rng: np.random.Generator, max_attempts: int = 10000) -> list[int]:
    """Uniform fixed-point-free permutation of 0..m-1, by rejection.

    Acceptance probability tends to 1/e, so the default budget is generous.
    """
    if m < 2:
        raise InvalidParameterError(f"no derangement exists for m={m}")
    for _ in range(max_attempts):
        perm = rng.permutation(m)
        if not np.any(perm == np.arange(m)):
            return perm.tolist()
    raise GenerationFailureError(f"no derangement of {m} in {max_attempts} attempts")


def make_star_permutation(n: int, rng: np.random.Generator) -> Graph:
    """Hub-and-two-layer graph whose outer nodes have twin inner neighbors.

    Requires odd n with (n-1)/2 >= 2. Node 0 is the hub u; nodes 1..m are the
    inner layer S (m = (n-1)/2); nodes m+1..2m are the outer layer X. Edges:
    (u, s_i) and (s_i, x_i) for every i, plus (x_i, s_pi(i)) for a uniformly
    sampled derangement pi. Every outer node then has exactly two inner
    neighbors, and every inner node has degree 3 (hub, own outer node, and one
    outer node routed to it by pi). Diameter is at most 4.
    """
    if n < 5 or n % 2 == 0:
        raise InvalidParameterError(f"need odd n >= 5, got {n}")
    m = (n - 1) // 2
    pi = sample_derangement(m, rng)
    edges = []
    for i in range(m):
        s_i = 1 + i
        x_i = 1 + m + i
        edges.append((0, s_i))
        edges.append((s_i, x_i))
        edges.append((x_i, 1 + pi[i]))
    return make_graph(n, edges)


def make_pair_chain(segments: int) -> Graph:
    """Chain of anchors joined by parallel relay pairs.

    Anchors c_0..c_segments are nodes 0..segments. Segment i (1-based) adds two
    relay nodes x_i and y_i, each adjacent to both c_{i-1} and c_i; anchors are
    not directly adjacent. n = 3*segments + 1 and the diameter is 2*segments.
    The two relays of a segment see identical neighborhoods, so they can only
    be told apart by randomization.
    """
    if segments < 1:
        raise InvalidParameterError(f"need segments >= 1, got {segments}")
    edges = []
    nxt = segments + 1
    for i in range(1, segments + 1):
        x, y = nxt, nxt + 1
        nxt += 2
        for relay in (x, y):
            edges.append((i - 1, relay))
            edges.append((relay, i))
    return make_graph(3 * segments + 1, edges)


def write_edge_list(g: Graph, path: str) -> None:
    """Write the normalized edge-list format: header "n m", then "u v" lines.

    Edges are emitted with u < v in lexicographic order, so writing and
    re-reading a graph reproduces it exactly.
    """
    edges = g.edges()
    with open(path, "w") as fh:
        fh.write(f"{g.n} {len(edges)}\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path: str, require_connected: bool = True) -> Graph:
    """Parse the edge-list format written by write_edge_list.

    Blank lines and lines starting with '#' are ignored. Errors report the
    1-based line number of the offending input line.
    """
    header: tuple[int, int] | None = None
    edges: list[tuple[int, int]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"expected two integers, got {line!r}", lineno)
            try:
                a, b = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"expected two integers, got {line!r}", lineno)
            if header is None:
                if a < 1 or b < 0:
                    raise GraphFormatError(f"bad header n={a} m={b}", lineno)
                header = (a, b)
                continue
            if not (0 <= a < header[0] and 0 <= b < header[0]):
                raise GraphFormatError(f"edge ({a},{b}) out of range", lineno)
            if a == b:
                raise GraphFormatError(f"self-loop at node {a}", lineno)
            if a >= b:
                raise GraphFormatError(f"edges must satisfy u < v, got ({a},{b})", lineno)
            edges.append((a, b))
    if header is None:
        raise GraphFormatError("missing header line")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header announced {header[1]} edges, found {len(edges)}")
    return make_graph(header[0], edges, require_connected=require_connected)
