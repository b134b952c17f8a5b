"""Synthetic network generators, community-based node reordering, edge-list IO.

All generators are pure functions of their arguments plus a seed and return a
validated :class:`Graph`. Randomness comes from ``numpy``'s PCG64 generator
(``np.random.default_rng``), so edge sets are reproducible for a given seed on
any platform running the same numpy stream; ports to other RNGs should test
distributional properties rather than exact edge sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import FormatError

__all__ = [
    "Graph",
    "gen_grid8",
    "gen_erdos_renyi",
    "gen_barabasi_albert",
    "gen_newman_watts",
    "gen_random_partition",
    "greedy_modularity_communities",
    "greedy_modularity_reorder",
    "write_edgelist",
    "read_edgelist",
]

SeedLike = int | Sequence[int] | np.random.SeedSequence | np.random.Generator


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph.

    ``edges`` is an ``(m, 2)`` int64 array with ``i < j`` per row, sorted
    lexicographically; ``degree`` is the per-node incident-edge count.
    """

    n: int
    edges: np.ndarray
    degree: np.ndarray

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Graph":
        """Normalize (orient i<j, dedupe, sort) and build the degree vector."""
        if n < 1:
            raise ValueError(f"node count must be positive, got {n}")
        arr = np.asarray(sorted({(min(i, j), max(i, j)) for i, j in pairs}), dtype=np.int64)
        if arr.size == 0:
            arr = np.empty((0, 2), dtype=np.int64)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise ValueError("edge endpoint out of range")
        if arr.size and np.any(arr[:, 0] == arr[:, 1]):
            raise ValueError("self-loops are not allowed")
        g = cls(n=n, edges=arr, degree=_degrees(n, arr))
        g.validate()
        return g

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def validate(self) -> None:
        """Check the structural invariants; raises ValueError on violation."""
        e = self.edges
        if e.ndim != 2 or e.shape[1] != 2:
            raise ValueError("edges must be an (m, 2) array")
        if e.size:
            if e.min() < 0 or e.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] >= e[:, 1]):
                raise ValueError("edges must satisfy i < j (no self-loops)")
            if len(np.unique(e, axis=0)) != len(e):
                raise ValueError("duplicate edges")
        if not np.array_equal(self.degree, _degrees(self.n, e)):
            raise ValueError("degree vector inconsistent with edge list")

    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form."""
        if self.num_edges == 0:
            return sp.csr_matrix((self.n, self.n))
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.num_edges)
        return sp.csr_matrix(
            (data, (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n),
        )

    def oriented_edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Both orientations of every edge, as (src, dst) index arrays."""
        i, j = self.edges[:, 0], self.edges[:, 1]
        return np.concatenate([i, j]), np.concatenate([j, i])

    def adjacency_dense(self) -> np.ndarray:
        return self.adjacency().toarray()


def _degrees(n: int, edges: np.ndarray) -> np.ndarray:
    d = np.zeros(n, dtype=np.int64)
    if edges.size:
        np.add.at(d, edges[:, 0], 1)
        np.add.at(d, edges[:, 1], 1)
    return d


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

_MOORE = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def gen_grid8(side: int) -> Graph:
    """N x N grid where each node connects to its Moore (8-cell) neighborhood.

    Node (r, c) has index r*N + c. Edge count is 4N^2 - 6N + 2.
    """
    if side < 2:
        raise ValueError(f"grid side must be >= 2, got {side}")
    pairs = []
    for r in range(side):
        for c in range(side):
            u = r * side + c
            for dr, dc in _MOORE:
                rr, cc = r + dr, c + dc
                if 0 <= rr < side and 0 <= cc < side:
                    v = rr * side + cc
                    if u < v:
                        pairs.append((u, v))
    return Graph.from_edges(side * side, pairs)


def gen_erdos_renyi(n: int, p: float, seed: SeedLike = 0) -> Graph:
    """G(n, p): each of the n(n-1)/2 pairs is an edge independently with
    probability p."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = _rng(seed)
    i, j = np.triu_indices(n, k=1)
    keep = rng.random(i.shape[0]) < p
    edges = np.stack([i[keep], j[keep]], axis=1).astype(np.int64)
    g = Graph(n=n, edges=edges, degree=_degrees(n, edges))
    g.validate()
    return g


def gen_barabasi_albert(n: int, m: int, seed: SeedLike = 0) -> Graph:
    """Preferential attachment starting from m isolated seed nodes.

    The first arriving node attaches to all m seeds; each later node attaches
    to m distinct existing nodes sampled proportionally to current degree
    (resampling on collision). Edge count is exactly (n - m) * m.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = _rng(seed)
    pairs: list[tuple[int, int]] = []
    # one entry per unit of degree; sampling uniformly from it is
    # degree-proportional sampling
    repeated: list[int] = []
    targets = list(range(m))
    for source in range(m, n):
        for t in targets:
            pairs.append((t, source))
        repeated.extend(targets)
        repeated.extend([source] * m)
        picked: set[int] = set()
        while len(picked) < m:
            picked.add(repeated[rng.integers(len(repeated))])
        targets = sorted(picked)
    return Graph.from_edges(n, pairs)


def gen_newman_watts(n: int, k: int, p: float, seed: SeedLike = 0) -> Graph:
    """Newman-Watts small world: ring lattice plus random shortcuts.

    Each node links to its floor(k/2) nearest neighbors on each side; then for
    every lattice edge, with probability p one shortcut is added from the
    edge's first endpoint to a uniformly chosen non-adjacent node. No edges
    are removed.
    """
    if not 2 <= k < n:
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = _rng(seed)
    half = k // 2
    adj: list[set[int]] = [set() for _ in range(n)]
    lattice: list[tuple[int, int]] = []
    for u in range(n):
        for off in range(1, half + 1):
            v = (u + off) % n
            if v not in adj[u]:
                adj[u].add(v)
                adj[v].add(u)
                lattice.append((u, v))
    for u, _ in lattice:
        if rng.random() < p:
            if len(adj[u]) >= n - 1:
                continue  # u already adjacent to everyone
            while True:
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            adj[u].add(w)
            adj[w].add(u)
    pairs = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return Graph.from_edges(n, pairs)


def gen_random_partition(
    sizes: Sequence[int],
    p_in: float,
    p_out: float,
    seed: SeedLike = 0,
) -> tuple[Graph, np.ndarray]:
    """Planted-partition graph.

    Within-block pairs become edges with probability p_in, cross-block pairs
    with p_out. Returns the graph and the per-node block index so callers can
    recover the planted communities.
    """
    if len(sizes) == 0:
        raise ValueError("sizes must be nonempty")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all block sizes must be >= 1, got {list(sizes)}")
    for name, prob in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {prob}")
    rng = _rng(seed)
    blocks = np.repeat(np.arange(len(sizes)), sizes)
    n = int(blocks.shape[0])
    i, j = np.triu_indices(n, k=1)
    prob = np.where(blocks[i] == blocks[j], p_in, p_out)
    keep = rng.random(i.shape[0]) < prob
    edges = np.stack([i[keep], j[keep]], axis=1).astype(np.int64)
    g = Graph(n=n, edges=edges, degree=_degrees(n, edges))
    g.validate()
    return g, blocks


def default_partition_sizes(n: int) -> list[int]:
    """Four-block split n/3, n/3, n/4, remainder (integer division)."""
    n1 = n // 3
    n2 = n // 3
    n3 = n // 4
    return [n1, n2, n3, n - n1 - n2 - n3]


# ---------------------------------------------------------------------------
# Community detection (greedy modularity / CNM) and node reordering
# ---------------------------------------------------------------------------


def greedy_modularity_communities(g: Graph) -> list[list[int]]:
    """Agglomerative modularity maximization (CNM).

    Starts from singleton communities and repeatedly merges the pair with the
    largest modularity gain until no merge has strictly positive gain. Ties
    are broken by the lexicographically lowest community-id pair, which makes
    the result deterministic. Isolated nodes stay singletons.
    """
    if g.n < 1:
        raise ValueError("graph must be nonempty")
    members: dict[int, list[int]] = {i: [i] for i in range(g.n)}
    if g.num_edges == 0:
        return [members[i] for i in sorted(members)]
    two_m = 2.0 * g.num_edges
    a = {i: g.degree[i] / two_m for i in range(g.n)}
    # e[u][v]: fraction of edges between communities u and v
    e: dict[int, dict[int, float]] = {i: {} for i in range(g.n)}
    for i, j in g.edges:
        i, j = int(i), int(j)
        e[i][j] = e[i].get(j, 0.0) + 1.0 / two_m
        e[j][i] = e[j].get(i, 0.0) + 1.0 / two_m

    while True:
        best_key: tuple[float, int, int] | None = None
        for u in e:
            au = a[u]
            for v, euv in e[u].items():
                if v <= u:
                    continue
                gain = 2.0 * (euv - au * a[v])
                key = (-gain, u, v)
                if best_key is None or key < best_key:
                    best_key = key
        if best_key is None or -best_key[0] <= 0.0:
            break
        _, u, v = best_key
        members[u].extend(members.pop(v))
        a[u] += a.pop(v)
        for w, evw in e.pop(v).items():
            if w == v:
                continue
            del e[w][v]
            if w == u:
                continue
            e[u][w] = e[u].get(w, 0.0) + evw
            e[w][u] = e[u][w]
        e[u].pop(v, None)

    comms = [sorted(ms) for ms in members.values()]
    comms.sort(key=lambda c: (-len(c), c[0]))
    return comms


def greedy_modularity_reorder(g: Graph) -> np.ndarray:
    """Node ordering that lists detected communities contiguously.

    Returns ``perm`` with ``perm[k]`` = original id of the node placed at
    position k; communities appear in descending size order, nodes within a
    community in ascending original id.
    """
    comms = greedy_modularity_communities(g)
    perm = np.concatenate([np.asarray(c, dtype=np.int64) for c in comms])
    assert np.array_equal(np.sort(perm), np.arange(g.n))
    return perm


# ---------------------------------------------------------------------------
# Edge-list files
# ---------------------------------------------------------------------------
#
# Format: first line "n=<int>"; then one "i j" pair per line with i < j in
# ascending order. Lines starting with '#' (after the first) are comments.


def write_edgelist(g: Graph, fh: IO[str], comments: Sequence[str] = ()) -> None:
    fh.write(f"n={g.n}\n")
    for line in comments:
        fh.write(f"# {line}\n")
    for i, j in g.edges:
        fh.write(f"{i} {j}\n")


def read_edgelist(fh: IO[str]) -> Graph:
    header = fh.readline().strip()
    if not header.startswith("n="):
        raise FormatError(f"expected first line 'n=<int>', got {header!r}")
    try:
        n = int(header[2:])
    except ValueError as exc:
        raise FormatError(f"bad node count in header {header!r}") from exc
    pairs = []
    for lineno, line in enumerate(fh, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"line {lineno}: expected 'i j', got {line!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError as exc:
            raise FormatError(f"line {lineno}: non-integer endpoint") from exc
    try:
        return Graph.from_edges(n, pairs)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
