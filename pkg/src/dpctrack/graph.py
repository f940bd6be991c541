"""
Network topologies for decentralized tracking.

A :class:`NetworkGraph` is an undirected, connected graph whose nodes each
own a block of ``p`` decision variables. Graphs are immutable values.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised for malformed or disconnected topologies."""


@dataclass(frozen=True)
class NetworkGraph:
    """
    Undirected connected graph with per-node block dimension.

    Parameters
    ----------
    n : int
        Number of nodes.
    p : int
        Dimension of each node's decision variable.
    edges : tuple of (int, int)
        Unordered node pairs stored as ``(i, j)`` with ``i < j``, sorted.
    positions : ndarray, optional
        ``(n, 2)`` node coordinates, kept when the graph was drawn at random.
    """

    n: int
    p: int
    edges: tuple[tuple[int, int], ...]
    positions: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one node")
        if self.p < 1:
            raise GraphError("block dimension p must be positive")
        canon = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise GraphError(f"self-loop at node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range")
            canon.append((min(i, j), max(i, j)))
        if len(set(canon)) != len(canon):
            raise GraphError("duplicate edge")
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(x)) for x in nbrs))
        if not self.is_connected():
            raise GraphError("graph is not connected")

    # populated in __post_init__
    neighbors: tuple[tuple[int, ...], ...] = field(init=False, compare=False, repr=False)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def dim(self) -> int:
        """Stacked dimension ``n * p``."""
        return self.n * self.p

    @property
    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.neighbors], dtype=int)

    @property
    def edge_array(self) -> np.ndarray:
        """Edges as an ``(l, 2)`` integer array (empty ``(0, 2)`` if none)."""
        return np.array(self.edges, dtype=int).reshape(-1, 2)

    def bfs_order(self, source: int = 0) -> list[int]:
        seen = [False] * self.n
        seen[source] = True
        order = [source]
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    order.append(v)
                    queue.append(v)
        return order

    def is_connected(self) -> bool:
        return len(self.bfs_order(0)) == self.n

    def hop_distances(self, source: int) -> np.ndarray:
        """Graph distance from ``source`` to every node."""
        dist = np.full(self.n, -1, dtype=int)
        dist[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def laplacian(self) -> np.ndarray:
        L = np.zeros((self.n, self.n))
        for i, j in self.edges:
            L[i, j] = L[j, i] = -1.0
        L[np.diag_indices(self.n)] = self.degrees
        return L

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {self.p}"]
        lines += [f"{i} {j}" for i, j in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edge_list(cls, text: str) -> "NetworkGraph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise GraphError("edge list must start with a 'n p' header line")
        n, p = int(rows[0][0]), int(rows[0][1])
        edges = []
        for r in rows[1:]:
            if len(r) != 2:
                raise GraphError(f"bad edge line: {' '.join(r)}")
            edges.append((int(r[0]), int(r[1])))
        return cls(n, p, tuple(edges))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_edge_list(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NetworkGraph":
        return cls.from_edge_list(Path(path).read_text(encoding="utf-8"))


def path_graph(n: int, p: int = 1) -> NetworkGraph:
    return NetworkGraph(n, p, tuple((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int, p: int = 1) -> NetworkGraph:
    return NetworkGraph(n, p, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def random_geometric_graph(n, range_, seed=None, p=1, max_tries=1000):
    """
    Draw a connected random geometric graph in the square ``[-1, 1]^2``.

    Nodes are placed uniformly at random and linked when their Euclidean
    distance is below `range_`. Disconnected draws are discarded and the
    positions redrawn from the same generator.

    Parameters
    ----------
    n : int
        Number of nodes.
    range_ : float
        Communication range.
    seed : int or numpy.random.Generator, optional
        Seed or generator for the node positions.
    p : int, optional
        Block dimension attached to the graph.
    max_tries : int, optional
        Number of draws before giving up.

    Returns
    -------
    NetworkGraph
        Graph with ``positions`` set.

    Raises
    ------
    GraphError
        If no connected graph is found within `max_tries` draws, which
        usually means the range is too small for `n`.
    """
    if n < 1:
        raise GraphError("n must be at least 1")
    if range_ <= 0:
        raise GraphError("range must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    for _ in range(max_tries):
        pos = rng.uniform(-1.0, 1.0, size=(n, 2))
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        ii, jj = np.nonzero(np.triu(dist < range_, k=1))
        try:
            return NetworkGraph(n, p, tuple(zip(ii.tolist(), jj.tolist())), positions=pos)
        except GraphError:
            continue
    raise GraphError(f"no connected graph after {max_tries} draws (n={n}, range={range_:g})")


def augmented_incidence(graph: NetworkGraph) -> np.ndarray:
    """
    Block edge-incidence matrix of shape ``(l p, n p)``.

    Edge ``e = (j, k)`` with ``j < k`` gets ``+I_p`` in column block ``j``
    and ``-I_p`` in column block ``k``.
    """
    p = graph.p
    A = np.zeros((graph.num_edges * p, graph.n * p))
    eye = np.eye(p)
    for e, (j, k) in enumerate(graph.edges):
        A[e * p:(e + 1) * p, j * p:(j + 1) * p] = eye
        A[e * p:(e + 1) * p, k * p:(k + 1) * p] = -eye
    return A
