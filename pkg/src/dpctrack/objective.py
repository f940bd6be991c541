"""
Time-varying separable objectives.

The global cost is ``F(y; t) = sum_i f_i(y_i; t) + sum_i g_ii(y_i; t)
+ sum_{(i,j) in E} g_ij(y_i, y_j; t)``. Node terms are evaluated for all
nodes at once on ``(n, p)`` block arrays, edge terms for all edges at once
on the pair of endpoint blocks. A block vector is simply an ``(n, p)``
ndarray whose row ``i`` belongs to node ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import NetworkGraph

ALL = slice(None)


def as_blocks(y, graph: NetworkGraph) -> np.ndarray:
    """View a stacked vector (or block array) as ``(n, p)`` blocks."""
    y = np.asarray(y, dtype=float)
    if y.shape == (graph.n, graph.p):
        return y
    if y.shape == (graph.dim,):
        return y.reshape(graph.n, graph.p)
    raise ValueError(f"expected shape ({graph.n}, {graph.p}) or ({graph.dim},), got {y.shape}")


# ---------------------------------------------------------------------------
# time signals
# ---------------------------------------------------------------------------

class Signal:
    """Array-valued function of time with its first two time derivatives."""

    shape: tuple[int, ...]

    def value(self, t):
        raise NotImplementedError

    def rate(self, t):
        raise NotImplementedError

    def accel(self, t):
        raise NotImplementedError

    def __getitem__(self, idx):
        raise NotImplementedError


class ConstantSignal(Signal):

    def __init__(self, value):
        self._v = np.asarray(value, dtype=float)
        self.shape = self._v.shape

    def value(self, t):
        return self._v

    def rate(self, t):
        return np.zeros(self.shape)

    def accel(self, t):
        return np.zeros(self.shape)

    def __getitem__(self, idx):
        return ConstantSignal(self._v[idx])

    # bounds used by the analytic constants
    max_rate = 0.0
    max_accel = 0.0


class CosineSignal(Signal):
    """``amplitude * cos(phase + omega * t)``, elementwise."""

    def __init__(self, amplitude, phase, omega):
        self.phase = np.asarray(phase, dtype=float)
        self.amplitude = np.broadcast_to(np.asarray(amplitude, dtype=float), self.phase.shape).copy()
        self.omega = float(omega)
        self.shape = self.phase.shape

    def value(self, t):
        return self.amplitude * np.cos(self.phase + self.omega * t)

    def rate(self, t):
        return -self.amplitude * self.omega * np.sin(self.phase + self.omega * t)

    def accel(self, t):
        return -self.amplitude * self.omega ** 2 * np.cos(self.phase + self.omega * t)

    def __getitem__(self, idx):
        return CosineSignal(self.amplitude[idx], self.phase[idx], self.omega)

    @property
    def max_rate(self):
        return np.abs(self.amplitude) * abs(self.omega)

    @property
    def max_accel(self):
        return np.abs(self.amplitude) * self.omega ** 2


def stack_signals(signals) -> Signal:
    """Stack per-node signals of equal kind along a new leading axis."""
    signals = list(signals)
    if all(isinstance(s, ConstantSignal) for s in signals):
        return ConstantSignal(np.stack([s.value(0.0) for s in signals]))
    if all(isinstance(s, CosineSignal) for s in signals):
        omegas = {s.omega for s in signals}
        if len(omegas) != 1:
            raise ValueError("cannot stack cosine signals with different frequencies")
        return CosineSignal(np.stack([s.amplitude for s in signals]),
                            np.stack([s.phase for s in signals]), omegas.pop())
    raise TypeError("can only stack signals of one kind (constant or cosine)")


# ---------------------------------------------------------------------------
# node terms
# ---------------------------------------------------------------------------

class NodeTerm:
    """
    Per-node function family ``phi_i(y_i; t)`` evaluated for many nodes.

    Every method takes ``Y`` of shape ``(len(idx), p)`` holding the blocks of
    the nodes selected by ``idx`` (all nodes by default).
    """

    n: int
    p: int

    def value(self, Y, t, idx=ALL):
        raise NotImplementedError

    def grad(self, Y, t, idx=ALL):
        raise NotImplementedError

    def hess(self, Y, t, idx=ALL):
        raise NotImplementedError

    def time_grad(self, Y, t, idx=ALL):
        """Mixed derivative ``d/dt grad_y``."""
        raise NotImplementedError


class ZeroTerm(NodeTerm):

    def __init__(self, n, p):
        self.n, self.p = n, p

    def _rows(self, Y):
        return np.asarray(Y).shape[0]

    def value(self, Y, t, idx=ALL):
        return np.zeros(self._rows(Y))

    def grad(self, Y, t, idx=ALL):
        return np.zeros_like(np.asarray(Y, dtype=float))

    def hess(self, Y, t, idx=ALL):
        return np.zeros((self._rows(Y), self.p, self.p))

    def time_grad(self, Y, t, idx=ALL):
        return np.zeros_like(np.asarray(Y, dtype=float))


def _sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# max |sigma''| over the real line, reached where sigma = (3 -/+ sqrt 3)/6
SIGMOID_CURVATURE_MAX = 1.0 / (6.0 * np.sqrt(3.0))


class QuadraticLogistic(NodeTerm):
    """
    ``1/2 (y - c(t))^T Q (y - c(t)) + sum_l log(1 + exp(b_l (y_l - d_l(t))))``.

    Parameters
    ----------
    Q : ndarray
        ``(n, p, p)`` symmetric positive definite matrices.
    b : ndarray
        ``(n, p)`` logistic slopes. Zero slopes give a pure quadratic.
    c, d : Signal
        Targets of shape ``(n, p)``.
    """

    def __init__(self, Q, b, c: Signal, d: Signal):
        self.Q = np.asarray(Q, dtype=float)
        if self.Q.ndim != 3 or self.Q.shape[1] != self.Q.shape[2]:
            raise ValueError("Q must have shape (n, p, p)")
        self.n, self.p = self.Q.shape[0], self.Q.shape[1]
        self.b = np.asarray(b, dtype=float).reshape(self.n, self.p)
        if c.shape != (self.n, self.p) or d.shape != (self.n, self.p):
            raise ValueError("c and d must have shape (n, p)")
        if not np.allclose(self.Q, np.swapaxes(self.Q, 1, 2), rtol=1e-12, atol=1e-12):
            raise ValueError("Q must be symmetric")
        if np.linalg.eigvalsh(self.Q).min() <= 0:
            raise ValueError("Q must be positive definite")
        self.c, self.d = c, d

    @classmethod
    def stack(cls, terms) -> "QuadraticLogistic":
        terms = list(terms)
        return cls(np.concatenate([u.Q for u in terms]), np.concatenate([u.b for u in terms]),
                   _cat_signal([u.c for u in terms]), _cat_signal([u.d for u in terms]))

    def _z(self, Y, t, idx):
        return self.b[idx] * (Y - self.d.value(t)[idx])

    def value(self, Y, t, idx=ALL):
        r = Y - self.c.value(t)[idx]
        quad = 0.5 * np.einsum("ni,nij,nj->n", r, self.Q[idx], r)
        return quad + np.logaddexp(0.0, self._z(Y, t, idx)).sum(axis=-1)

    def grad(self, Y, t, idx=ALL):
        r = Y - self.c.value(t)[idx]
        return np.einsum("nij,nj->ni", self.Q[idx], r) + self.b[idx] * _sigmoid(self._z(Y, t, idx))

    def hess(self, Y, t, idx=ALL):
        s = _sigmoid(self._z(Y, t, idx))
        curv = self.b[idx] ** 2 * s * (1.0 - s)
        H = self.Q[idx].copy()
        ii = np.arange(self.p)
        H[:, ii, ii] += curv
        return H

    def time_grad(self, Y, t, idx=ALL):
        s = _sigmoid(self._z(Y, t, idx))
        curv = self.b[idx] ** 2 * s * (1.0 - s)
        return -np.einsum("nij,nj->ni", self.Q[idx], self.c.rate(t)[idx]) - curv * self.d.rate(t)[idx]

    def curvature_interval(self):
        """Per-node ``[lambda_min(Q), lambda_max(Q) + max_l b_l^2 / 4]``."""
        ev = np.linalg.eigvalsh(self.Q)
        return ev[:, 0], ev[:, -1] + (self.b ** 2).max(axis=1) / 4.0


def _cat_signal(signals):
    signals = list(signals)
    if all(isinstance(s, ConstantSignal) for s in signals):
        return ConstantSignal(np.concatenate([s.value(0.0) for s in signals]))
    if all(isinstance(s, CosineSignal) for s in signals):
        omegas = {s.omega for s in signals}
        if len(omegas) != 1:
            raise ValueError("cannot combine cosine signals with different frequencies")
        return CosineSignal(np.concatenate([s.amplitude for s in signals]),
                            np.concatenate([s.phase for s in signals]), omegas.pop())
    raise TypeError("can only combine signals of one kind (constant or cosine)")


class LeastSquaresFit(NodeTerm):
    """``(h_i^T y_i - z_i(t))^2 / (2 sigma_i)`` for scalar measurements."""

    def __init__(self, regressors, noise_vars, z: Signal):
        self.h = np.atleast_2d(np.asarray(regressors, dtype=float))
        self.n, self.p = self.h.shape
        self.s = np.asarray(noise_vars, dtype=float).reshape(self.n)
        if np.any(self.s <= 0):
            raise ValueError("noise variances must be positive")
        if z.shape != (self.n,):
            raise ValueError(f"measurements must have shape ({self.n},), got {z.shape}")
        self.z = z

    def _res(self, Y, t, idx):
        return (np.einsum("ni,ni->n", self.h[idx], Y) - self.z.value(t)[idx]) / self.s[idx]

    def value(self, Y, t, idx=ALL):
        r = np.einsum("ni,ni->n", self.h[idx], Y) - self.z.value(t)[idx]
        return 0.5 * r ** 2 / self.s[idx]

    def grad(self, Y, t, idx=ALL):
        return self.h[idx] * self._res(Y, t, idx)[:, None]

    def hess(self, Y, t, idx=ALL):
        h = self.h[idx]
        return np.einsum("ni,nj->nij", h, h) / self.s[idx][:, None, None]

    def time_grad(self, Y, t, idx=ALL):
        return -self.h[idx] * (self.z.rate(t)[idx] / self.s[idx])[:, None]


# ---------------------------------------------------------------------------
# edge terms
# ---------------------------------------------------------------------------

class EdgeTerm:
    """
    Per-edge coupling ``g_ij(y_i, y_j; t)`` for edges ``(i, j)``, ``i < j``.

    Methods take the stacked endpoint blocks ``Yi``, ``Yj`` of the edges
    selected by ``idx``. The ``(j, i)`` view of an edge is obtained by
    swapping the returned pieces and transposing the cross block.
    """

    def value(self, Yi, Yj, t, idx=ALL):
        raise NotImplementedError

    def grad(self, Yi, Yj, t, idx=ALL):
        raise NotImplementedError

    def hess(self, Yi, Yj, t, idx=ALL):
        """Return ``(H_ii, H_ij, H_jj)``; ``H_ji = H_ij^T``."""
        raise NotImplementedError

    def time_grad(self, Yi, Yj, t, idx=ALL):
        raise NotImplementedError


class DifferencePenalty(EdgeTerm):
    """``w_e || y_i - y_j - b_e(t) ||^2`` on each edge ``e = (i, j)``."""

    def __init__(self, weights, p, offset: Signal | None = None):
        self.w = np.asarray(weights, dtype=float).reshape(-1)
        if np.any(self.w < 0):
            raise ValueError("edge weights must be nonnegative")
        self.p = p
        if offset is not None and offset.shape != (self.w.size, p):
            raise ValueError(f"edge offset must have shape ({self.w.size}, {p}), got {offset.shape}")
        self.offset = offset

    def _r(self, Yi, Yj, t, idx):
        r = Yi - Yj
        if self.offset is not None:
            r = r - self.offset.value(t)[idx]
        return r

    def value(self, Yi, Yj, t, idx=ALL):
        r = self._r(Yi, Yj, t, idx)
        return self.w[idx] * (r ** 2).sum(axis=-1)

    def grad(self, Yi, Yj, t, idx=ALL):
        gi = 2.0 * self.w[idx][:, None] * self._r(Yi, Yj, t, idx)
        return gi, -gi

    def hess(self, Yi, Yj, t, idx=ALL):
        w = self.w[idx]
        eye = np.eye(self.p)
        Hii = 2.0 * w[:, None, None] * eye
        return Hii, -Hii, Hii.copy()

    def time_grad(self, Yi, Yj, t, idx=ALL):
        if self.offset is None:
            z = np.zeros_like(np.asarray(Yi, dtype=float))
            return z, z.copy()
        ti = -2.0 * self.w[idx][:, None] * self.offset.rate(t)[idx]
        return ti, -ti


# ---------------------------------------------------------------------------
# the oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantsBundle:
    """
    Curvature and derivative bounds of a problem.

    ``m, M`` bound the spectrum of the local Hessians, ``ell/2, L/2`` the
    spectrum of the diagonal blocks of the coupling Hessian, and ``C0..C3``
    the norms of the mixed and higher derivatives. ``provenance`` is
    ``"analytic"`` for proven bounds and ``"empirical"`` for sampled
    envelopes.
    """

    m: float
    M: float
    ell: float
    L: float
    C0: float
    C1: float
    C2: float
    C3: float
    provenance: str = "analytic"

    def __post_init__(self):
        if not (0 < self.m <= self.M):
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        # ell = L = 0 is allowed for problems without coupling
        if not (0 <= self.ell <= self.L):
            raise ValueError(f"need 0 <= ell <= L, got ell={self.ell}, L={self.L}")
        if min(self.C0, self.C1, self.C2, self.C3) < 0:
            raise ValueError("derivative bounds must be nonnegative")


class ObjectiveOracle:
    """
    Derivative oracle for ``F = f + g`` over a fixed graph.

    Parameters
    ----------
    graph : NetworkGraph
    local : NodeTerm
        The local utilities ``f_i``.
    node_coupling : NodeTerm, optional
        The node-own coupling terms ``g_ii``.
    edge_coupling : EdgeTerm, optional
        The edge terms ``g_ij``, one per edge of ``graph`` in edge order.
    """

    def __init__(self, graph: NetworkGraph, local: NodeTerm, node_coupling: NodeTerm | None = None,
                 edge_coupling: EdgeTerm | None = None):
        if (local.n, local.p) != (graph.n, graph.p):
            raise ValueError("local terms do not match the graph dimensions")
        self.graph = graph
        self.f = local
        self.g_node = node_coupling if node_coupling is not None else ZeroTerm(graph.n, graph.p)
        self.g_edge = edge_coupling
        E = graph.edge_array
        self._ei, self._ej = E[:, 0], E[:, 1]
        # node -> list of (edge index, True if node is the first endpoint)
        self._incident = [[] for _ in range(graph.n)]
        for e, (i, j) in enumerate(graph.edges):
            self._incident[i].append((e, True))
            self._incident[j].append((e, False))

    # -- whole-network queries ----------------------------------------------

    def _edges(self, Y):
        return Y[self._ei], Y[self._ej]

    def value(self, Y, t) -> float:
        Y = as_blocks(Y, self.graph)
        v = self.f.value(Y, t).sum() + self.g_node.value(Y, t).sum()
        if self.g_edge is not None and self.graph.num_edges:
            v += self.g_edge.value(*self._edges(Y), t).sum()
        return float(v)

    def gradient(self, Y, t) -> np.ndarray:
        Y = as_blocks(Y, self.graph)
        G = self.f.grad(Y, t) + self.g_node.grad(Y, t)
        if self.g_edge is not None and self.graph.num_edges:
            gi, gj = self.g_edge.grad(*self._edges(Y), t)
            np.add.at(G, self._ei, gi)
            np.add.at(G, self._ej, gj)
        return G

    def time_gradient(self, Y, t) -> np.ndarray:
        Y = as_blocks(Y, self.graph)
        G = self.f.time_grad(Y, t) + self.g_node.time_grad(Y, t)
        if self.g_edge is not None and self.graph.num_edges:
            gi, gj = self.g_edge.time_grad(*self._edges(Y), t)
            np.add.at(G, self._ei, gi)
            np.add.at(G, self._ej, gj)
        return G

    def hessian_blocks(self, Y, t):
        """
        Diagonal blocks and edge cross blocks of the Hessian.

        Returns
        -------
        diag : ndarray
            ``(n, p, p)`` blocks ``d^2 F / dy_i dy_i``.
        cross : ndarray
            ``(l, p, p)`` blocks ``d^2 F / dy_i dy_j`` for edges ``(i, j)``.
        """
        Y = as_blocks(Y, self.graph)
        diag = self.f.hess(Y, t) + self.g_node.hess(Y, t)
        p = self.graph.p
        if self.g_edge is not None and self.graph.num_edges:
            Hii, Hij, Hjj = self.g_edge.hess(*self._edges(Y), t)
            np.add.at(diag, self._ei, Hii)
            np.add.at(diag, self._ej, Hjj)
            cross = Hij
        else:
            cross = np.zeros((self.graph.num_edges, p, p))
        return diag, cross

    def coupling_diag_blocks(self, Y, t) -> np.ndarray:
        """Diagonal blocks of the Hessian of ``g`` alone."""
        Y = as_blocks(Y, self.graph)
        diag = self.g_node.hess(Y, t)
        if self.g_edge is not None and self.graph.num_edges:
            Hii, _, Hjj = self.g_edge.hess(*self._edges(Y), t)
            np.add.at(diag, self._ei, Hii)
            np.add.at(diag, self._ej, Hjj)
        return diag

    def dense_hessian(self, Y, t) -> np.ndarray:
        diag, cross = self.hessian_blocks(Y, t)
        return blocks_to_dense(self.graph, diag, cross)

    # -- node-local queries ---------------------------------------------------

    def node_value(self, i, yi, t):
        """``(f_i(y_i; t), g_ii(y_i; t))``."""
        Yi = np.asarray(yi, dtype=float)[None, :]
        sl = slice(i, i + 1)
        return float(self.f.value(Yi, t, sl)[0]), float(self.g_node.value(Yi, t, sl)[0])

    def _edge_view(self, i, j, yi, yj):
        """Edge index and endpoint blocks ordered as stored."""
        a, b = (i, j) if i < j else (j, i)
        try:
            e = self.graph.edges.index((a, b))
        except ValueError:
            raise KeyError(f"({i}, {j}) is not an edge") from None
        Ya, Yb = (yi, yj) if i < j else (yj, yi)
        return e, np.asarray(Ya, dtype=float)[None, :], np.asarray(Yb, dtype=float)[None, :]

    def edge_value(self, i, j, yi, yj, t) -> float:
        if self.g_edge is None:
            return 0.0
        e, Ya, Yb = self._edge_view(i, j, yi, yj)
        return float(self.g_edge.value(Ya, Yb, t, slice(e, e + 1))[0])

    def edge_grad(self, i, j, yi, yj, t):
        """``grad_{y_i} g_ij`` as seen from node ``i``."""
        if self.g_edge is None:
            return np.zeros(self.graph.p)
        e, Ya, Yb = self._edge_view(i, j, yi, yj)
        ga, gb = self.g_edge.grad(Ya, Yb, t, slice(e, e + 1))
        return (ga if i < j else gb)[0]

    def edge_hess(self, i, j, yi, yj, t):
        """``(d^2 g_ij / dy_i dy_i, d^2 g_ij / dy_i dy_j)`` from node ``i``."""
        if self.g_edge is None:
            z = np.zeros((self.graph.p, self.graph.p))
            return z, z.copy()
        e, Ya, Yb = self._edge_view(i, j, yi, yj)
        Haa, Hab, Hbb = self.g_edge.hess(Ya, Yb, t, slice(e, e + 1))
        if i < j:
            return Haa[0], Hab[0]
        return Hbb[0], Hab[0].T

    def edge_time_grad(self, i, j, yi, yj, t):
        if self.g_edge is None:
            return np.zeros(self.graph.p)
        e, Ya, Yb = self._edge_view(i, j, yi, yj)
        ta, tb = self.g_edge.time_grad(Ya, Yb, t, slice(e, e + 1))
        return (ta if i < j else tb)[0]

    def _local_edges(self, i, yi, nbr):
        """Stacked edge inputs touching node ``i`` in stored orientation."""
        inc = self._incident[i]
        idx = np.array([e for e, _ in inc], dtype=int)
        first = np.array([f for _, f in inc], dtype=bool)
        other = [self.graph.edges[e][1] if f else self.graph.edges[e][0] for e, f in inc]
        Yo = np.array([nbr[j] for j in other], dtype=float).reshape(len(inc), self.graph.p)
        Ys = np.broadcast_to(np.asarray(yi, dtype=float), Yo.shape)
        Ya = np.where(first[:, None], Ys, Yo)
        Yb = np.where(first[:, None], Yo, Ys)
        return idx, first, other, Ya, Yb

    def local_gradient(self, i, yi, nbr, t) -> np.ndarray:
        """
        Node ``i``'s block of ``grad F`` from its own block and the blocks
        ``nbr[j]`` of its neighbors.
        """
        Yi = np.asarray(yi, dtype=float)[None, :]
        sl = slice(i, i + 1)
        g = self.f.grad(Yi, t, sl)[0] + self.g_node.grad(Yi, t, sl)[0]
        if self.g_edge is not None and self._incident[i]:
            idx, first, _, Ya, Yb = self._local_edges(i, yi, nbr)
            ga, gb = self.g_edge.grad(Ya, Yb, t, idx)
            for r in range(idx.size):
                g = g + (ga[r] if first[r] else gb[r])
        return g

    def local_time_gradient(self, i, yi, nbr, t) -> np.ndarray:
        Yi = np.asarray(yi, dtype=float)[None, :]
        sl = slice(i, i + 1)
        g = self.f.time_grad(Yi, t, sl)[0] + self.g_node.time_grad(Yi, t, sl)[0]
        if self.g_edge is not None and self._incident[i]:
            idx, first, _, Ya, Yb = self._local_edges(i, yi, nbr)
            ta, tb = self.g_edge.time_grad(Ya, Yb, t, idx)
            for r in range(idx.size):
                g = g + (ta[r] if first[r] else tb[r])
        return g

    def local_hessian(self, i, yi, nbr, t):
        """
        Node ``i``'s diagonal Hessian block and its cross blocks.

        Returns
        -------
        D_ii : ndarray
            ``(p, p)`` diagonal block of ``grad^2 F``.
        cross : dict
            Neighbor ``j`` -> ``d^2 g_ij / dy_i dy_j``.
        """
        Yi = np.asarray(yi, dtype=float)[None, :]
        sl = slice(i, i + 1)
        D = self.f.hess(Yi, t, sl)[0] + self.g_node.hess(Yi, t, sl)[0]
        cross = {}
        if self.g_edge is not None and self._incident[i]:
            idx, first, other, Ya, Yb = self._local_edges(i, yi, nbr)
            Haa, Hab, Hbb = self.g_edge.hess(Ya, Yb, t, idx)
            for r in range(idx.size):
                D = D + (Haa[r] if first[r] else Hbb[r])
                cross[other[r]] = Hab[r] if first[r] else Hab[r].T
        return D, cross


def blocks_to_dense(graph: NetworkGraph, diag, cross) -> np.ndarray:
    p = graph.p
    H = np.zeros((graph.dim, graph.dim))
    for i in range(graph.n):
        H[i * p:(i + 1) * p, i * p:(i + 1) * p] = diag[i]
    for e, (i, j) in enumerate(graph.edges):
        H[i * p:(i + 1) * p, j * p:(j + 1) * p] = cross[e]
        H[j * p:(j + 1) * p, i * p:(i + 1) * p] = cross[e].T
    return H


def global_gradient(oracle: ObjectiveOracle, graph: NetworkGraph, y, t) -> np.ndarray:
    """Block gradient of ``F(y; t)``; block ``i`` only reads neighbor blocks."""
    _check_graph(oracle, graph)
    return oracle.gradient(y, t)


def mixed_time_gradient(oracle: ObjectiveOracle, graph: NetworkGraph, y, t) -> np.ndarray:
    """Block vector ``d/dt grad_y F(y; t)``."""
    _check_graph(oracle, graph)
    return oracle.time_gradient(y, t)


def _check_graph(oracle, graph):
    if oracle.graph is not graph and oracle.graph != graph:
        raise ValueError("oracle was built for a different graph")


# ---------------------------------------------------------------------------
# sampled constants
# ---------------------------------------------------------------------------

def estimate_constants(oracle: ObjectiveOracle, graph: NetworkGraph, box=(-10.0, 10.0), times=(0.0, 100.0),
                       samples=32, seed=0, step=1e-4) -> ConstantsBundle:
    """
    Sampled envelopes of the curvature and derivative bounds.

    Each sample draws a point ``y`` uniformly in ``box``, a time in
    ``times`` and a unit direction. Third derivatives are estimated by
    central differences of the dense Hessian (in ``y``) or of the mixed
    gradient (in ``t``). The returned values are lower estimates of the
    true suprema, not certified bounds; the bundle is marked empirical.

    Samples for a smaller count are a prefix of those for a larger one, so
    the reported maxima are monotone in `samples`.
    """
    _check_graph(oracle, graph)
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    n, p = graph.n, graph.p
    m, M = np.inf, 0.0
    lo, hi = np.inf, 0.0
    C0 = C1 = C2 = C3 = 0.0
    for _ in range(samples):
        Y = rng.uniform(box[0], box[1], size=(n, p))
        t = rng.uniform(times[0], times[1])
        u = rng.normal(size=graph.dim)
        u /= np.linalg.norm(u)
        ev = np.linalg.eigvalsh(oracle.f.hess(Y, t))
        m, M = min(m, ev[:, 0].min()), max(M, ev[:, -1].max())
        evg = np.linalg.eigvalsh(oracle.coupling_diag_blocks(Y, t))
        lo, hi = min(lo, evg[:, 0].min()), max(hi, evg[:, -1].max())
        C0 = max(C0, np.linalg.norm(oracle.time_gradient(Y, t)))
        U = u.reshape(n, p)
        dH = (oracle.dense_hessian(Y + step * U, t) - oracle.dense_hessian(Y - step * U, t)) / (2 * step)
        C1 = max(C1, np.linalg.norm(dH, 2))
        dHt = (oracle.dense_hessian(Y, t + step) - oracle.dense_hessian(Y, t - step)) / (2 * step)
        C2 = max(C2, np.linalg.norm(dHt, 2))
        dTt = (oracle.time_gradient(Y, t + step) - oracle.time_gradient(Y, t - step)) / (2 * step)
        C3 = max(C3, np.linalg.norm(dTt))
    return ConstantsBundle(m=float(m), M=float(M), ell=float(2 * lo), L=float(2 * hi), C0=float(C0),
                           C1=float(C1), C2=float(C2), C3=float(C3), provenance="empirical")
