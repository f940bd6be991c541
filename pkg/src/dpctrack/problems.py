"""
Problem families built on :mod:`dpctrack.objective`.

* resource allocation: local utilities plus ``(1/beta^2) ||A y - b(t)||^2``
* sensor estimation: regularized least squares over the network
* decoupled synthetic quadratics
"""

from __future__ import annotations

import numpy as np

from .graph import NetworkGraph
from .objective import (SIGMOID_CURVATURE_MAX, ConstantsBundle, ConstantSignal, CosineSignal,
                        DifferencePenalty, LeastSquaresFit, NodeTerm, ObjectiveOracle,
                        QuadraticLogistic, Signal, stack_signals)


class _ReshapedSignal(Signal):
    """Present a flat edge-stacked signal as ``(l, p)`` blocks."""

    def __init__(self, base: Signal, shape):
        self.base, self.shape = base, tuple(shape)

    def value(self, t):
        return np.reshape(self.base.value(t), self.shape)

    def rate(self, t):
        return np.reshape(self.base.rate(t), self.shape)

    def accel(self, t):
        return np.reshape(self.base.accel(t), self.shape)


def quadratic_logistic_utility(Q, b_coefs, c_fn: Signal, d_fn: Signal) -> QuadraticLogistic:
    """
    Single-node utility ``1/2 (y-c)^T Q (y-c) + sum_l log(1 + exp(b_l (y_l - d_l)))``.

    `c_fn` and `d_fn` are signals of shape ``(p,)``. Stack several utilities
    with :meth:`QuadraticLogistic.stack`.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    p = Q.shape[0]
    b = np.asarray(b_coefs, dtype=float).reshape(1, p)
    if c_fn.shape != (p,) or d_fn.shape != (p,):
        raise ValueError(f"c and d must have shape ({p},)")
    return QuadraticLogistic(Q[None], b, stack_signals([c_fn]), stack_signals([d_fn]))


def _as_node_term(utilities, graph):
    if isinstance(utilities, NodeTerm):
        term = utilities
    else:
        term = QuadraticLogistic.stack(utilities)
    if (term.n, term.p) != (graph.n, graph.p):
        raise ValueError(f"utilities cover ({term.n}, {term.p}) blocks, graph has ({graph.n}, {graph.p})")
    return term


def resource_allocation_objective(graph: NetworkGraph, b_fn: Signal | None, beta: float,
                                  utilities) -> ObjectiveOracle:
    """
    Penalized network-flow problem ``sum_i f_i(y_i; t) + ||A y - b(t)||^2 / beta^2``.

    The penalty splits into one term ``||y_j - y_k - b_e(t)||^2 / beta^2``
    per edge ``e = (j, k)``, so the coupling has no node-own part.

    Parameters
    ----------
    graph : NetworkGraph
    b_fn : Signal or None
        Edge-stacked right-hand side of shape ``(l, p)`` or ``(l * p,)``.
        ``None`` means ``b = 0``.
    beta : float
        Penalty level, positive.
    utilities : NodeTerm or sequence of single-node utilities
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    f = _as_node_term(utilities, graph)
    l, p = graph.num_edges, graph.p
    offset = None
    if b_fn is not None:
        if b_fn.shape == (l * p,):
            b_fn = _ReshapedSignal(b_fn, (l, p))
        elif b_fn.shape != (l, p):
            raise ValueError(f"b(t) must have shape ({l * p},) or ({l}, {p}), got {b_fn.shape}")
        offset = b_fn
    penalty = DifferencePenalty(np.full(l, 1.0 / beta ** 2), p, offset)
    return ObjectiveOracle(graph, f, edge_coupling=penalty)


def estimation_objective(graph: NetworkGraph, regressors, noise_vars, weights, beta: float,
                         z_fn: Signal) -> ObjectiveOracle:
    """
    Spatially regularized least squares.

    ``sum_i (h_i^T u_i - z_i(t))^2 / (2 sigma_i) + (beta/2) sum_i sum_{j in N_i} w_ij ||u_i - u_j||^2``.

    The double sum visits each edge from both ends, so edge ``(i, j)``
    carries the weight ``(beta/2)(w_ij + w_ji)``.

    Parameters
    ----------
    regressors : array_like
        ``(n, p)`` regressors ``h_i``.
    noise_vars : array_like
        ``(n,)`` positive noise variances.
    weights : array_like
        Either ``(n, n)`` nonnegative weights (only entries on edges are
        read) or ``(l,)`` symmetric per-edge weights in edge order.
    z_fn : Signal
        Measurements of shape ``(n,)``.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    h = np.asarray(regressors, dtype=float).reshape(graph.n, -1)
    if h.shape[1] != graph.p:
        raise ValueError(f"regressors must have shape ({graph.n}, {graph.p})")
    W = np.asarray(weights, dtype=float)
    if W.shape == (graph.n, graph.n):
        E = graph.edge_array
        w_edge = W[E[:, 0], E[:, 1]] + W[E[:, 1], E[:, 0]]
    elif W.shape == (graph.num_edges,):
        w_edge = 2.0 * W
    else:
        raise ValueError(f"weights must have shape ({graph.n}, {graph.n}) or ({graph.num_edges},)")
    if np.any(w_edge < 0):
        raise ValueError("weights must be nonnegative")
    f = LeastSquaresFit(h, noise_vars, z_fn)
    return ObjectiveOracle(graph, f, edge_coupling=DifferencePenalty(0.5 * beta * w_edge, graph.p))


def shifted_quadratic_objective(graph: NetworkGraph, curvature, target: Signal,
                                edge_weight: float = 0.0) -> ObjectiveOracle:
    """
    ``sum_i (m_i/2) ||y_i - a_i(t)||^2`` plus an optional uniform
    ``edge_weight * ||y_i - y_j||^2`` on every edge.
    """
    n, p = graph.n, graph.p
    m = np.broadcast_to(np.asarray(curvature, dtype=float), (n,))
    Q = m[:, None, None] * np.eye(p)
    f = QuadraticLogistic(Q, np.zeros((n, p)), target, ConstantSignal(np.zeros((n, p))))
    g = DifferencePenalty(np.full(graph.num_edges, float(edge_weight)), p) if edge_weight else None
    return ObjectiveOracle(graph, f, edge_coupling=g)


def _signal_bounds(sig: Signal, shape):
    """Elementwise bounds on ``|s'|`` and ``|s''|``."""
    if isinstance(sig, ConstantSignal):
        return np.zeros(shape), np.zeros(shape)
    if isinstance(sig, CosineSignal):
        return np.broadcast_to(sig.max_rate, shape), np.broadcast_to(sig.max_accel, shape)
    raise TypeError(f"no closed-form derivative bounds for {type(sig).__name__}")


def analytic_constants(oracle: ObjectiveOracle) -> ConstantsBundle:
    """
    Closed-form constants for quadratic-logistic utilities with a
    difference penalty whose offset is constant in time.

    Uses ``max |sigma''| = 1/(6 sqrt 3)`` for the logistic sigmoid and the
    elementwise amplitude bounds of the drifting targets. Raises
    ``TypeError`` for other families; use
    :func:`dpctrack.objective.estimate_constants` there.
    """
    f = oracle.f
    if not isinstance(f, QuadraticLogistic):
        raise TypeError("analytic constants need quadratic-logistic utilities")
    g = oracle.g_edge
    if g is not None and not isinstance(g, DifferencePenalty):
        raise TypeError("analytic constants need a difference penalty")
    if g is not None and g.offset is not None and not isinstance(g.offset, ConstantSignal):
        raise TypeError("analytic constants need a time-invariant penalty offset")
    graph = oracle.graph
    n, p = f.n, f.p
    lo, hi = f.curvature_interval()
    m, M = float(lo.min()), float(hi.max())

    if g is not None and graph.num_edges:
        node_w = np.zeros(n)
        E = graph.edge_array
        np.add.at(node_w, E[:, 0], g.w)
        np.add.at(node_w, E[:, 1], g.w)
        half = 2.0 * node_w  # eigenvalue of the g-diagonal block at node i
        ell, L = 2.0 * float(half.min()), 2.0 * float(half.max())
    else:
        ell = L = 0.0

    qn = np.linalg.norm(f.Q, ord=2, axis=(1, 2))
    b = np.abs(f.b)
    kappa = SIGMOID_CURVATURE_MAX
    dc, ddc = _signal_bounds(f.c, (n, p))
    dd, ddd = _signal_bounds(f.d, (n, p))
    c0_node = qn * np.linalg.norm(dc, axis=1) + np.linalg.norm(b ** 2 / 4.0 * dd, axis=1)
    c3_node = (qn * np.linalg.norm(ddc, axis=1)
               + np.linalg.norm(b ** 3 * kappa * dd ** 2 + b ** 2 / 4.0 * ddd, axis=1))
    C0 = float(np.sqrt((c0_node ** 2).sum()))
    C1 = float((b ** 3).max() * kappa)
    C2 = float((b ** 3 * kappa * dd).max())
    C3 = float(np.sqrt((c3_node ** 2).sum()))
    return ConstantsBundle(m=m, M=M, ell=ell, L=L, C0=C0, C1=C1, C2=C2, C3=C3, provenance="analytic")
