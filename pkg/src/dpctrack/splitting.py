"""
Block splitting ``grad^2 F = D - B`` and the truncated series inverse.

``D`` collects the diagonal Hessian blocks, one per node, and ``B`` the
negated cross blocks, one per edge. The series
``D^{-1/2} sum_{tau<=K} (D^{-1/2} B D^{-1/2})^tau D^{-1/2}`` is applied by
the neighbor-local recursion

    x_0 = D^{-1} v,    x_{tau+1} = D^{-1} (B x_tau + v),

so that each sweep needs one exchange of blocks between neighbors.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import NetworkGraph
from .objective import ObjectiveOracle, as_blocks, blocks_to_dense

log = logging.getLogger(__name__)


class SplitError(ArithmeticError):
    """A diagonal block is not positive definite."""


@dataclass(frozen=True)
class SplitHessian:
    """
    Parameters
    ----------
    graph : NetworkGraph
    d_blocks : ndarray
        ``(n, p, p)`` symmetric positive definite diagonal blocks.
    b_blocks : ndarray
        ``(l, p, p)`` blocks ``B^{ij}`` for edges ``(i, j)`` in edge order.
        ``B^{ji}`` is the transpose.
    """

    graph: NetworkGraph
    d_blocks: np.ndarray
    b_blocks: np.ndarray
    chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n, p = self.graph.n, self.graph.p
        if self.d_blocks.shape != (n, p, p):
            raise ValueError(f"d_blocks must have shape ({n}, {p}, {p})")
        if self.b_blocks.shape != (self.graph.num_edges, p, p):
            raise ValueError(f"b_blocks must have shape ({self.graph.num_edges}, {p}, {p})")
        try:
            chol = np.linalg.cholesky(self.d_blocks)
        except np.linalg.LinAlgError:
            bad = [i for i in range(n) if np.linalg.eigvalsh(self.d_blocks[i])[0] <= 0]
            raise SplitError(f"diagonal block not positive definite at node(s) {bad}") from None
        object.__setattr__(self, "chol", chol)
        E = self.graph.edge_array
        object.__setattr__(self, "_ei", E[:, 0])
        object.__setattr__(self, "_ej", E[:, 1])

    # -- block operators ------------------------------------------------------

    def solve_d(self, V) -> np.ndarray:
        """``D^{-1} V`` for ``(n, p)`` blocks, through the cached factors."""
        V = np.asarray(V, dtype=float)
        p = self.graph.p
        if p == 1:
            return V / self.d_blocks[:, :, 0]
        z = np.linalg.solve(self.chol, V[:, :, None])
        return np.linalg.solve(np.swapaxes(self.chol, 1, 2), z)[:, :, 0]

    def apply_b(self, X) -> np.ndarray:
        """``B X``: node ``i`` receives ``sum_j B^{ij} x_j``."""
        X = np.asarray(X, dtype=float)
        out = np.zeros_like(X)
        if self.graph.num_edges:
            Bm = self.b_blocks
            np.add.at(out, self._ei, np.einsum("eab,eb->ea", Bm, X[self._ej]))
            np.add.at(out, self._ej, np.einsum("eba,eb->ea", Bm, X[self._ei]))
        return out

    def apply_hessian(self, X) -> np.ndarray:
        """``(D - B) X``."""
        X = np.asarray(X, dtype=float)
        return np.einsum("nab,nb->na", self.d_blocks, X) - self.apply_b(X)

    def dense_d(self) -> np.ndarray:
        return blocks_to_dense(self.graph, self.d_blocks, np.zeros_like(self.b_blocks))

    def dense_b(self) -> np.ndarray:
        # blocks_to_dense writes cross blocks only, so pass zero diagonals
        return blocks_to_dense(self.graph, np.zeros_like(self.d_blocks), self.b_blocks)

    def dense(self) -> np.ndarray:
        """Dense ``D - B``."""
        return self.dense_d() - self.dense_b()

    def whitened(self, X) -> np.ndarray:
        """``L^{-1} B L^{-T} X`` with ``D = L L^T``, similar to ``D^{-1/2} B D^{-1/2}``."""
        X = np.asarray(X, dtype=float)[:, :, None]
        Z = np.linalg.solve(np.swapaxes(self.chol, 1, 2), X)[:, :, 0]
        return np.linalg.solve(self.chol, self.apply_b(Z)[:, :, None])[:, :, 0]


def assemble_split(oracle: ObjectiveOracle, graph: NetworkGraph, y, t) -> SplitHessian:
    """
    Split the Hessian of ``F(.; t)`` at ``y``.

    Raises
    ------
    SplitError
        If a diagonal block is not positive definite.
    """
    Y = as_blocks(y, graph)
    diag, cross = oracle.hessian_blocks(Y, t)
    return SplitHessian(graph, diag, -cross)


def truncated_solve(split: SplitHessian, v, K: int) -> np.ndarray:
    """
    Apply the ``K``-truncated series inverse of ``D - B`` to ``v``.

    Each sweep reads only the previous sweep's blocks (double buffering),
    so the result does not depend on the order in which nodes update.
    """
    if K < 0:
        raise ValueError("truncation level K must be nonnegative")
    V = as_blocks(v, split.graph)
    x = split.solve_d(V)
    for _ in range(K):
        x = split.solve_d(split.apply_b(x) + V)
    return x


def splitting_contraction(split: SplitHessian, tol: float = 1e-8, max_iter: int = 20000,
                          seed: int = 0) -> float:
    """
    Spectral norm of ``D^{-1/2} B D^{-1/2}`` by power iteration.

    The iteration runs on the square of the (symmetric) whitened operator,
    so eigenvalue pairs ``+-lambda`` do not cause oscillation. A value of
    one or more signals that the splitting is not diagonally dominant; it
    is logged, not raised.
    """
    g = split.graph
    if g.num_edges == 0 or not np.any(split.b_blocks):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(g.n, g.p))
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        # Rayleigh quotient of the squared operator: error is quadratic in the angle
        z = split.whitened(x)
        new = float(np.linalg.norm(z))
        w = split.whitened(z)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        x = w / nw
        done = abs(new - est) <= 1e-4 * tol * max(new, 1e-300)
        est = new
        if done:
            break
    if est >= 1.0:
        log.warning("splitting contraction %.6g >= 1: diagonal dominance violated", est)
    return est
