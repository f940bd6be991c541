"""
Synchronous message-passing execution of the tracking methods.

Every node holds only its own block and what its neighbors sent it. One
round means: every node sends one ``p``-vector to each neighbor, then a
barrier. The ledger counts rounds and the scalars crossing each directed
link, which must agree with the closed-form requirements of
:func:`comm_requirements`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from .algorithms import MethodConfig
from .graph import NetworkGraph
from .objective import ObjectiveOracle, as_blocks


@dataclass(frozen=True)
class CommRequirements:
    """Per-sample rounds and scalars sent per directed neighbor link."""

    prediction_rounds: int
    correction_rounds: int
    scalars: int

    @property
    def rounds(self) -> int:
        return self.prediction_rounds + self.correction_rounds


def comm_requirements(variant: str, K: int, K_prime: int, p: int, n_C: int = 1, n_EC: int = 0) -> CommRequirements:
    """
    Closed-form communication cost of one sample.

    A prediction takes ``K + 1`` rounds (the variable exchange plus ``K``
    series sweeps). A gradient correction takes one round, a Newton
    correction ``K' + 1``. Each round sends one ``p``-vector per link.
    Extra corrections of the running Newton baseline use level ``K``.
    """
    if min(K, K_prime) < 0 or p < 1 or n_C < 0 or n_EC < 0:
        raise ValueError("levels must be nonnegative and p positive")
    if variant in ("DPC-G", "DAPC-G"):
        pred, corr = K + 1, n_C
    elif variant in ("DPC-N", "DAPC-N"):
        pred, corr = K + 1, n_C * (K_prime + 1)
    elif variant == "RG":
        pred, corr = 0, n_C + n_EC
    elif variant == "RN":
        pred, corr = 0, n_C * (K_prime + 1) + n_EC * (K + 1)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return CommRequirements(pred, corr, (pred + corr) * p)


@dataclass
class CommLedger:
    """
    Observed communication.

    ``rounds_prediction`` and ``rounds_correction`` hold one count per
    sample; ``scalars_per_neighbor`` maps a directed link ``(i, j)`` to the
    scalars ``i`` has sent to ``j``.
    """

    rounds_prediction: list[int] = field(default_factory=list)
    rounds_correction: list[int] = field(default_factory=list)
    scalars_per_neighbor: dict = field(default_factory=dict)

    @property
    def total_rounds(self) -> int:
        return sum(self.rounds_prediction) + sum(self.rounds_correction)

    def matches(self, req: CommRequirements, steps: int, graph: NetworkGraph) -> bool:
        """Exact agreement with `steps` samples of the closed form."""
        if self.rounds_prediction != [req.prediction_rounds] * steps:
            return False
        if self.rounds_correction != [req.correction_rounds] * steps:
            return False
        links = {(i, j) for i in range(graph.n) for j in graph.neighbors[i]}
        if set(self.scalars_per_neighbor) != links and steps and req.rounds:
            return False
        return all(v == steps * req.scalars for v in self.scalars_per_neighbor.values())


class Network:
    """
    Round-synchronous mailbox exchange.

    Parameters
    ----------
    graph : NetworkGraph
    ledger : CommLedger
    trace : file-like, optional
        Receives one line per message: ``step round from to norm``.
    tamper : callable, optional
        ``(step, round, sender, receiver, payload) -> payload``; lets tests
        perturb individual messages.
    delivery_seed : int, optional
        Shuffle the order in which each inbox is filled. Node updates
        reduce over inboxes in sorted-sender order, so results must not
        depend on it.
    """

    def __init__(self, graph: NetworkGraph, ledger: CommLedger, trace: TextIO | None = None,
                 tamper: Callable | None = None, delivery_seed: int | None = None):
        self.graph = graph
        self.ledger = ledger
        self.trace = trace
        self.tamper = tamper
        self.rng = np.random.default_rng(delivery_seed) if delivery_seed is not None else None
        self.step = 0
        self.round = 0
        self.rounds_in_phase = 0

    def exchange(self, payloads) -> list[dict]:
        """Send ``payloads[i]`` from every node ``i`` to its neighbors."""
        g = self.graph
        messages = [(i, j) for i in range(g.n) for j in g.neighbors[i]]
        if self.rng is not None:
            self.rng.shuffle(messages)
        inbox: list[dict] = [dict() for _ in range(g.n)]
        for i, j in messages:
            x = np.array(payloads[i], dtype=float, copy=True)
            if self.tamper is not None:
                x = np.asarray(self.tamper(self.step, self.round, i, j, x), dtype=float)
            inbox[j][i] = x
            key = (i, j)
            self.ledger.scalars_per_neighbor[key] = self.ledger.scalars_per_neighbor.get(key, 0) + x.size
            if self.trace is not None:
                self.trace.write(f"step={self.step} round={self.round} from={i} to={j} "
                                 f"norm={float(np.linalg.norm(x))!r}\n")
        self.round += 1
        self.rounds_in_phase += 1
        return inbox


class _Node:
    """Local state and computations of one node."""

    def __init__(self, i, oracle: ObjectiveOracle, y):
        self.i = i
        self.oracle = oracle
        self.y = np.array(y, dtype=float)

    def factor(self, D):
        self.D = D
        self.L = np.linalg.cholesky(D)

    def solve_d(self, v):
        z = np.linalg.solve(self.L, v)
        return np.linalg.solve(self.L.T, z)

    def b_times(self, cross, x_nbr):
        acc = np.zeros_like(self.y)
        for j in sorted(cross):
            acc = acc - cross[j] @ x_nbr[j]
        return acc


def _series(net: Network, nodes, cross, rhs, K):
    """K neighbor sweeps of ``x <- D^{-1} (B x + v)`` starting at ``D^{-1} v``."""
    x = [nd.solve_d(rhs[nd.i]) for nd in nodes]
    for _ in range(K):
        inbox = net.exchange(x)
        x = [nd.solve_d(nd.b_times(cross[nd.i], inbox[nd.i]) + rhs[nd.i]) for nd in nodes]
    return x


@dataclass
class DecentralizedRun:
    trajectory: np.ndarray
    predictions: np.ndarray
    ledger: CommLedger


def run_decentralized(config: MethodConfig, oracle: ObjectiveOracle, graph: NetworkGraph, y0=None,
                      steps: int = 1, t0: float = 0.0, trace: TextIO | None = None,
                      tamper: Callable | None = None, delivery_seed: int | None = None) -> DecentralizedRun:
    """
    Execute `steps` samples with node-local computation only.

    Returns
    -------
    DecentralizedRun
        ``trajectory`` of shape ``(steps + 1, n, p)``, the predictions fed
        to the corrections (``y_k`` itself for running methods) and the
        communication ledger.
    """
    n, p = graph.n, graph.p
    Y0 = np.zeros((n, p)) if y0 is None else as_blocks(y0, graph)
    nodes = [_Node(i, oracle, Y0[i]) for i in range(n)]
    ledger = CommLedger()
    net = Network(graph, ledger, trace, tamper, delivery_seed)
    traj = [Y0.copy()]
    preds = [Y0.copy()]
    h = config.h
    for k in range(steps):
        net.step = k
        net.round = 0
        t_k = t0 + k * h
        t_next = t0 + (k + 1) * h

        # prediction
        net.rounds_in_phase = 0
        if config.predicts:
            inbox = net.exchange([nd.y for nd in nodes])
            cross, rhs = {}, {}
            for nd in nodes:
                D, cr = oracle.local_hessian(nd.i, nd.y, inbox[nd.i], t_k)
                nd.factor(D)
                cross[nd.i] = cr
                if config.backward:
                    if k == 0:
                        # no earlier sample: zero direction, rounds still spent
                        rhs[nd.i] = np.zeros(p)
                    else:
                        g_now = oracle.local_gradient(nd.i, nd.y, inbox[nd.i], t_k)
                        g_old = oracle.local_gradient(nd.i, nd.y, inbox[nd.i], t0 + (k - 1) * h)
                        rhs[nd.i] = -(g_now - g_old) / h
                else:
                    rhs[nd.i] = -oracle.local_time_gradient(nd.i, nd.y, inbox[nd.i], t_k)
            x = _series(net, nodes, cross, rhs, config.K)
            for nd, xi in zip(nodes, x):
                nd.y = nd.y + h * xi
        ledger.rounds_prediction.append(net.rounds_in_phase)
        preds.append(np.array([nd.y for nd in nodes]))

        # corrections
        net.rounds_in_phase = 0
        gamma = config.gamma_at(k + 1)
        for c in range(config.corrections):
            inbox = net.exchange([nd.y for nd in nodes])
            grads = [oracle.local_gradient(nd.i, nd.y, inbox[nd.i], t_next) for nd in nodes]
            if not config.newton:
                for nd, gi in zip(nodes, grads):
                    nd.y = nd.y - gamma * gi
                continue
            level = config.K_prime if c < config.n_C else config.K
            cross = {}
            for nd in nodes:
                D, cross[nd.i] = oracle.local_hessian(nd.i, nd.y, inbox[nd.i], t_next)
                nd.factor(D)
            x = _series(net, nodes, cross, {nd.i: grads[nd.i] for nd in nodes}, level)
            for nd, xi in zip(nodes, x):
                nd.y = nd.y - gamma * xi
        ledger.rounds_correction.append(net.rounds_in_phase)

        traj.append(np.array([nd.y for nd in nodes]))
    return DecentralizedRun(np.array(traj), np.array(preds), ledger)
