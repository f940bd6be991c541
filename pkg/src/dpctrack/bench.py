"""
Experiment harness: reference trajectories, tracking runs, sweeps and the
communication-budget model.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import algorithms as alg
from .graph import NetworkGraph, random_geometric_graph
from .netsim import comm_requirements
from .objective import ConstantsBundle, CosineSignal, ObjectiveOracle, QuadraticLogistic, as_blocks
from .problems import analytic_constants, resource_allocation_objective


class NumericalError(ArithmeticError):
    """A solver stalled or produced non-finite values."""


# ---------------------------------------------------------------------------
# reference trajectory
# ---------------------------------------------------------------------------

def solve_static(oracle: ObjectiveOracle, t: float, y0, tol: float, max_iter: int = 100) -> np.ndarray:
    """Damped Newton on ``F(.; t)`` with backtracking on the objective."""
    graph = oracle.graph
    y = as_blocks(y0, graph).copy()
    for _ in range(max_iter):
        g = oracle.gradient(y, t)
        gn = np.linalg.norm(g)
        if gn <= tol:
            return y
        d = np.linalg.solve(oracle.dense_hessian(y, t), g.ravel()).reshape(y.shape)
        f0 = oracle.value(y, t)
        slope = float(np.vdot(g, d))
        step = 1.0
        while True:
            cand = y - step * d
            # accept full steps near the optimum, where value differences are noise
            if step == 1.0 and gn < 1e-6:
                break
            if oracle.value(cand, t) <= f0 - 1e-4 * step * slope or step < 1e-10:
                break
            step *= 0.5
        y = cand
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"Newton diverged at t={t}")
    raise NumericalError(f"Newton stalled at t={t}: |grad F| = {np.linalg.norm(oracle.gradient(y, t)):.3e}")


def optimal_trajectory(oracle: ObjectiveOracle, graph: NetworkGraph, times, tol: float | None = None,
                       y0=None, max_iter: int = 100) -> list[np.ndarray]:
    """
    Minimizers ``y*(t_k)`` at the given times.

    Each solve is a centralized damped Newton method warm-started at the
    previous solution and stopped when ``|grad F| <= tol``.

    Parameters
    ----------
    tol : float, optional
        Gradient tolerance, default ``1e-11 sqrt(n p)``.

    Raises
    ------
    NumericalError
        If Newton does not reach the tolerance within `max_iter` iterations.
    """
    if tol is None:
        tol = 1e-11 * math.sqrt(graph.dim)
    if not tol > 0:
        raise ValueError("tol must be positive")
    y = np.zeros((graph.n, graph.p)) if y0 is None else as_blocks(y0, graph)
    out = []
    for t in times:
        y = solve_static(oracle, float(t), y, tol, max_iter)
        out.append(y.copy())
    return out


# ---------------------------------------------------------------------------
# benchmark problem
# ---------------------------------------------------------------------------

STREAMS = {"graph": 0, "Q": 1, "b": 2, "phases": 3}

SCALES = {"desk": (10, 3), "paper": (50, 10)}


def stream(seed: int, name: str) -> np.random.Generator:
    """Named, independently reproducible substream of a master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],)))


@dataclass
class Benchmark:
    graph: NetworkGraph
    oracle: ObjectiveOracle
    constants: ConstantsBundle
    params: dict
    seed: int


def paper_benchmark(seed: int = 0, scale: str = "desk", n: int | None = None, p: int | None = None,
                    omega: float = 0.1, beta: float = math.sqrt(20.0), amplitude: float = 10.0,
                    q_range: tuple[float, float] = (1.0, 2.0), b_max: float = 2.0) -> Benchmark:
    """
    Resource-allocation benchmark with quadratic-logistic utilities.

    ``Q_i = diag(U[1, 2]^p) + v v^T`` with ``v ~ N(0, I)``, slopes
    ``b ~ U[-2, 2]`` (``b_max = 0`` gives pure quadratics), cosine targets
    with phases ``U[0, 2 pi)``, penalty ``||A y||^2 / beta^2`` and a random
    geometric graph of range ``2.5 sqrt(2) / sqrt(n)``.

    Parameters
    ----------
    scale : {"desk", "paper"}
        Default sizes ``(n, p) = (10, 3)`` or ``(50, 10)``; `n`, `p`
        override.
    """
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}")
    n0, p0 = SCALES[scale]
    n = n or n0
    p = p or p0
    rng_range = 2.5 * math.sqrt(2.0) / math.sqrt(n)
    graph = random_geometric_graph(n, rng_range, seed=stream(seed, "graph"), p=p)
    rq = stream(seed, "Q")
    Q = np.empty((n, p, p))
    for i in range(n):
        v = rq.normal(size=p)
        Q[i] = np.diag(rq.uniform(q_range[0], q_range[1], size=p)) + np.outer(v, v)
    b = stream(seed, "b").uniform(-b_max, b_max, size=(n, p))
    ph = stream(seed, "phases").uniform(0.0, 2.0 * math.pi, size=(2, n, p))
    utilities = QuadraticLogistic(Q, b, CosineSignal(amplitude, ph[0], omega), CosineSignal(amplitude, ph[1], omega))
    oracle = resource_allocation_objective(graph, None, beta, utilities)
    params = {"scale": scale, "n": n, "p": p, "omega": omega, "beta": beta, "amplitude": amplitude,
              "q_range": tuple(q_range), "b_max": b_max, "range": rng_range, "edges": graph.num_edges}
    return Benchmark(graph, oracle, analytic_constants(oracle), params, seed)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """
    Per-sample tracking data of one run.

    ``err[k] = |y_k - y*(t_k)|``; ``err_pred[k]`` is the error of the point
    handed to the corrections at sample ``k`` (the prediction, or ``y_{k-1}``
    for running methods; ``err[0]`` at ``k = 0``). Communication columns
    are cumulative rounds and cumulative scalars per directed link.
    """

    k: np.ndarray
    t: np.ndarray
    err: np.ndarray
    err_pred: np.ndarray
    rounds_cum: np.ndarray
    scalars_cum: np.ndarray
    config: dict = field(default_factory=dict)
    seed: int | None = None
    iterates: list | None = None

    COLUMNS = ("k", "t", "err", "err_pred", "rounds_cum", "scalars_cum")

    def __len__(self):
        return len(self.k)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for row in zip(self.k, self.t, self.err, self.err_pred, self.rounds_cum, self.scalars_cum):
            w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), repr(float(row[3])),
                        int(row[4]), int(row[5])])
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def run_method(oracle: ObjectiveOracle, graph: NetworkGraph, config: alg.MethodConfig, steps: int,
               reference=None, y0=None, t0: float = 0.0, seed: int | None = None,
               keep_iterates: bool = False) -> RunRecord:
    """
    Run one method for `steps` samples and measure tracking errors.

    `reference` is the list of ``y*(t_k)`` for ``k = 0..steps``; it is
    computed when omitted.
    """
    times = t0 + config.h * np.arange(steps + 1)
    if reference is None:
        reference = optimal_trajectory(oracle, graph, times)
    if len(reference) < steps + 1:
        raise ValueError("reference trajectory is shorter than the run")
    state = alg.initial_state(graph, y0, t0)
    err = np.empty(steps + 1)
    err_pred = np.empty(steps + 1)
    err[0] = err_pred[0] = np.linalg.norm(state.y - reference[0])
    iterates = [state.y] if keep_iterates else None
    for k in range(1, steps + 1):
        prev_y = state.y
        state = alg.step(state, oracle, graph, config)
        if not np.all(np.isfinite(state.y)):
            raise NumericalError(f"{config.variant} iterate became non-finite at k={k}")
        pred = state.predicted if state.predicted is not None else prev_y
        err[k] = np.linalg.norm(state.y - reference[k])
        err_pred[k] = np.linalg.norm(pred - reference[k])
        if keep_iterates:
            iterates.append(state.y)
    req = comm_requirements(config.variant, config.K, config.K_prime, graph.p, config.n_C, config.n_EC)
    ks = np.arange(steps + 1)
    return RunRecord(k=ks, t=times, err=err, err_pred=err_pred, rounds_cum=ks * req.rounds,
                     scalars_cum=ks * req.scalars, config=config.echo(), seed=seed, iterates=iterates)


def default_k_bar(steps: int, h: float) -> int:
    """
    Burn-in index for the asymptotic error.

    Uses 800 samples for ``h >= 1/16`` and 2000 otherwise when the run is
    long enough, else ``max(steps // 2, steps - 200)``.
    """
    k_bar = 800 if h >= 1.0 / 16.0 else 2000
    if steps > k_bar:
        return k_bar
    return max(steps // 2, steps - 200)


def asymptotic_error(record, k_bar: int | None = None) -> float:
    """``max_{k > k_bar} err[k]``; `record` is a RunRecord or error array."""
    err = np.asarray(record.err if isinstance(record, RunRecord) else record, dtype=float)
    steps = err.size - 1
    if k_bar is None:
        h = float(record.config.get("h", 1.0)) if isinstance(record, RunRecord) else 1.0
        k_bar = default_k_bar(steps, h)
    if k_bar < 0 or err.size <= k_bar + 1:
        raise ValueError(f"record of length {err.size} too short for k_bar={k_bar}")
    return float(err[k_bar + 1:].max())


def fit_slope(hs, errs) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    x, y = np.log(np.asarray(hs, dtype=float)), np.log(np.asarray(errs, dtype=float))
    if x.size < 2:
        raise ValueError("need at least two points")
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class SweepRow:
    variant: str
    h: float
    K: int
    K_prime: int
    gamma: float
    asymptotic_err: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    slopes: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "h", "K", "Kprime", "gamma", "asymptotic_err"])
        for r in self.rows:
            w.writerow([r.variant, repr(float(r.h)), r.K, r.K_prime, repr(float(r.gamma)), repr(float(r.asymptotic_err))])
        return buf.getvalue()


@dataclass(frozen=True)
class horizon_steps:
    """Steps rule: a fixed time horizon, ``ceil(horizon / h)`` samples."""

    horizon: float

    def __call__(self, h: float) -> int:
        return int(math.ceil(self.horizon / h - 1e-9))


def sweep_h(bench: Benchmark, configs, h_grid, steps_rule=None, k_bar_rule=None, jobs: int = 1,
            check_span: bool = True) -> SweepResult:
    """
    Asymptotic error of each configuration over a grid of sampling periods.

    Parameters
    ----------
    configs : sequence of dict
        Keyword arguments of :class:`MethodConfig` without ``h``. An
        optional ``"label"`` names the row group in the slope table.
    h_grid : sequence of float
        At least four values spanning at least one decade.
    steps_rule : callable, optional
        ``h -> steps``; default a horizon of 100 time units.
    k_bar_rule : callable, optional
        ``(steps, h) -> k_bar``; default :func:`default_k_bar`.
    """
    h_grid = sorted(float(h) for h in h_grid)
    if check_span and (len(h_grid) < 4 or h_grid[-1] / h_grid[0] < 10.0 - 1e-9):
        raise ValueError("h grid needs at least 4 values spanning a decade")
    steps_rule = steps_rule or horizon_steps(100.0)
    k_bar_rule = k_bar_rule or default_k_bar
    cells = [(dict(c), h) for c in configs for h in h_grid]

    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(jobs) as ex:
            rows = list(ex.map(_sweep_cell, [(bench, c, h, steps_rule, k_bar_rule) for c, h in cells]))
    else:
        rows = [_sweep_cell((bench, c, h, steps_rule, k_bar_rule)) for c, h in cells]
    slopes = {}
    for ci, c in enumerate(configs):
        label = c.get("label") or _label(c)
        part = rows[ci * len(h_grid):(ci + 1) * len(h_grid)]
        slopes[label] = fit_slope([r.h for r in part], [r.asymptotic_err for r in part])
    return SweepResult(rows, slopes)


def _sweep_cell(args):
    bench, cfg, h, steps_rule, k_bar_rule = args
    cfg = {k: v for k, v in cfg.items() if k != "label"}
    mc = alg.MethodConfig(h=h, **cfg)
    steps = steps_rule(h)
    rec = run_method(bench.oracle, bench.graph, mc, steps, seed=bench.seed)
    return SweepRow(mc.variant, h, mc.K, mc.K_prime, mc.gamma, asymptotic_error(rec, k_bar_rule(steps, h)))


def _label(c):
    v = c["variant"]
    if v in ("DPC-N", "DAPC-N", "RN"):
        return f"{v}(K={c.get('K', 0)},K'={c.get('K_prime', 0)},gamma={c.get('gamma', 1.0):g})"
    return f"{v}(K={c.get('K', 0)},gamma={c.get('gamma', 1.0):g})"


# ---------------------------------------------------------------------------
# budget model
# ---------------------------------------------------------------------------

def budget_allocation(t_bar: float, r: float, h: float, variant: str, min_level: int = 1) -> dict:
    """
    Split the per-sample communication budget among prediction and correction.

    ``rounds = floor(r h / t_bar)`` rounds are available for each phase.
    Running gradient uses ``n_C = n_EC = rounds``; running Newton
    ``K = K' = rounds - 1`` with one correction and one extra correction;
    DPC-G ``K = rounds - 1`` and ``n_C = rounds``; DPC-N
    ``K = K' = rounds - 1`` with ``n_C = 1``. A variant is infeasible when
    a truncation level it relies on falls below `min_level`.
    """
    if not (0 < r <= 0.5):
        raise ValueError("r must be in (0, 0.5]")
    if not t_bar > 0 or not h > 0:
        raise ValueError("t_bar and h must be positive")
    rounds = int(math.floor(r * h / t_bar + 1e-9))
    out = {"variant": variant, "rounds": rounds, "n_C": 0, "n_EC": 0, "K": 0, "K_prime": 0}
    if variant == "RG":
        out.update(n_C=rounds, n_EC=rounds)
        feasible = rounds >= 1
    elif variant == "RN":
        out.update(K=rounds - 1, K_prime=rounds - 1, n_C=1, n_EC=1)
        feasible = rounds - 1 >= min_level
    elif variant in ("DPC-G", "DAPC-G"):
        out.update(K=rounds - 1, n_C=rounds)
        feasible = rounds - 1 >= min_level
    elif variant in ("DPC-N", "DAPC-N"):
        out.update(K=rounds - 1, K_prime=rounds - 1, n_C=1)
        feasible = rounds - 1 >= min_level
    else:
        raise ValueError(f"unknown variant {variant!r}")
    out["feasible"] = bool(feasible)
    return out
