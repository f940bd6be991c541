"""
Self-check suites run by ``dpctrack verify``.

Each suite returns a :class:`SuiteResult`. The dense evaluators here are
independent oracles for the library's neighbor-local recursions and are
not used anywhere else.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import algorithms as alg
from .bench import optimal_trajectory, paper_benchmark
from .bounds import compute_constants
from .netsim import comm_requirements, run_decentralized
from .splitting import assemble_split, truncated_solve


@dataclass
class SuiteResult:
    name: str
    passed: bool
    failures: list[str] = field(default_factory=list)
    seconds: float = 0.0


def dense_series_inverse(D, B, K):
    """``D^{-1/2} sum_{tau<=K} (D^{-1/2} B D^{-1/2})^tau D^{-1/2}`` from dense matrices."""
    w, V = np.linalg.eigh(D)
    Dmh = V @ np.diag(w ** -0.5) @ V.T
    X = Dmh @ B @ Dmh
    S = np.eye(D.shape[0])
    P = np.eye(D.shape[0])
    for _ in range(K):
        P = P @ X
        S = S + P
    return Dmh @ S @ Dmh


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def suite_derivatives(seed=0):
    bench = paper_benchmark(seed)
    o, g = bench.oracle, bench.graph
    rng = np.random.default_rng(seed)
    fails = []
    for _ in range(5):
        Y = rng.uniform(-10, 10, (g.n, g.p))
        t = rng.uniform(0, 60)
        G = o.gradient(Y, t)
        eps = 1e-5
        fd = np.zeros_like(Y)
        for idx in np.ndindex(*Y.shape):
            E = np.zeros_like(Y)
            E[idx] = eps
            fd[idx] = (o.value(Y + E, t) - o.value(Y - E, t)) / (2 * eps)
        if _rel(G, fd) > 1e-6:
            fails.append(f"gradient mismatch {_rel(G, fd):.2e}")
        U = rng.normal(size=Y.shape)
        hv = (o.dense_hessian(Y, t) @ U.ravel()).reshape(Y.shape)
        fdh = (o.gradient(Y + 1e-4 * U, t) - o.gradient(Y - 1e-4 * U, t)) / 2e-4
        if _rel(hv, fdh) > 1e-5:
            fails.append(f"Hessian-vector mismatch {_rel(hv, fdh):.2e}")
        fdt = (o.gradient(Y, t + 1e-5) - o.gradient(Y, t - 1e-5)) / 2e-5
        T = o.time_gradient(Y, t)
        if _rel(T, fdt) > 1e-6:
            fails.append(f"mixed time derivative mismatch {_rel(T, fdt):.2e}")
        H = o.dense_hessian(Y, t)
        if np.abs(H - H.T).max() > 1e-10 * np.abs(H).max():
            fails.append("Hessian not symmetric")
    return fails


def suite_hessian_approximation(seed=0):
    """Recursion against the dense series, plus the truncation inequalities."""
    fails = []
    rng = np.random.default_rng(seed)
    for s in range(10):
        n, p = int(rng.integers(2, 11)), int(rng.integers(1, 4))
        bench = paper_benchmark(seed + s, n=n, p=p)
        Y = rng.uniform(-10, 10, (n, p))
        t = rng.uniform(0, 60)
        sp = assemble_split(bench.oracle, bench.graph, Y, t)
        D, B = sp.dense_d(), sp.dense_b()
        rep = compute_constants(bench.constants, 0.1, 0, 0, 0.01)
        I = np.eye(n * p)
        w, V = np.linalg.eigh(D)
        Dh, Dmh = V @ np.diag(w ** 0.5) @ V.T, V @ np.diag(w ** -0.5) @ V.T
        for K in range(9):
            Hk = np.column_stack([truncated_solve(sp, e, K).ravel() for e in I])
            ref = dense_series_inverse(D, B, K)
            if np.abs(Hk - ref).max() > 1e-10 * max(1.0, np.abs(ref).max()):
                fails.append(f"recursion differs from series (n={n}, p={p}, K={K})")
                break
            if np.linalg.norm(Hk, 2) > rep.H + 1e-9:
                fails.append(f"|H_K^-1| exceeds H (n={n}, p={p}, K={K})")
            E = I - (D - B) @ Hk
            # D-weighted form of the truncation error
            if np.linalg.norm(Dmh @ E @ Dh, 2) > rep.varrho ** (K + 1) + 1e-9:
                fails.append(f"truncation error exceeds varrho^(K+1) (n={n}, p={p}, K={K})")
    return fails


def suite_prediction(seed=0):
    bench = paper_benchmark(seed)
    fails = []
    for h in (0.2, 0.1):
        rep = compute_constants(bench.constants, h, 40, 40, 0.01)
        cfg = alg.MethodConfig("DPC-G", h, K=40, gamma=0.01)
        for t in (0.0, 7.0, 23.0):
            ys = optimal_trajectory(bench.oracle, bench.graph, [t, t + h])
            st = alg.MethodState(y=ys[0], t=t, k=0, t0=t)
            err = np.linalg.norm(alg.predict(st, bench.oracle, bench.graph, cfg) - ys[1])
            if err > rep.Delta * h ** 2:
                fails.append(f"prediction error {err:.3e} above Delta h^2 at h={h}, t={t}")
            # centralized prediction with the dense Hessian
            H = bench.oracle.dense_hessian(ys[0], t)
            tg = bench.oracle.time_gradient(ys[0], t).ravel()
            dense = ys[0].ravel() - h * np.linalg.solve(H, tg)
            if np.abs(alg.predict(st, bench.oracle, bench.graph, cfg).ravel() - dense).max() > 1e-8:
                fails.append(f"truncated prediction differs from dense prediction at h={h}, t={t}")
    return fails


EQUIV_CONFIGS = [
    dict(variant="DPC-G", K=3, gamma=0.04),
    dict(variant="DAPC-G", K=3, gamma=0.04),
    dict(variant="DPC-N", K=3, K_prime=3, gamma=1.0),
    dict(variant="DAPC-N", K=3, K_prime=3, gamma=1.0),
]


def suite_equivalence(seed=0, steps=30):
    bench = paper_benchmark(seed)
    fails = []
    for kw in EQUIV_CONFIGS:
        cfg = alg.MethodConfig(h=0.1, **kw)
        states = alg.run(bench.oracle, bench.graph, cfg, steps)
        cen = np.array([s.y for s in states])
        dec = run_decentralized(cfg, bench.oracle, bench.graph, steps=steps).trajectory
        diff = float(np.abs(cen - dec).max())
        if diff > 1e-12:
            fails.append(f"{cfg.variant}: decentralized and centralized differ by {diff:.2e}")
    return fails


ACCOUNTING_CASES = [
    ("DPC-G", 0, 0), ("DPC-G", 3, 0), ("DPC-G", 5, 0),
    ("DAPC-G", 0, 0), ("DAPC-G", 2, 0), ("DAPC-G", 4, 0),
    ("DPC-N", 0, 0), ("DPC-N", 2, 3), ("DPC-N", 5, 5),
    ("DAPC-N", 0, 1), ("DAPC-N", 3, 2), ("DAPC-N", 4, 4),
]


def table_expectation(variant, K, K_prime, p):
    """Per-sample (prediction rounds, correction rounds, scalars), tabulated independently."""
    if variant.endswith("-G"):
        return K + 1, 1, (K + 1) * p + p
    return K + 1, K_prime + 1, (K + 1) * p + (K_prime + 1) * p


def suite_accounting(seed=0, steps=5):
    bench = paper_benchmark(seed)
    g = bench.graph
    fails = []
    for variant, K, Kp in ACCOUNTING_CASES:
        gamma = 1.0 if variant.endswith("-N") else 0.04
        cfg = alg.MethodConfig(variant, 0.1, K=K, K_prime=Kp, gamma=gamma)
        req = comm_requirements(variant, K, Kp, g.p)
        if (req.prediction_rounds, req.correction_rounds, req.scalars) != table_expectation(variant, K, Kp, g.p):
            fails.append(f"{variant} K={K} K'={Kp}: closed form disagrees with the tabulated cost")
        ledger = run_decentralized(cfg, bench.oracle, g, steps=steps).ledger
        if not ledger.matches(req, steps, g):
            fails.append(f"{variant} K={K} K'={Kp}: ledger disagrees with the closed form")
    return fails


SUITES = {
    "derivatives": suite_derivatives,
    "hessian_approximation": suite_hessian_approximation,
    "prediction": suite_prediction,
    "equivalence": suite_equivalence,
    "accounting": suite_accounting,
}


def run_suites(names=None, seed=0) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        t0 = time.perf_counter()
        try:
            fails = SUITES[name](seed=seed)
        except Exception as exc:  # a crashing suite is a failing suite
            fails = [f"{type(exc).__name__}: {exc}"]
        out.append(SuiteResult(name, not fails, fails, time.perf_counter() - t0))
    return out
