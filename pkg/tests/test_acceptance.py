"""
Acceptance suite. Each test checks one criterion at its stated tolerance
and records a single pass/fail line, printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from dpctrack import algorithms as alg
from dpctrack import cli
from dpctrack.bench import (asymptotic_error, budget_allocation, default_k_bar, fit_slope, horizon_steps,
                            optimal_trajectory, paper_benchmark, run_method, sweep_h)
from dpctrack.bounds import compute_constants, gradient_error_bound
from dpctrack.graph import path_graph
from dpctrack.netsim import run_decentralized
from dpctrack.objective import ConstantSignal
from dpctrack.problems import resource_allocation_objective, shifted_quadratic_objective
from dpctrack.splitting import assemble_split, splitting_contraction, truncated_solve
from dpctrack.verify import suite_accounting


def _sqrtm(D, power):
    w, V = np.linalg.eigh(D)
    return V @ np.diag(w ** power) @ V.T


def test_c01_truncated_inverse(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    checks = euclid_fail = formula_fail = dnorm_fail = h_fail = 0
    worst = 0.0
    for s in range(60):
        n, p = int(rng.integers(2, 11)), int(rng.integers(1, 4))
        b = paper_benchmark(seed=100 + s, n=n, p=p)
        Y = rng.uniform(-10, 10, (n, p))
        sp = assemble_split(b.oracle, b.graph, Y, rng.uniform(0, 60))
        rho_meas = splitting_contraction(sp)
        rep = compute_constants(b.constants, 0.1, 0, 0, 0.01)
        Hdense = sp.dense()
        D = sp.dense_d()
        Dh, Dmh = _sqrtm(D, 0.5), _sqrtm(D, -0.5)
        I = np.eye(n * p)
        for K in range(9):
            HK = np.column_stack([truncated_solve(sp, e, K).ravel() for e in I])
            E = I - Hdense @ HK
            err = np.linalg.norm(E, 2)
            checks += 1
            lhs = rho_meas ** (K + 1) + 1e-9
            if err > lhs:
                euclid_fail += 1
                worst = max(worst, err / lhs)
            if err > rep.varrho ** (K + 1) + 1e-9:
                formula_fail += 1
            if np.linalg.norm(Dmh @ E @ Dh, 2) > lhs:
                dnorm_fail += 1
            if np.linalg.norm(HK, 2) > rep.H + 1e-9:
                h_fail += 1
    secs = time.perf_counter() - t0
    ok = euclid_fail == 0 and h_fail == 0 and secs < 10
    report(1, ok, f"|I - grad2F H_K^-1| <= rho_meas^(K+1): {checks - euclid_fail}/{checks} hold "
                  f"(worst ratio {worst:.3f}); |H_K^-1| <= H: {checks - h_fail}/{checks}; {secs:.1f}s")
    report(1, formula_fail == 0, f"same residual against the closed-form varrho^(K+1): "
                                 f"{checks - formula_fail}/{checks} hold", info=True)
    report(1, dnorm_fail == 0, f"D-weighted residual against rho_meas^(K+1): {checks - dnorm_fail}/{checks} hold",
           info=True)
    assert ok


def test_c02_prediction_discretization(desk, report):
    t0 = time.perf_counter()
    hs = [0.2, 0.1, 0.05, 0.025]
    starts = np.linspace(0.0, 60.0, 31)
    errs, bounds = [], []
    for h in hs:
        rep = compute_constants(desk.constants, h, 40, 40, 0.01)
        cfg = alg.MethodConfig("DPC-G", h, K=40, gamma=0.01)
        worst = 0.0
        for t in starts:
            ys = optimal_trajectory(desk.oracle, desk.graph, [t, t + h])
            st = alg.MethodState(y=ys[0], t=t, k=0, t0=t)
            worst = max(worst, np.linalg.norm(alg.predict(st, desk.oracle, desk.graph, cfg) - ys[1]))
        errs.append(worst)
        bounds.append(rep.Delta * h ** 2)
    slope = fit_slope(hs, errs)
    secs = time.perf_counter() - t0
    ok = all(e <= b for e, b in zip(errs, bounds)) and 1.7 <= slope <= 2.3 and secs < 30
    pairs = ", ".join(f"h={h}: {e:.2e}<={b:.2e}" for h, e, b in zip(hs, errs, bounds))
    report(2, ok, f"{pairs}; slope {slope:.3f}; {secs:.1f}s")
    assert ok


def test_c03_backward_difference(desk, report):
    c = desk.constants
    h = 0.1
    cfg = alg.MethodConfig("DAPC-G", h, K=3, gamma=0.5 / (c.L + c.M))
    states = alg.run(desk.oracle, desk.graph, cfg, 200)
    worst = 0.0
    for s in states[1:]:
        approx = alg.backward_time_derivative(desk.oracle.gradient(s.y, s.t), desk.oracle.gradient(s.y, s.t - h), h)
        worst = max(worst, np.linalg.norm(approx - desk.oracle.time_gradient(s.y, s.t)))
    bound = h * c.C3 / 2 + 1e-9
    ok = worst <= bound
    report(3, ok, f"max backward-difference error {worst:.4f} <= hC3/2 = {bound:.4f} over 200 steps")
    assert ok


def test_c04_plateau_containment(desk, report):
    c = desk.constants
    gamma = 0.5 / (c.L + c.M)
    lines, ok = [], True
    for h in (0.1, 0.05):
        steps = horizon_steps(100.0)(h)
        ref = optimal_trajectory(desk.oracle, desk.graph, h * np.arange(steps + 1))
        for K in (3, 5):
            rep = compute_constants(c, h, K, K, gamma)
            for variant, approx in (("DPC-G", False), ("DAPC-G", True)):
                rec = run_method(desk.oracle, desk.graph, alg.MethodConfig(variant, h, K=K, gamma=gamma), steps,
                                 reference=ref)
                err = asymptotic_error(rec, default_k_bar(steps, h))
                bound = gradient_error_bound(rep, "any_h", approx)
                ok &= err <= bound
                lines.append(f"{variant} h={h} K={K}: {err:.3g}<={bound:.3g}")
    report(4, ok, "; ".join(lines))
    assert ok


def test_c05_order_of_accuracy(desk, report):
    t0 = time.perf_counter()
    c = desk.constants
    g = 1.0 / (c.L + c.M)
    cfgs = [dict(variant="RG", gamma=g, label="RG"),
            dict(variant="DPC-G", K=8, gamma=g, label="DPC-G"),
            dict(variant="DPC-N", K=8, K_prime=8, gamma=1.0, label="DPC-N")]
    res = sweep_h(desk, cfgs, [0.05, 0.1, 0.2, 0.5])
    s = res.slopes
    secs = time.perf_counter() - t0
    ok = abs(s["RG"] - 1) <= 0.4 and abs(s["DPC-G"] - 2) <= 0.4 and s["DPC-N"] >= 3.3 and secs < 300
    report(5, ok, f"slopes RG {s['RG']:.3f}, DPC-G {s['DPC-G']:.3f}, DPC-N {s['DPC-N']:.3f}; {secs:.1f}s")
    assert ok


def test_c06_separation(desk, report):
    c = desk.constants
    h, steps = 0.1, 1000
    ref = optimal_trajectory(desk.oracle, desk.graph, h * np.arange(steps + 1))
    rg = run_method(desk.oracle, desk.graph, alg.MethodConfig("RG", h, gamma=1 / (c.L + c.M)), steps, reference=ref)
    nw = run_method(desk.oracle, desk.graph, alg.MethodConfig("DPC-N", h, K=5, K_prime=5, gamma=1.0), steps,
                    reference=ref)
    a, b = asymptotic_error(rg), asymptotic_error(nw)
    ok = b / a <= 1e-3
    report(6, ok, f"DPC-N plateau {b:.3e} / RG plateau {a:.3e} = {b / a:.2e} <= 1e-3")
    assert ok


def test_c07_newton_exactness(report):
    # quadratic member of the benchmark family (zero logistic slopes)
    b = paper_benchmark(seed=0, b_max=0.0)
    o, g = b.oracle, b.graph
    rng = np.random.default_rng(7)
    Z = np.zeros((g.n, g.p))
    ystar = np.linalg.solve(o.dense_hessian(Z, 3.0), -o.gradient(Z, 3.0).ravel()).reshape(Z.shape)
    r = splitting_contraction(assemble_split(o, g, Z, 3.0))
    coupled = np.abs(alg.correct_newton(ystar + rng.normal(size=Z.shape), o, g, 3.0, 1.0, 30) - ystar).max()
    g = path_graph(8, p=3)
    a = rng.normal(size=(8, 3))
    dec = shifted_quadratic_objective(g, rng.uniform(1, 3, 8), ConstantSignal(a))
    exact = np.abs(alg.correct_newton(rng.normal(size=(8, 3)), dec, g, 0.0, 1.0, 0) - a).max()
    eps = np.finfo(float).eps
    ok = coupled <= 1e-10 and exact <= 4 * eps * max(1.0, np.abs(a).max())
    report(7, ok, f"coupled quadratic (contraction {r:.3f}) K'=30: {coupled:.2e} <= 1e-10; B=0, K'=0: {exact:.2e} (machine precision)")
    assert ok


def test_c08_decentralization(desk, report):
    configs = [alg.MethodConfig("DPC-G", 0.1, K=3, gamma=0.04), alg.MethodConfig("DAPC-G", 0.1, K=3, gamma=0.04),
               alg.MethodConfig("DPC-N", 0.1, K=3, K_prime=3, gamma=1.0),
               alg.MethodConfig("DAPC-N", 0.1, K=3, K_prime=3, gamma=1.0)]
    diffs = {}
    for cfg in configs:
        cen = np.array([s.y for s in alg.run(desk.oracle, desk.graph, cfg, 100)])
        dec = run_decentralized(cfg, desk.oracle, desk.graph, steps=100).trajectory
        diffs[cfg.variant] = float(np.abs(cen - dec).max())
    # locality: perturb everything node 0 sends during one prediction
    probes_ok = True
    g = path_graph(9, p=2)
    rng = np.random.default_rng(3)
    f = shifted_quadratic_objective(g, rng.uniform(1, 2, 9), ConstantSignal(rng.normal(size=(9, 2)))).f
    o = resource_allocation_objective(g, ConstantSignal(rng.normal(size=(8, 2))), 1.0, f)
    for K in range(5):
        cfg = alg.MethodConfig("DPC-G", 0.1, K=K, gamma=0.04)
        base = run_decentralized(cfg, o, g, steps=1).predictions[1]
        hit = run_decentralized(cfg, o, g, steps=1, tamper=lambda s, r, i, j, x: x + 1.0 if i == 0 else x)
        changed = np.abs(hit.predictions[1] - base).max(axis=1) > 0
        far = g.hop_distances(0) > K + 1
        probes_ok &= not np.any(changed[far])
        probes_ok &= bool(np.abs(hit.trajectory[1][1] - run_decentralized(cfg, o, g, steps=1).trajectory[1][1]).max() > 0)
    ok = max(diffs.values()) <= 1e-12 and probes_ok
    report(8, ok, "max |netsim - centralized| " + ", ".join(f"{k} {v:.1e}" for k, v in diffs.items())
           + f"; locality probes {'pass' if probes_ok else 'FAIL'}")
    assert ok


def test_c09_accounting(report):
    fails = suite_accounting()
    ok = not fails
    report(9, ok, "12 (variant, K, K') ledgers equal the closed forms" if ok else "; ".join(fails))
    assert ok


def test_c10_budget(report):
    one = {v: budget_allocation(0.1, 0.5, 1.0, v) for v in ("RG", "RN", "DPC-G", "DPC-N")}
    fifth = {v: budget_allocation(0.1, 0.5, 0.2, v)["feasible"] for v in ("RG", "RN", "DPC-G", "DPC-N")}
    got = (one["RG"]["n_C"], one["RG"]["n_EC"], one["RN"]["K"], one["RN"]["K_prime"], one["DPC-G"]["K"],
           one["DPC-G"]["n_C"], one["DPC-N"]["K"], one["DPC-N"]["K_prime"])
    ok = got == (5, 5, 4, 4, 4, 5, 4, 4) and all(a["feasible"] for a in one.values()) \
        and fifth == {"RG": True, "RN": False, "DPC-G": False, "DPC-N": False}
    report(10, ok, f"h=1: RG {got[0]}/{got[1]}, RN {got[2]}/{got[3]}, DPC-G {got[4]},{got[5]}, DPC-N {got[6]}/{got[7]}; "
                   f"h=0.2 feasible: {[v for v, f in fifth.items() if f]}")
    assert ok


def test_c11_newton_limits(desk, report):
    c = desk.constants
    gamma = 0.5
    seq = [(1e-2, 10), (1e-4, 50), (1e-6, 100), (1e-8, 200)]
    a0s, a1s = [], []
    for h, K in seq:
        rep = compute_constants(c, h, K, K, gamma)
        a0s.append(rep.alpha0)
        a1s.append(rep.alpha1)
    lim = compute_constants(c, 1e-8, 200, 200, 1.0, tau=0.999)
    target = 2 * c.m / (c.C1 * lim.sigma ** 2)
    rel = abs(lim.attraction_radius - target) / target
    ok = (a0s[-1] <= 1e-6 and abs(a1s[-1] - (1 - gamma)) <= 1e-6 and np.all(np.diff(a0s) < 0)
          and rel <= 0.01)
    report(11, ok, f"alpha0 -> {a0s[-1]:.2e}, alpha1 -> {a1s[-1]:.9f} (1-gamma = {1 - gamma}); "
                   f"radius {lim.attraction_radius:.5f} vs 2m/(C1 sigma^2) {target:.5f} ({rel:.2%})")
    assert ok


def test_c12_determinism(tmp_path, report):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[run]\nsteps = 300\n[sweep]\nhorizon = 20.0\n")
    same = {}
    for cmd, name in (("run", "run.csv"), ("sweep", "sweep.csv"), ("budget", "budget.csv")):
        a, b = tmp_path / f"{cmd}-a", tmp_path / f"{cmd}-b"
        assert cli.main([cmd, "--config", str(cfg), "--out", str(a), "--seed", "3"]) == 0
        assert cli.main([cmd, "--config", str(cfg), "--out", str(b), "--seed", "3"]) == 0
        same[name] = (a / name).read_bytes() == (b / name).read_bytes()
    ok = all(same.values())
    report(12, ok, "byte-identical: " + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in same.items()))
    assert ok
