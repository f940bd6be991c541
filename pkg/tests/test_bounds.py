import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dpctrack.bounds import (compute_constants, gradient_error_bound, newton_feasibility, parse_report_text,
                             solution_drift_bound)
from dpctrack.graph import NetworkGraph
from dpctrack.objective import ConstantsBundle, CosineSignal
from dpctrack.problems import analytic_constants, shifted_quadratic_objective

BASE = dict(m=1.0, M=4.0, ell=0.5, L=2.0, C0=3.0, C1=0.5, C2=0.4, C3=2.0)


def bundle(**kw):
    d = dict(BASE)
    d.update(kw)
    return ConstantsBundle(**d)


def test_varrho_half():
    rep = compute_constants(bundle(m=1.0, L=2.0), 0.1, 2, 2, 0.1)
    assert rep.varrho == pytest.approx(0.5)


def test_quadratic_family_has_no_discretization():
    rep = compute_constants(bundle(C1=0.0, C2=0.0, C3=0.0), 0.1, 3, 3, 0.1)
    assert rep.Delta == 0.0 and rep.sigma == 1.0


def test_zero_bound_for_exact_quadratic():
    c = bundle(C0=0.0, C1=0.0, C2=0.0, C3=0.0)
    rep = compute_constants(c, 0.1, 3, 3, 0.1)
    assert gradient_error_bound(rep, "small_h") == 0.0


def test_large_k_reduces_to_h2_term():
    c = bundle()
    h, g = 0.05, 0.1
    rep = compute_constants(c, h, 400, 400, g)
    disc = c.C0 * c.C2 / c.m ** 2 + c.C3 / (2 * c.m) + c.C0 ** 2 * c.C1 / (2 * c.m ** 3)
    ref = rep.rho / (1 - rep.rho * rep.sigma) * h ** 2 * disc
    assert gradient_error_bound(rep, "small_h") == pytest.approx(ref, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(h=st.floats(1e-3, 1.0), K=st.integers(0, 10), gamma=st.floats(1e-3, 0.39))
def test_approximate_bound_dominates(h, K, gamma):
    rep = compute_constants(bundle(), h, K, K, gamma)
    assert gradient_error_bound(rep, "any_h", True) >= gradient_error_bound(rep, "any_h", False)
    assert rep.alpha0_approx >= rep.alpha0


def test_small_h_regime_guard():
    rep = compute_constants(bundle(), 5.0, 0, 0, 0.01)
    assert "rho_sigma_ge_1" in rep.flags
    with pytest.raises(ValueError):
        gradient_error_bound(rep, "small_h")
    assert math.isinf(rep.gradient_asymptote["DPC-G.small_h"])


def test_rho_flag():
    rep = compute_constants(bundle(), 0.1, 0, 0, 1.0)
    assert "rho_ge_1" in rep.flags
    assert math.isinf(gradient_error_bound(rep))


def test_alpha_limits():
    c = bundle()
    rep = compute_constants(c, 1e-9, 300, 300, 0.6)
    assert rep.alpha0 < 1e-6
    assert rep.alpha1 == pytest.approx(0.4, abs=1e-6)


def test_attraction_radius_limit():
    c = bundle()
    rep = compute_constants(c, 1e-9, 300, 300, 1.0, tau=0.999999)
    assert rep.attraction_radius == pytest.approx(2 * c.m / (c.C1 * rep.sigma ** 2), rel=1e-3)


def test_global_convergence_without_c1():
    rep = compute_constants(bundle(C1=0.0), 0.01, 5, 5, 1.0)
    res = newton_feasibility(rep)
    assert res["feasible"] and math.isinf(res["attraction_radius"])


def test_tau_range():
    rep = compute_constants(bundle(), 0.01, 5, 5, 0.5)
    with pytest.raises(ValueError):
        newton_feasibility(rep, tau=0.4)
    with pytest.raises(ValueError):
        newton_feasibility(rep, tau=1.0)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        compute_constants(bundle(), 0.0, 1, 1, 0.1)
    with pytest.raises(ValueError):
        gradient_error_bound(compute_constants(bundle(), 0.1, 1, 1, 0.1), "tiny_h")


def test_report_text_roundtrip():
    rep = compute_constants(bundle(), 0.1, 2, 3, 0.2)
    d = parse_report_text(rep.to_text())
    assert float(d["varrho"]) == rep.varrho
    assert d["K_prime"] == "3"
    assert float(d["gradient_asymptote.DPC-G.any_h"]) == rep.gradient_asymptote["DPC-G.any_h"]


def test_drift_bound_zero():
    assert solution_drift_bound(bundle(C0=0.0), 0.3) == 0.0


def test_drift_bound_cosine_scalar():
    o = shifted_quadratic_objective(NetworkGraph(1, 1, ()), 1.0, CosineSignal(1.0, np.zeros((1, 1)), 1.0))
    c = analytic_constants(o)
    assert c.C0 / c.m == pytest.approx(1.0)
    for t in np.linspace(0, 6, 25):
        for h in (0.01, 0.3, 1.0):
            assert abs(math.cos(t + h) - math.cos(t)) <= solution_drift_bound(c, h) + 1e-15


def test_drift_bound_on_benchmark(desk):
    from dpctrack.bench import optimal_trajectory
    h = 0.2
    ys = optimal_trajectory(desk.oracle, desk.graph, h * np.arange(501))
    step = np.linalg.norm(np.diff(ys, axis=0).reshape(500, -1), axis=1)
    assert np.all(step <= solution_drift_bound(desk.constants, h))
