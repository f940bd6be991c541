import numpy as np
import pytest

from dpctrack import algorithms as alg
from dpctrack.bench import optimal_trajectory
from dpctrack.graph import NetworkGraph, path_graph
from dpctrack.objective import ConstantSignal, CosineSignal
from dpctrack.problems import resource_allocation_objective, shifted_quadratic_objective

ONE = NetworkGraph(1, 1, ())


def scalar_tracking():
    # f = 1/2 (y - cos t)^2
    return shifted_quadratic_objective(ONE, 1.0, CosineSignal(1.0, np.zeros((1, 1)), 1.0))


def coupled_quadratic(rng, n=5, p=2):
    g = path_graph(n, p=p)
    f = shifted_quadratic_objective(g, rng.uniform(1, 3, n), ConstantSignal(rng.normal(size=(n, p)))).f
    return g, resource_allocation_objective(g, None, 0.7, f)


@pytest.mark.parametrize("kw", [
    dict(variant="XYZ", h=0.1),
    dict(variant="DPC-G", h=0.0),
    dict(variant="DPC-G", h=0.1, K=-1),
    dict(variant="DPC-N", h=0.1, gamma=1.5),
    dict(variant="DPC-G", h=0.1, gamma=0.0),
    dict(variant="DPC-G", h=0.1, n_EC=1),
    dict(variant="RG", h=0.1, n_C=0),
    dict(variant="DPC-N", h=0.1, gamma_schedule="nope"),
])
def test_invalid_configs(kw):
    with pytest.raises(alg.ConfigError):
        alg.MethodConfig(**kw)


def test_ramp_schedule():
    assert alg.ramp_schedule(1) == pytest.approx(0.1)
    assert alg.ramp_schedule(10) == pytest.approx(0.91)
    cfg = alg.MethodConfig("DPC-N", 0.1, gamma_schedule="ramp")
    assert cfg.gamma_at(2) == pytest.approx(0.55)
    assert cfg.echo()["gamma_schedule"] == "ramp"


def test_time_invariant_prediction_stays():
    g = path_graph(3, p=2)
    o = shifted_quadratic_objective(g, 2.0, ConstantSignal(np.ones((3, 2))), edge_weight=0.3)
    st = alg.MethodState(y=np.full((3, 2), 0.4), t=1.0)
    cfg = alg.MethodConfig("DPC-G", 0.1, K=3, gamma=0.1)
    assert np.allclose(alg.predict(st, o, g, cfg), st.y)


@pytest.mark.parametrize("K", [0, 5])
def test_scalar_prediction(K):
    o = scalar_tracking()
    t, y, h = 0.7, 0.3, 0.05
    st = alg.MethodState(y=np.array([[y]]), t=t)
    pred = alg.predict(st, o, ONE, alg.MethodConfig("DPC-G", h, K=K, gamma=0.1))
    assert pred[0, 0] == pytest.approx(y - h * np.sin(t))


def test_backward_derivative_affine_is_exact():
    o = scalar_tracking()
    # gradient y - cos t is not affine in t; use a linear target instead
    g = path_graph(2)

    class Linear(ConstantSignal):
        def value(self, t):
            return self._v * t

        def rate(self, t):
            return self._v

    o = shifted_quadratic_objective(g, 2.0, Linear(np.array([[1.0], [-3.0]])), edge_weight=0.5)
    y = np.array([[0.2], [0.1]])
    h = 0.3
    approx = alg.backward_time_derivative(o.gradient(y, 2.0), o.gradient(y, 2.0 - h), h)
    assert np.allclose(approx, o.time_gradient(y, 2.0))


def test_backward_first_prediction_is_identity(desk):
    cfg = alg.MethodConfig("DAPC-G", 0.1, K=3, gamma=0.01)
    st = alg.initial_state(desk.graph, np.ones((desk.graph.n, desk.graph.p)))
    assert np.array_equal(alg.predict(st, desk.oracle, desk.graph, cfg), st.y)


def test_gradient_correction_at_stationary_point(desk):
    ys = optimal_trajectory(desk.oracle, desk.graph, [4.0])[0]
    out = alg.correct_gradient(ys, desk.oracle, desk.graph, 4.0, 0.04)
    assert np.abs(out - ys).max() < 1e-9


@pytest.mark.parametrize("gamma", [0.1, 0.5, 1.2])
def test_scalar_gradient_contraction(gamma):
    m0, a = 1.5, 2.0
    o = shifted_quadratic_objective(ONE, m0, ConstantSignal(np.array([[a]])))
    y = np.array([[-1.0]])
    out = alg.correct_gradient(y, o, ONE, 0.0, gamma)
    assert abs(out[0, 0] - a) == pytest.approx(abs(1 - gamma * m0) * abs(-1.0 - a))


def test_decoupled_gradient_contraction_by_rho(rng):
    g = path_graph(6, p=2)
    curv = np.linspace(0.5, 4.0, 6)
    o = shifted_quadratic_objective(g, curv, ConstantSignal(np.zeros((6, 2))))
    gamma = 0.3
    rho = max(abs(1 - gamma * curv.min()), abs(1 - gamma * curv.max()))
    for _ in range(10):
        y = rng.normal(size=(6, 2))
        out = alg.correct_gradient(y, o, g, 0.0, gamma)
        assert np.linalg.norm(out) <= rho * np.linalg.norm(y) + 1e-12


def test_newton_exact_when_uncoupled(rng):
    g = path_graph(4, p=2)
    a = rng.normal(size=(4, 2))
    o = shifted_quadratic_objective(g, [1.0, 2.0, 3.0, 4.0], ConstantSignal(a))
    out = alg.correct_newton(rng.normal(size=(4, 2)), o, g, 0.0, 1.0, 0)
    assert np.abs(out - a).max() <= 1e-15 * 8


def test_newton_large_level_reaches_minimizer(rng):
    g, o = coupled_quadratic(rng)
    ystar = np.linalg.solve(o.dense_hessian(np.zeros((5, 2)), 0.0), -o.gradient(np.zeros((5, 2)), 0.0).ravel())
    out = alg.correct_newton(rng.normal(size=(5, 2)), o, g, 0.0, 1.0, 200)
    assert np.abs(out.ravel() - ystar).max() < 1e-10


def test_newton_error_recursion(desk, rng):
    c = desk.constants
    varrho = (c.L / 2) / (c.m + c.L / 2)
    t = 3.0
    ys = optimal_trajectory(desk.oracle, desk.graph, [t])[0]
    for Kp, gamma in [(0, 1.0), (2, 0.7), (5, 1.0)]:
        for _ in range(5):
            yhat = ys + rng.normal(scale=0.5, size=ys.shape)
            e = np.linalg.norm(yhat - ys)
            out = alg.correct_newton(yhat, desk.oracle, desk.graph, t, gamma, Kp)
            lin = gamma * (c.L + c.M) * varrho ** (Kp + 1) / c.m + 1 - gamma
            bound = gamma * c.C1 / (2 * c.m) * e ** 2 + lin * e
            assert np.linalg.norm(out - ys) <= bound + 1e-8


def test_tiny_gamma_barely_moves(desk):
    cfg = alg.MethodConfig("DPC-G", 0.1, K=0, gamma=1e-9)
    st = alg.initial_state(desk.graph)
    nxt = alg.step(st, desk.oracle, desk.graph, cfg)
    grad = desk.oracle.gradient(nxt.predicted, nxt.t)
    assert np.linalg.norm(nxt.y - nxt.predicted) <= 1e-9 * np.linalg.norm(grad) * (1 + 1e-8)


def test_run_and_step_bookkeeping(desk):
    cfg = alg.MethodConfig("DAPC-N", 0.2, K=2, K_prime=2, gamma=1.0)
    states = alg.run(desk.oracle, desk.graph, cfg, 4, t0=1.0)
    assert len(states) == 5
    assert [s.k for s in states] == [0, 1, 2, 3, 4]
    assert states[-1].t == pytest.approx(1.8)
    # stored gradient is grad F(y_k; t_{k-1})
    s = states[2]
    assert np.allclose(s.previous_gradient, desk.oracle.gradient(s.y, 1.2))


def test_apc_and_pc_agree_to_second_order(desk):
    # once warmed up, one DAPC-G step differs from a DPC-G step from the same point by O(h^2)
    diffs = []
    for h in (0.1, 0.05):
        exact = alg.MethodConfig("DPC-G", h, K=10, gamma=0.02)
        approx = alg.MethodConfig("DAPC-G", h, K=10, gamma=0.02)
        states = alg.run(desk.oracle, desk.graph, approx, 5)
        s = states[-1]
        diffs.append(np.linalg.norm(alg.step(s, desk.oracle, desk.graph, approx).y
                                    - alg.step(s, desk.oracle, desk.graph, exact).y))
    assert diffs[1] <= diffs[0] / 3.0


def test_running_gradient_has_no_prediction(desk):
    cfg = alg.MethodConfig("RG", 0.1, gamma=0.04, n_C=2, n_EC=1)
    st = alg.step(alg.initial_state(desk.graph), desk.oracle, desk.graph, cfg)
    assert st.predicted is None
    y = np.zeros((desk.graph.n, desk.graph.p))
    for _ in range(3):
        y = alg.correct_gradient(y, desk.oracle, desk.graph, 0.1, 0.04)
    assert np.allclose(st.y, y)
