import numpy as np
import pytest

from dpctrack import algorithms as alg
from dpctrack import verify
from dpctrack.netsim import CommRequirements, comm_requirements
from dpctrack.splitting import as_blocks


def test_all_suites_pass():
    results = verify.run_suites()
    assert [r.name for r in results] == list(verify.SUITES)
    bad = {r.name: r.failures for r in results if not r.passed}
    assert not bad


def test_sign_flip_breaks_equivalence(monkeypatch):
    def flipped(split, v, K):
        V = as_blocks(v, split.graph)
        x = split.solve_d(V)
        for _ in range(K):
            x = split.solve_d(V - split.apply_b(x))
        return x

    monkeypatch.setattr(alg, "truncated_solve", flipped)
    (res,) = verify.run_suites(["equivalence"])
    assert not res.passed


def test_off_by_one_breaks_accounting(monkeypatch):
    def off(variant, K, K_prime, p, n_C=1, n_EC=0):
        r = comm_requirements(variant, K, K_prime, p, n_C, n_EC)
        return CommRequirements(r.prediction_rounds + 1, r.correction_rounds, r.scalars + p)

    monkeypatch.setattr(verify, "comm_requirements", off)
    (res,) = verify.run_suites(["accounting"])
    assert not res.passed


def test_crashing_suite_is_reported(monkeypatch):
    def boom(seed=0):
        raise RuntimeError("broken")

    monkeypatch.setitem(verify.SUITES, "derivatives", boom)
    (res,) = verify.run_suites(["derivatives"])
    assert not res.passed and "broken" in res.failures[0]


def test_dense_series_k0():
    D = np.diag([2.0, 4.0])
    B = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(verify.dense_series_inverse(D, B, 0), np.diag([0.5, 0.25]))
