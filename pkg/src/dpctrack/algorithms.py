"""
Prediction-correction tracking methods.

Each sampling step moves from ``y_k`` at ``t_k`` to ``y_{k+1}`` at
``t_{k+1} = t_k + h``:

* prediction ``y_{k+1|k} = y_k + h p_k`` with
  ``p_k = -H_(K)^{-1} d/dt grad F(y_k; t_k)``, using either the exact mixed
  derivative or a backward difference of gradients;
* ``n_C`` corrections on ``F(.; t_{k+1})``, gradient or truncated Newton.

Variants: ``DPC-G`` / ``DAPC-G`` (gradient correction, exact / approximate
time derivative), ``DPC-N`` / ``DAPC-N`` (Newton correction), and the
running baselines ``RG`` / ``RN`` that skip the prediction and spend
``n_C + n_EC`` corrections per sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import NetworkGraph
from .objective import ObjectiveOracle, as_blocks
from .splitting import assemble_split, truncated_solve

VARIANTS = ("DPC-G", "DAPC-G", "DPC-N", "DAPC-N", "RG", "RN")
PREDICTIVE = ("DPC-G", "DAPC-G", "DPC-N", "DAPC-N")
NEWTON = ("DPC-N", "DAPC-N", "RN")
BACKWARD = ("DAPC-G", "DAPC-N")


class ConfigError(ValueError):
    """Invalid method configuration."""


def ramp_schedule(k: int) -> float:
    """``gamma_k = 1 - 0.9 / k``: cautious first steps, then full Newton."""
    return 1.0 - 0.9 / max(k, 1)


SCHEDULES: dict[str, Callable[[int], float]] = {"ramp": ramp_schedule}


@dataclass(frozen=True)
class MethodConfig:
    """
    Parameters
    ----------
    variant : str
        One of :data:`VARIANTS`.
    h : float
        Sampling period.
    K, K_prime : int
        Truncation levels of the prediction and Newton-correction series.
    gamma : float
        Correction step size. Newton variants need ``0 < gamma <= 1``.
    n_C : int
        Corrections per sample.
    n_EC : int
        Extra corrections per sample, running baselines only.
    gamma_schedule : str or callable, optional
        Map ``k -> gamma_k`` overriding `gamma` (``"ramp"`` is
        :func:`ramp_schedule`).
    """

    variant: str
    h: float
    K: int = 0
    K_prime: int = 0
    gamma: float = 1.0
    n_C: int = 1
    n_EC: int = 0
    gamma_schedule: str | Callable[[int], float] | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        if not self.h > 0:
            raise ConfigError(f"sampling period h must be positive, got {self.h}")
        if self.K < 0 or self.K_prime < 0:
            raise ConfigError("truncation levels K and K_prime must be nonnegative")
        if self.n_C < 1:
            raise ConfigError("n_C must be at least 1")
        if self.n_EC < 0:
            raise ConfigError("n_EC must be nonnegative")
        if self.n_EC and self.predicts:
            raise ConfigError("extra corrections n_EC apply to running baselines only")
        if isinstance(self.gamma_schedule, str) and self.gamma_schedule not in SCHEDULES:
            raise ConfigError(f"unknown gamma schedule {self.gamma_schedule!r}")
        if self.gamma_schedule is None:
            self.check_gamma(self.gamma)

    @property
    def predicts(self) -> bool:
        return self.variant in PREDICTIVE

    @property
    def newton(self) -> bool:
        return self.variant in NEWTON

    @property
    def backward(self) -> bool:
        return self.variant in BACKWARD

    def check_gamma(self, gamma):
        if not gamma > 0:
            raise ConfigError(f"step size gamma must be positive, got {gamma}")
        if self.newton and gamma > 1:
            raise ConfigError(f"Newton variants need gamma in (0, 1], got {gamma}")

    def gamma_at(self, k: int) -> float:
        """Step size used for the corrections producing ``y_k``."""
        sched = self.gamma_schedule
        if sched is None:
            return self.gamma
        g = float((SCHEDULES[sched] if isinstance(sched, str) else sched)(k))
        self.check_gamma(g)
        return g

    @property
    def corrections(self) -> int:
        return self.n_C + self.n_EC

    def echo(self) -> dict:
        """Plain dict of the configuration (schedules by name)."""
        sched = self.gamma_schedule
        if callable(sched):
            sched = getattr(sched, "__name__", "custom")
        return {"variant": self.variant, "h": self.h, "K": self.K, "K_prime": self.K_prime,
                "gamma": self.gamma, "n_C": self.n_C, "n_EC": self.n_EC,
                "gamma_schedule": sched or "constant"}


@dataclass(frozen=True)
class MethodState:
    """
    Iterate at sample ``k``.

    ``previous_gradient`` holds ``grad F(y_k; t_{k-1})`` for the
    backward-difference variants; ``predicted`` is the prediction that led
    to ``y``, if any.
    """

    y: np.ndarray
    t: float
    k: int = 0
    t0: float = 0.0
    previous_gradient: np.ndarray | None = None
    predicted: np.ndarray | None = None


def initial_state(graph: NetworkGraph, y0=None, t0: float = 0.0) -> MethodState:
    """State at ``k = 0``; the default first iterate is zero."""
    y = np.zeros((graph.n, graph.p)) if y0 is None else as_blocks(y0, graph).copy()
    return MethodState(y=y, t=float(t0), k=0, t0=float(t0))


def backward_time_derivative(current_gradient, previous_gradient, h: float) -> np.ndarray:
    """``(grad F(y_k; t_k) - grad F(y_k; t_{k-1})) / h``, both at ``y_k``."""
    if not h > 0:
        raise ValueError("h must be positive")
    return (np.asarray(current_gradient) - np.asarray(previous_gradient)) / h


def predict(state: MethodState, oracle: ObjectiveOracle, graph: NetworkGraph, config: MethodConfig,
            time_derivative_mode: str | None = None) -> np.ndarray:
    """
    Prediction ``y_k + h p`` with ``p = -H_(K)^{-1} d/dt grad F``.

    ``time_derivative_mode`` is ``"exact"`` or ``"backward"`` and defaults to
    the variant's own mode. In backward mode at ``k = 0`` there is no
    previous gradient and the prediction is ``y_k`` itself.
    """
    mode = time_derivative_mode or ("backward" if config.backward else "exact")
    if mode not in ("exact", "backward"):
        raise ValueError(f"unknown time-derivative mode {mode!r}")
    y = as_blocks(state.y, graph)
    if mode == "exact":
        td = oracle.time_gradient(y, state.t)
    else:
        if state.k == 0 or state.previous_gradient is None:
            return y.copy()
        td = backward_time_derivative(oracle.gradient(y, state.t), state.previous_gradient, config.h)
    split = assemble_split(oracle, graph, y, state.t)
    return y + config.h * truncated_solve(split, -td, config.K)


def correct_gradient(predicted, oracle: ObjectiveOracle, graph: NetworkGraph, t_next: float,
                     gamma: float) -> np.ndarray:
    """One gradient step on ``F(.; t_next)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    y = as_blocks(predicted, graph)
    return y - gamma * oracle.gradient(y, t_next)


def correct_newton(predicted, oracle: ObjectiveOracle, graph: NetworkGraph, t_next: float,
                   gamma: float, K_prime: int) -> np.ndarray:
    """One truncated Newton step on ``F(.; t_next)`` at level `K_prime`."""
    if not 0 < gamma <= 1:
        raise ValueError("Newton correction needs gamma in (0, 1]")
    y = as_blocks(predicted, graph)
    split = assemble_split(oracle, graph, y, t_next)
    return y - gamma * truncated_solve(split, oracle.gradient(y, t_next), K_prime)


def step(state: MethodState, oracle: ObjectiveOracle, graph: NetworkGraph,
         config: MethodConfig) -> MethodState:
    """Advance one sampling period."""
    k_next = state.k + 1
    t_next = state.t0 + k_next * config.h
    if config.predicts:
        y_pred = predict(state, oracle, graph, config)
    else:
        y_pred = as_blocks(state.y, graph).copy()
    gamma = config.gamma_at(k_next)
    y = y_pred
    for c in range(config.corrections):
        if config.newton:
            # extra corrections of the running Newton baseline use level K
            level = config.K_prime if c < config.n_C else config.K
            y = correct_newton(y, oracle, graph, t_next, gamma, level)
        else:
            y = correct_gradient(y, oracle, graph, t_next, gamma)
    prev = oracle.gradient(y, state.t0 + state.k * config.h) if config.backward else None
    return MethodState(y=y, t=t_next, k=k_next, t0=state.t0, previous_gradient=prev,
                       predicted=y_pred if config.predicts else None)


def run(oracle: ObjectiveOracle, graph: NetworkGraph, config: MethodConfig, steps: int,
        y0=None, t0: float = 0.0):
    """
    Iterate :func:`step`.

    Returns
    -------
    states : list of MethodState
        ``steps + 1`` states, the first being the initial one.
    """
    state = initial_state(graph, y0, t0)
    states = [state]
    for _ in range(steps):
        state = step(state, oracle, graph, config)
        states.append(state)
    return states


__all__ = ["VARIANTS", "ConfigError", "MethodConfig", "MethodState", "initial_state", "predict",
           "backward_time_derivative", "correct_gradient", "correct_newton", "step", "run",
           "ramp_schedule"]
