"""
TOML configuration for the command-line driver.

Schema (every key optional, unknown keys rejected)::

    [problem]
    family = "resource_allocation"   # the only built-in family
    scale = "desk"                   # or "paper"
    n = 10                           # override the scale's node count
    p = 3                            # override the scale's block size
    beta = 4.47213595499958
    omega = 0.1
    seed = 0
    amplitude = 10.0                 # target drift amplitude
    q_low = 1.0                      # diag(Q) ~ U[q_low, q_high]
    q_high = 2.0
    b_max = 2.0                      # logistic slopes ~ U[-b_max, b_max]

    [method]
    variant = "DPC-N"
    h = 0.1
    K = 5
    K_prime = 5
    gamma = "auto"                   # 1/(L+M) for gradient corrections, 1 for Newton
    n_C = 1
    n_EC = 0
    gamma_schedule = "constant"      # or "ramp": gamma_k = 1 - 0.9/k

    [run]
    steps = 500
    t0 = 0.0
    k_bar = -1                       # -1: default burn-in rule

    [sweep]
    h = [0.05, 0.1, 0.2, 0.5]
    horizon = 100.0
    [[sweep.methods]]                # any number of method tables (no h)
    variant = "RG"

    [budget]
    t_bar = 0.1
    r = 0.5
    h = [0.2, 0.5, 1.0]
    min_level = 1
    horizon = 100.0

    [bounds]
    tau = -1.0                       # -1: 1 - gamma/2
"""

from __future__ import annotations

import copy
import math
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigFileError(ValueError):
    """Configuration does not match the schema."""


NUMBER = (int, float)

SCHEMA = {
    "problem": {"family": str, "scale": str, "n": int, "p": int, "beta": NUMBER, "omega": NUMBER,
                "seed": int, "amplitude": NUMBER, "q_low": NUMBER, "q_high": NUMBER, "b_max": NUMBER},
    "method": {"variant": str, "h": NUMBER, "K": int, "K_prime": int, "gamma": (int, float, str),
               "n_C": int, "n_EC": int, "gamma_schedule": str},
    "run": {"steps": int, "t0": NUMBER, "k_bar": int},
    "sweep": {"h": list, "horizon": NUMBER, "methods": list},
    "budget": {"t_bar": NUMBER, "r": NUMBER, "h": list, "min_level": int, "horizon": NUMBER},
    "bounds": {"tau": NUMBER},
}

SWEEP_METHOD_KEYS = {"variant": str, "K": int, "K_prime": int, "gamma": (int, float, str),
                     "n_C": int, "n_EC": int, "gamma_schedule": str, "label": str}

DEFAULTS = {
    "problem": {"family": "resource_allocation", "scale": "desk", "n": 0, "p": 0, "beta": math.sqrt(20.0),
                "omega": 0.1, "seed": 0, "amplitude": 10.0, "q_low": 1.0, "q_high": 2.0, "b_max": 2.0},
    "method": {"variant": "DPC-N", "h": 0.1, "K": 5, "K_prime": 5, "gamma": "auto", "n_C": 1, "n_EC": 0,
               "gamma_schedule": "constant"},
    "run": {"steps": 500, "t0": 0.0, "k_bar": -1},
    "sweep": {"h": [0.05, 0.1, 0.2, 0.5], "horizon": 100.0,
              "methods": [{"variant": "RG", "gamma": "auto"},
                          {"variant": "DPC-G", "K": 8, "gamma": "auto"},
                          {"variant": "DPC-N", "K": 8, "K_prime": 8, "gamma": 1.0}]},
    "budget": {"t_bar": 0.1, "r": 0.5, "h": [0.2, 0.5, 1.0], "min_level": 1, "horizon": 100.0},
    "bounds": {"tau": -1.0},
}


def _check_type(where, key, value, expected):
    if isinstance(value, bool) or not isinstance(value, expected):
        names = expected.__name__ if isinstance(expected, type) else "/".join(t.__name__ for t in expected)
        raise ConfigFileError(f"{where}.{key}: expected {names}, got {type(value).__name__}")


def validate(raw: dict) -> dict:
    """Merge `raw` over the defaults, rejecting unknown sections or keys."""
    cfg = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in SCHEMA:
            raise ConfigFileError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigFileError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in SCHEMA[section]:
                raise ConfigFileError(f"unknown key {section}.{key}")
            _check_type(section, key, value, SCHEMA[section][key])
            cfg[section][key] = value
    for i, m in enumerate(cfg["sweep"]["methods"]):
        if not isinstance(m, dict) or "variant" not in m:
            raise ConfigFileError(f"sweep.methods[{i}] must be a table with a variant")
        for key, value in m.items():
            if key not in SWEEP_METHOD_KEYS:
                raise ConfigFileError(f"unknown key sweep.methods[{i}].{key}")
            _check_type(f"sweep.methods[{i}]", key, value, SWEEP_METHOD_KEYS[key])
    for section in ("sweep", "budget"):
        for v in cfg[section]["h"]:
            _check_type(section, "h[]", v, NUMBER)
    for section, key in (("method", "gamma"),):
        v = cfg[section][key]
        if isinstance(v, str) and v != "auto":
            raise ConfigFileError(f"{section}.{key}: expected a number or \"auto\"")
    if cfg["problem"]["family"] != "resource_allocation":
        raise ConfigFileError(f"unknown problem family {cfg['problem']['family']!r}")
    if cfg["problem"]["scale"] not in ("desk", "paper"):
        raise ConfigFileError("problem.scale must be \"desk\" or \"paper\"")
    if cfg["method"]["gamma_schedule"] not in ("constant", "ramp"):
        raise ConfigFileError("method.gamma_schedule must be \"constant\" or \"ramp\"")
    if cfg["run"]["steps"] < 1:
        raise ConfigFileError("run.steps must be positive")
    return cfg


def load(path=None) -> dict:
    """Read and validate a TOML file; ``None`` gives the defaults."""
    if path is None:
        return validate({})
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigFileError(f"cannot read {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigFileError(f"{path}: {exc}") from None
    return validate(raw)
