"""
Closed-form error predictions evaluated from a :class:`ConstantsBundle`.

Notation: ``varrho = (L/2) / (m + L/2)`` bounds the splitting contraction,
``H = (m + L/2) / (m (m + ell/2))`` the norm of the truncated inverse,
``Gamma(varrho, K) = (C0/m) varrho^(K+1)`` the truncation error of the
prediction direction and ``Delta`` the discretization constant of the
prediction. ``rho`` is the contraction factor of a gradient correction and
``sigma`` the error growth across one prediction.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .objective import ConstantsBundle


@dataclass(frozen=True)
class BoundReport:
    varrho: float
    H: float
    Delta: float
    Gamma_K: float
    Gamma_Kprime: float
    rho: float
    sigma: float
    gradient_asymptote: dict
    alpha0: float
    alpha1: float
    alpha2: float
    alpha0_approx: float
    alpha1_approx: float
    tau: float
    tau_feasible: bool
    attraction_radius: float
    tau_feasible_approx: bool
    attraction_radius_approx: float
    h: float
    K: int
    K_prime: int
    gamma: float
    provenance: str = "analytic"
    flags: tuple = field(default_factory=tuple)

    def to_text(self) -> str:
        """Flat ``key = value`` block, one entry per line."""
        d = asdict(self)
        asym = d.pop("gradient_asymptote")
        flags = d.pop("flags")
        lines = []
        for k, v in d.items():
            lines.append(f"{k} = {_fmt(v)}")
        for k in sorted(asym):
            lines.append(f"gradient_asymptote.{k} = {_fmt(asym[k])}")
        lines.append(f"flags = {','.join(flags) if flags else 'none'}")
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_report_text(text: str) -> dict:
    """Read a block written by :meth:`BoundReport.to_text` into a flat dict of strings."""
    out = {}
    for line in text.splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def gamma_factor(c: ConstantsBundle, level: int) -> float:
    """``Gamma(varrho, K) = (C0/m) varrho^(K+1)``."""
    return c.C0 / c.m * _varrho(c) ** (level + 1)


def _varrho(c):
    return (c.L / 2.0) / (c.m + c.L / 2.0)


def _discretization(c: ConstantsBundle, H: float, approximate: bool) -> float:
    """Bracketed ``h^2`` coefficient of the asymptotes."""
    c3 = c.C3 / (2.0 * c.m) * ((1.0 + c.m * H) if approximate else 1.0)
    return c.C0 * c.C2 / c.m ** 2 + c3 + c.C0 ** 2 * c.C1 / (2.0 * c.m ** 3)


def _alphas(c, gamma, sigma, phi, level):
    # gamma (L+M) Gamma(K')/C0 written without the division so C0 = 0 is fine
    lin = gamma * (c.L + c.M) * _varrho(c) ** (level + 1) / c.m + 1.0 - gamma
    a2 = gamma * c.C1 / (2.0 * c.m) * sigma ** 2
    a1 = sigma * (gamma * c.C1 / c.m * phi + lin)
    a0 = phi * (gamma * c.C1 / (2.0 * c.m) * phi + lin)
    return a0, a1, a2


def _feasible(a0, a1, a2, tau):
    if not a1 < tau:
        return False, 0.0
    if a2 == 0.0:
        return True, math.inf
    radius = (tau - a1) / a2
    return tau * radius + a0 <= radius, radius


def compute_constants(c: ConstantsBundle, h: float, K: int, K_prime: int, gamma: float,
                      tau: float | None = None) -> BoundReport:
    """
    Evaluate every bound for sampling period `h`, levels `K`, `K_prime`
    and step size `gamma`.

    `tau` is the target contraction of the Newton analysis, default
    ``1 - gamma/2``. Conditions that void a bound (``rho >= 1``,
    ``rho sigma >= 1``) are reported in ``flags``; the affected asymptotes
    are infinite.
    """
    if h <= 0 or gamma <= 0 or K < 0 or K_prime < 0:
        raise ValueError("need h > 0, gamma > 0 and nonnegative levels")
    if tau is None:
        tau = 1.0 - gamma / 2.0
    m = c.m
    varrho = _varrho(c)
    H = (m + c.L / 2.0) / (m * (m + c.ell / 2.0))
    Delta = _discretization(c, H, approximate=False)
    Gk, Gkp = gamma_factor(c, K), gamma_factor(c, K_prime)
    rho = max(abs(1.0 - gamma * m), abs(1.0 - gamma * (c.L + c.M)))
    sigma = 1.0 + h * (c.C0 * c.C1 / m ** 2 + c.C2 / m)
    flags = []
    if rho >= 1.0:
        flags.append("rho_ge_1")
    if rho * sigma >= 1.0:
        flags.append("rho_sigma_ge_1")

    asym = {}
    for name, approx in (("DPC-G", False), ("DAPC-G", True)):
        disc = _discretization(c, H, approx)
        if rho < 1.0:
            asym[f"{name}.any_h"] = (2.0 * c.C0 * rho * h / (m * (1.0 - rho))
                                     + rho / (1.0 - rho) * (h * Gk + h ** 2 * disc))
        else:
            asym[f"{name}.any_h"] = math.inf
        if rho * sigma < 1.0:
            asym[f"{name}.small_h"] = rho / (1.0 - rho * sigma) * (h * Gk + h ** 2 * disc)
        else:
            asym[f"{name}.small_h"] = math.inf

    phi = h * Gk + h ** 2 * Delta
    phi_approx = phi + h ** 2 * c.C3 * H / 2.0
    a0, a1, a2 = _alphas(c, gamma, sigma, phi, K_prime)
    a0p, a1p, _ = _alphas(c, gamma, sigma, phi_approx, K_prime)
    ok, radius = _feasible(a0, a1, a2, tau)
    okp, radiusp = _feasible(a0p, a1p, a2, tau)
    return BoundReport(varrho=varrho, H=H, Delta=Delta, Gamma_K=Gk, Gamma_Kprime=Gkp, rho=rho, sigma=sigma,
                       gradient_asymptote=asym, alpha0=a0, alpha1=a1, alpha2=a2, alpha0_approx=a0p,
                       alpha1_approx=a1p, tau=tau, tau_feasible=ok, attraction_radius=radius,
                       tau_feasible_approx=okp, attraction_radius_approx=radiusp, h=h, K=K,
                       K_prime=K_prime, gamma=gamma, provenance=c.provenance, flags=tuple(flags))


def gradient_error_bound(report: BoundReport, regime: str = "any_h", approximate_td: bool = False) -> float:
    """
    Asymptotic tracking error bound of the gradient-corrected methods.

    Parameters
    ----------
    regime : {"any_h", "small_h"}
        ``small_h`` is the sharper bound valid when ``rho sigma < 1``.
    approximate_td : bool
        Use the bound of the backward-difference variant.

    Raises
    ------
    ValueError
        For ``small_h`` when ``rho sigma >= 1``.
    """
    if regime not in ("any_h", "small_h"):
        raise ValueError(f"unknown regime {regime!r}")
    if regime == "small_h" and report.rho * report.sigma >= 1.0:
        raise ValueError(f"small-h regime needs rho*sigma < 1, got {report.rho * report.sigma:.6g}")
    name = "DAPC-G" if approximate_td else "DPC-G"
    return report.gradient_asymptote[f"{name}.{regime}"]


def newton_feasibility(report: BoundReport, tau: float | None = None, approximate_td: bool = False,
                       constants: ConstantsBundle | None = None) -> dict:
    """
    Contraction conditions of the Newton-corrected methods.

    Checks ``alpha1 < tau`` and ``tau R + alpha0 <= R`` for
    ``R = (tau - alpha1) / alpha2``; the radius is infinite when
    ``alpha2 = 0``. Without `tau` the report's own value is used.
    """
    tau = report.tau if tau is None else tau
    if not (1.0 - report.gamma < tau < 1.0):
        raise ValueError(f"tau must lie in (1 - gamma, 1) = ({1 - report.gamma:g}, 1)")
    if approximate_td:
        a0, a1 = report.alpha0_approx, report.alpha1_approx
    else:
        a0, a1 = report.alpha0, report.alpha1
    ok, radius = _feasible(a0, a1, report.alpha2, tau)
    plateau = a0 / (1.0 - tau) if ok else math.inf
    return {"feasible": ok, "attraction_radius": radius, "plateau": plateau}


def solution_drift_bound(c: ConstantsBundle, h: float) -> float:
    """Bound ``C0 h / m`` on ``|y*(t + h) - y*(t)|``."""
    return c.C0 * h / c.m
