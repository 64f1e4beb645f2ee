"""Closed-form approximations of M1, M2 and the CoV for large and small theta."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError
from .metadist import MetaMoments
from .pointproc import ScenarioParams

# thresholds below which / above which the closed forms track the models
LARGE_THETA_MIN = 10.0
SMALL_THETA_MAX = 0.5


class Regime(str, enum.Enum):
    LARGE_THETA_T = "large_theta_T"
    SMALL_THETA_T = "small_theta_t"


@dataclass(frozen=True)
class AsymptoticRegime:
    """Regime tag and its scaling constant: T = xi theta^(1/eta) or t = xi theta."""

    regime: Regime
    constant: float

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.constant > 0:
            raise DomainError(f"regime constant must be positive, got {self.constant}")


def _geom(eta):
    return (eta**2 + 1.0) / (eta**2 - 1.0)


def _shifted_exp_avg(mu, nu, c):
    # int_c^inf e^(-nu r) mu e^(-mu (r - c)) dr
    return mu * math.exp(-nu * c) / (mu + nu)


def lemma3_moments(params: ScenarioParams, xi: float, theta: float) -> MetaMoments:
    """Large-theta approximations of M1 and M2 (valid roughly for theta > 10)."""
    lam, c, eta, mu = params.lam, params.c, params.eta, params.mu
    g = _geom(eta)
    root = theta ** (1.0 / eta)
    nu1 = lam * xi * (g * root - 1.0)
    g2 = (4.0 * eta**3 + 3.0 * eta + 1.0) / ((eta + 1.0) * (4.0 * eta**2 - 1.0))
    nu2 = 2.0 * lam * xi * (g * root - 1.0) - lam * xi**2 * (g2 * root - 1.0)
    m1 = math.exp(lam * c * xi) * _shifted_exp_avg(mu, nu1, c)
    m2 = math.exp(2.0 * lam * c * xi - lam * xi**2 * c) * _shifted_exp_avg(mu, nu2, c)
    return MetaMoments(theta, (m1, m2), "lemma3")


def _nu_large(params, T):
    return params.lam * T * _geom(params.eta)


def _nu_small(params, t):
    eta = params.eta
    return (eta + 1.0) * params.lam * t / (2.0**eta * (eta - 1.0))


def lemma3_limit(params: ScenarioParams, T: float) -> MetaMoments:
    """Limit xi -> 0 of the large-theta moments along xi theta^(1/eta) = T.

    The returned ``theta`` is nan: the limit depends on T only.
    """
    if not T > 0:
        raise DomainError(f"T must be positive, got {T}")
    mu, c = params.mu, params.c
    nu = _nu_large(params, T)
    m1 = _shifted_exp_avg(mu, nu, c)
    m2 = _shifted_exp_avg(mu, 2.0 * nu, c)
    return MetaMoments(float("nan"), (m1, m2), "lemma3_limit")


def lemma4_moments(params: ScenarioParams, xi: float, theta: float) -> MetaMoments:
    """Small-theta approximations of M1 and M2 (valid roughly for theta < 0.5).

    Depends on (xi, theta) only through t = xi theta.
    """
    lam, c, eta, mu = params.lam, params.c, params.eta, params.mu
    t = xi * theta
    nu = _nu_small(params, t)
    m1 = math.exp(lam * c * t / 2.0**eta) * _shifted_exp_avg(mu, nu, c)
    m2 = math.exp(lam * c * t / 2.0 ** (eta - 1.0)) * _shifted_exp_avg(mu, 2.0 * nu, c)
    return MetaMoments(theta, (m1, m2), "lemma4")


def cov_limit(params: ScenarioParams, regime: AsymptoticRegime) -> float:
    """nu / sqrt(mu (mu + 2 nu)) with nu taken from the regime."""
    if regime.regime is Regime.LARGE_THETA_T:
        nu = _nu_large(params, regime.constant)
    else:
        nu = _nu_small(params, regime.constant)
    mu = params.mu
    return nu / math.sqrt(mu * (mu + 2.0 * nu))


def regime_note(model: str, theta: float) -> str:
    """Annotation for CLI output: empty when the approximation is in regime."""
    if model == "lemma3" and theta <= LARGE_THETA_MIN:
        return f"out of regime (large-theta form, theta > {LARGE_THETA_MIN:g})"
    if model == "lemma4" and theta >= SMALL_THETA_MAX:
        return f"out of regime (small-theta form, theta < {SMALL_THETA_MAX:g})"
    return ""
