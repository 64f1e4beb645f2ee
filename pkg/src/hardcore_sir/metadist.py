"""Moments of the SIR meta distribution and their Beta-family approximations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import kernels
from .errors import DomainError, InfeasibleMoments, NoConvergence
from .models import DiscretizationConfig, Model, far_field_factor, near_field_factor
from .pointproc import ScenarioParams
from .specfun import log_beta

MAX_MOMENT = 3


@dataclass(frozen=True)
class MetaMoments:
    """Raw moments M_1..M_B of the conditional success probability at theta."""

    theta: float
    m_full: tuple
    model: str = ""

    def __post_init__(self):
        m = tuple(float(x) for x in self.m_full)
        if not m:
            raise DomainError("at least one moment is required")
        object.__setattr__(self, "m_full", m)

    @property
    def mean(self) -> float:
        return self.m_full[0]

    @property
    def variance(self) -> float | None:
        if len(self.m_full) < 2:
            return None
        return max(self.m_full[1] - self.m_full[0] ** 2, 0.0)

    @property
    def cov(self) -> float | None:
        if len(self.m_full) < 2:
            return None
        return math.sqrt(max(self.m_full[1] / self.m_full[0] ** 2 - 1.0, 0.0))

    def as_dict(self) -> dict:
        out = {"theta": self.theta, "model": self.model}
        for b, m in enumerate(self.m_full, start=1):
            out[f"m{b}"] = m
        out["variance"] = self.variance
        out["cov"] = self.cov
        return out


class BetaKind(str, enum.Enum):
    BETA2 = "beta2"
    GEN_BETA2 = "gen_beta2"
    GEN_BETA3 = "gen_beta3"


@dataclass(frozen=True)
class BetaFit:
    """Fitted law on [0, 1].

    beta2:     z^(alpha-1) (1-z)^(beta-1) / B(alpha, beta)
    gen_beta2: alpha beta z^(alpha-1) (1 - z^alpha)^(beta-1)
    gen_beta3: alpha / B(eps, beta) z^(alpha eps - 1) (1 - z^alpha)^(beta-1)
    """

    kind: BetaKind
    alpha: float
    beta: float
    epsilon: float | None = None
    matched_moments: int = 2
    residual: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")
        if self.kind is BetaKind.GEN_BETA3 and not (self.epsilon and self.epsilon > 0):
            raise DomainError("gen_beta3 needs a positive epsilon")

    @property
    def _eps(self) -> float:
        # beta2 is gen_beta3 at alpha' = 1, eps = alpha; gen_beta2 is eps = 1
        return {BetaKind.BETA2: self.alpha, BetaKind.GEN_BETA2: 1.0}.get(self.kind, self.epsilon)

    @property
    def _power(self) -> float:
        return 1.0 if self.kind is BetaKind.BETA2 else self.alpha

    def moment(self, n: int) -> float:
        """E[Z^n]; with Y = Z^power ~ Beta(eps, beta), E[Z^n] = B(eps + n/power, beta) / B(eps, beta)."""
        eps, a = self._eps, self._power
        return math.exp(log_beta(eps + n / a, self.beta) - log_beta(eps, self.beta))

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        eps, a, b = self._eps, self._power, self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = (
                math.log(a)
                - log_beta(eps, b)
                + (a * eps - 1.0) * np.log(z)
                + (b - 1.0) * np.log1p(-(z**a))
            )
        return np.exp(logp)

    def cdf(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return special.betainc(self._eps, self.beta, u**self._power)


def _moments(theta, values, model) -> MetaMoments:
    return MetaMoments(float(theta), tuple(float(v) for v in np.atleast_1d(values)), model)


def _check_B(B):
    if B not in (1, 2, 3):
        raise DomainError(f"number of moments must be 1, 2 or 3, got {B}")


def meta_moment_near(params: ScenarioParams, config: DiscretizationConfig, theta: float, d: float, b: int) -> float:
    """b-th moment of the near-field success product given the link distance d."""
    if b < 1:
        raise DomainError("moment order must be >= 1")
    if d < params.c:
        raise DomainError(f"link distance {d} is below the hardcore distance")
    return near_field_factor(params, config, theta, d, b)


def meta_moment_far(params: ScenarioParams, R: float, theta: float, d: float, b: int) -> float:
    """b-th moment of the PPP far-field product beyond R given d."""
    if b < 1:
        raise DomainError("moment order must be >= 1")
    return far_field_factor(params, R, theta, d, b)


def _disc_all(params, config, theta, d, B):
    s = theta * d**params.eta
    edges = d + config.c * np.arange(1, config.K + 1)
    p = np.asarray(config.p)
    I = kernels.power_integrals(params.eta, s, edges, B)
    dI = np.diff(I, axis=1) / config.c
    out = np.empty(B)
    for b in range(1, B + 1):
        means = sum(special.comb(b, j, exact=True) * (-params.xi) ** j * dI[j] for j in range(b + 1))
        near = np.prod(1.0 - p + p * means)
        out[b - 1] = near * far_field_factor(params, config.R, theta, d, b)
    return out


def meta_moments(params: ScenarioParams, config: DiscretizationConfig, theta: float, B: int = 2) -> MetaMoments:
    """Moments of the discretization model averaged over the shifted-exponential link."""
    _check_B(B)
    vals = kernels.link_average(lambda d: _disc_all(params, config, theta, d, B), params.c, params.mu)
    return _moments(theta, vals, Model.DISCRETIZATION.value)


def meta_moments_m1(params: ScenarioParams, theta: float, B: int = 2) -> MetaMoments:
    """Model M1: far-field form with R = c, shifted-exponential link."""
    _check_B(B)

    def fn(d):
        return [far_field_factor(params, params.c, theta, d, b) for b in range(1, B + 1)]

    return _moments(theta, kernels.link_average(fn, params.c, params.mu), Model.M1.value)


def meta_moments_m2(params: ScenarioParams, theta: float, B: int = 2) -> MetaMoments:
    """Model M2: far-field form with R = 0, exponential link of rate lambda."""
    _check_B(B)

    def fn(d):
        return [far_field_factor(params, 0.0, theta, d, b) for b in range(1, B + 1)]

    return _moments(theta, kernels.link_average(fn, 0.0, params.lam), Model.M2.value)


def fit_beta(m: MetaMoments) -> BetaFit:
    """Match mean and variance to a Beta law."""
    m1, var = m.mean, m.variance
    if var is None or not var > 0 or not var < m1 * (1.0 - m1):
        raise InfeasibleMoments(f"mean {m1} and variance {var} admit no Beta law")
    alpha = m1 * (m1 * (1.0 - m1) - var) / var
    beta = m1 - 1.0 + m1 * (1.0 - m1) ** 2 / var
    return BetaFit(BetaKind.BETA2, alpha, beta, matched_moments=2)


def _solve_gen(target, kind, starts, tol=1e-8):
    n = len(target)
    target = np.asarray(target)

    def build(logp):
        p = [float(v) for v in np.exp(np.clip(logp, -30.0, 30.0))]
        if kind is BetaKind.GEN_BETA2:
            return BetaFit(kind, p[0], p[1], matched_moments=2)
        return BetaFit(kind, p[0], p[2], epsilon=p[1], matched_moments=3)

    def resid(logp):
        f = build(logp)
        return np.array([f.moment(k + 1) for k in range(n)]) / target - 1.0

    best = None
    for x0 in starts:
        try:
            sol = optimize.root(resid, np.log(x0), method="hybr", options={"xtol": 1e-14})
        except (DomainError, OverflowError, ValueError):
            continue
        r = np.max(np.abs(resid(sol.x) * target))
        if best is None or r < best[0]:
            best = (r, sol.x)
        if r <= tol:
            break
    if best is None or not best[0] <= tol:
        raise NoConvergence(f"{kind.value} fit did not reach residual {tol:g}")
    fit = build(best[1])
    return BetaFit(fit.kind, fit.alpha, fit.beta, fit.epsilon, fit.matched_moments, residual=float(best[0]))


def fit_generalized_beta(m: MetaMoments, kind) -> BetaFit:
    """Match M1, M2 (gen_beta2) or M1..M3 (gen_beta3) to a generalized Beta law.

    Log-parameters are solved by Powell's hybrid method starting from the
    plain Beta fit; the moments of the family are closed form.
    """
    kind = BetaKind(kind)
    if kind is BetaKind.BETA2:
        return fit_beta(m)
    base = fit_beta(m)
    if kind is BetaKind.GEN_BETA2:
        starts = [(1.0, base.beta), (base.alpha, base.beta), (base.alpha, 1.0), (1.0, 1.0)]
        return _solve_gen(m.m_full[:2], kind, starts)
    if len(m.m_full) < 3:
        raise DomainError("gen_beta3 needs the third moment")
    starts = [
        (1.0, base.alpha, base.beta),
        (2.0, base.alpha / 2.0, base.beta),
        (0.5, 2.0 * base.alpha, base.beta),
        (1.0, 1.0, 1.0),
    ]
    return _solve_gen(m.m_full[:3], kind, starts)


def meta_ccdf(fit: BetaFit, u_grid) -> np.ndarray:
    """P(P_s > u) of the fitted law on a sorted grid in [0, 1]."""
    u = np.asarray(u_grid, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any(np.diff(u) < 0):
        raise DomainError("u grid must be sorted within [0, 1]")
    return 1.0 - fit.cdf(u)


# ---------------------------------------------------------------------------
# multi-lane composition


class LaneModel(str, enum.Enum):
    DISCRETIZATION = "discretization"
    PPP = "ppp"


@dataclass(frozen=True)
class OtherLane:
    """Interfering lane seen from the receiver.

    Only vehicles at least ``offset`` behind the receiver contribute.  With
    ``model = discretization`` the stretch [offset, offset + K c] is split
    into K intervals each occupied w.p. lambda c (stationary process) and a
    PPP covers the rest; ``ppp`` is a PPP of intensity lam beyond offset.
    """

    lam: float
    offset: float
    model: LaneModel = LaneModel.PPP
    c: float = 0.0
    K: int = 0

    def log_moment(self, eta: float, xi: float, theta: float, d: float, b: int) -> float:
        s = theta * d**eta
        start = self.offset
        out = 0.0
        if LaneModel(self.model) is LaneModel.DISCRETIZATION and self.K > 0:
            edges = self.offset + self.c * np.arange(self.K + 1)
            p = np.full(self.K, self.lam * self.c)
            out += math.log(kernels.near_field_moment(p, edges, eta, s, xi, b))
            start = edges[-1]
        return out + kernels.far_field_log_moment(self.lam, xi, eta, theta, d, start, b)


def multilane_moments(
    params: ScenarioParams,
    own_model,
    others,
    theta: float,
    B: int = 2,
    config: DiscretizationConfig | None = None,
    m2_lambda: float | None = None,
) -> MetaMoments:
    """Moments with interference from the own lane plus other lanes.

    The own lane follows ``own_model`` (discretization, M1 or M2); each
    other lane multiplies the conditional success by its own factor.
    """
    _check_B(B)
    own = Model(own_model)
    eta, xi = params.eta, params.xi

    def others_factor(d, b):
        return math.exp(sum(o.log_moment(eta, xi, theta, d, b) for o in others))

    if own is Model.DISCRETIZATION:
        if config is None:
            raise DomainError("discretization own lane needs a config")

        def fn(d):
            base = _disc_all(params, config, theta, d, B)
            return base * np.array([others_factor(d, b) for b in range(1, B + 1)])

        vals = kernels.link_average(fn, params.c, params.mu)
    elif own is Model.M1:
        vals = kernels.link_average(
            lambda d: [far_field_factor(params, params.c, theta, d, b) * others_factor(d, b) for b in range(1, B + 1)],
            params.c,
            params.mu,
        )
    elif own is Model.M2:
        lam2 = m2_lambda or params.lam
        p2 = params.replace(lam=lam2, c=0.0)
        vals = kernels.link_average(
            lambda d: [far_field_factor(p2, 0.0, theta, d, b) * others_factor(d, b) for b in range(1, B + 1)],
            0.0,
            lam2,
        )
    else:
        raise DomainError(f"own-lane model {own.value} is not supported for multi-lane moments")
    return _moments(theta, vals, f"multilane-{own.value}")
