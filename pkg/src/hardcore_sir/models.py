"""Outage probability under the discretization model and the baselines M1-M4.

Model summary (interferers behind a transmitter at the origin, receiver at
distance d in front of it):

discretization  intervals of width c on [c, R], each independently holding
                one uniformly placed vehicle w.p. p_k; PPP beyond R
M1              PPP of intensity lambda on (c, inf), shifted-exponential d
M2              PPP on (0, inf), exponential d (closed form)
M3              non-homogeneous PPP with the pair correlation as intensity
M4              PPP on (0, inf), shifted-exponential d (closed form)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels
from .errors import DomainError
from .pointproc import ScenarioParams, interval_occupancy, interval_occupancy_approx
from .specfun import hyp2f1, upper_inc_gamma, upper_inc_gamma_scaled


class Model(str, enum.Enum):
    DISCRETIZATION = "discretization"
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"
    M4 = "M4"


class OccupancyMode(str, enum.Enum):
    EXACT_EQ2 = "exact_eq2"
    APPROX_LAMBDA_C = "approx_lambda_c"


@dataclass(frozen=True)
class DiscretizationConfig:
    K: int
    R: float
    p: tuple
    occupancy_mode: OccupancyMode = OccupancyMode.EXACT_EQ2

    def __post_init__(self):
        if self.K < 2:
            raise DomainError(f"need at least two intervals, got K = {self.K}")
        if len(self.p) != self.K - 1:
            raise DomainError(f"expected {self.K - 1} occupancy probabilities, got {len(self.p)}")
        if any(not 0.0 <= pk <= 1.0 for pk in self.p):
            raise DomainError("occupancy probabilities must lie in [0, 1]")

    @property
    def c(self) -> float:
        return self.R / self.K


@dataclass(frozen=True)
class OutageResult:
    theta: float
    p_out: float
    model: Model


def db_to_linear(theta_db):
    return 10.0 ** (np.asarray(theta_db, dtype=float) / 10.0)


def linear_to_db(theta):
    return 10.0 * np.log10(theta)


def _require_hardcore(params: ScenarioParams):
    if params.c <= 0:
        raise DomainError("the near/far split needs a positive hardcore distance")


def _require_theta(theta):
    if not theta > 0:
        raise DomainError(f"SIR threshold must be positive, got {theta}")


def _outage(theta, success, model):
    return OutageResult(float(theta), float(min(max(1.0 - success, 0.0), 1.0)), Model(model))


def rmin(params: ScenarioParams) -> float:
    """Smallest near/far split keeping far-field mean interference below q of the total."""
    _require_hardcore(params)
    mu, eta = params.mu, params.eta
    g = upper_inc_gamma(2.0 - eta, 2.0 * mu * params.c).value
    return (params.q / (1.0 - params.lam * params.c) * g) ** (1.0 / (1.0 - eta)) / mu


def discretization_config(params: ScenarioParams, K: int, occupancy_mode=OccupancyMode.EXACT_EQ2) -> DiscretizationConfig:
    """Discretization with K intervals of width c (R = K c)."""
    _require_hardcore(params)
    mode = OccupancyMode(occupancy_mode)
    if mode is OccupancyMode.EXACT_EQ2:
        p = tuple(interval_occupancy(params, k) for k in range(1, K))
    else:
        p = (interval_occupancy_approx(params),) * (K - 1)
    return DiscretizationConfig(K=int(K), R=K * params.c, p=p, occupancy_mode=mode)


def choose_k(params: ScenarioParams, occupancy_mode=OccupancyMode.EXACT_EQ2) -> DiscretizationConfig:
    """K = ceil(R_min / c), floored at 2."""
    K = max(2, math.ceil(rmin(params) / params.c))
    return discretization_config(params, K, occupancy_mode)


def mean_far_interference(params: ScenarioParams, R: float) -> float:
    """Mean interference from a PPP beyond R, averaged over the link distance."""
    if not R > 0:
        raise DomainError(f"split distance must be positive, got {R}")
    mu, eta = params.mu, params.eta
    x = mu * (params.c + R)
    scaled = upper_inc_gamma_scaled(2.0 - eta, x).value
    return params.lam * params.xi * mu ** (eta - 1.0) / (eta - 1.0) * scaled


def mean_interference_lower_bound(params: ScenarioParams) -> float:
    """Lower bound on the total mean interference from rho2(x) >= mu e^(-mu c)."""
    _require_hardcore(params)
    mu, eta = params.mu, params.eta
    # e^(mu c) Gamma(2 - eta, 2 mu c) = e^(-mu c) * [e^(2 mu c) Gamma(2 - eta, 2 mu c)]
    scaled = upper_inc_gamma_scaled(2.0 - eta, 2.0 * mu * params.c).value
    return params.xi * mu**eta / (eta - 1.0) * math.exp(-mu * params.c) * scaled


def near_field_factor(params: ScenarioParams, config: DiscretizationConfig, theta: float, d: float, b: int = 1) -> float:
    """E over the discretized near field of the b-th power of the success product."""
    s = theta * d**params.eta
    edges = d + config.c * np.arange(1, config.K + 1)
    return kernels.near_field_moment(config.p, edges, params.eta, s, params.xi, b)


def far_field_factor(params: ScenarioParams, R: float, theta: float, d: float, b: int = 1) -> float:
    """PPP far-field factor beyond R behind the transmitter."""
    return math.exp(kernels.far_field_log_moment(params.lam, params.xi, params.eta, theta, d, R + d, b))


def outage_discretization(params: ScenarioParams, config: DiscretizationConfig, theta: float) -> OutageResult:
    _require_theta(theta)

    def success(d):
        return near_field_factor(params, config, theta, d) * far_field_factor(params, config.R, theta, d)

    m1 = kernels.link_average(success, params.c, params.mu)
    return _outage(theta, m1, Model.DISCRETIZATION)


def outage_m1(params: ScenarioParams, theta: float) -> OutageResult:
    _require_theta(theta)
    m1 = kernels.link_average(lambda d: far_field_factor(params, params.c, theta, d), params.c, params.mu)
    return _outage(theta, m1, Model.M1)


def m2_b(eta: float, xi: float, theta: float) -> float:
    """b(theta) = 2F1(1, 1 - 1/eta; 2 - 1/eta; -theta) / ((xi theta)^-1 (eta - 1))."""
    f = hyp2f1(1.0, 1.0 - 1.0 / eta, 2.0 - 1.0 / eta, -theta).value
    return f * xi * theta / (eta - 1.0)


def outage_m2(params: ScenarioParams, theta: float) -> OutageResult:
    _require_theta(theta)
    b = m2_b(params.eta, params.xi, theta)
    return OutageResult(float(theta), b / (b + 1.0), Model.M2)


def outage_m4(params: ScenarioParams, theta: float) -> OutageResult:
    _require_theta(theta)
    mu_c = params.mu * params.c
    bt = m2_b(params.eta, params.xi, theta) / (1.0 + mu_c)
    return _outage(theta, math.exp(-bt * mu_c) / (bt + 1.0), Model.M4)


def _pcf_array(params: ScenarioParams, y: np.ndarray) -> np.ndarray:
    """Vectorised pair correlation on y > 0 (finite sum of Gamma densities)."""
    c, mu = params.c, params.mu
    out = np.zeros_like(y)
    kmax = int(np.floor(y.max() / c))
    for j in range(1, kmax + 1):
        x = y - j * c
        pos = x > 0
        out[pos] += np.exp(j * np.log(mu) + (j - 1) * np.log(x[pos]) - mu * x[pos] - special.gammaln(j))
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def outage_m3(params: ScenarioParams, theta: float, exact_pcf_units: int = 4) -> OutageResult:
    """Non-homogeneous PPP with the pair correlation as intensity.

    The exact pair correlation is used for transmitter-interferer separations
    in (c, n c) with n = ``exact_pcf_units``; beyond n c it is replaced by
    lambda.  n = 1 keeps only the hardcore gap and reduces to M1.
    """
    _require_theta(theta)
    _require_hardcore(params)
    c, eta, xi = params.c, params.eta, params.xi
    n = int(exact_pcf_units)
    if n < 1:
        raise DomainError("exact_pcf_units must be >= 1")
    # Gauss-Legendre nodes on each smooth piece (k c, (k+1) c), k = 1..n-1
    ys, ws = [], []
    for k in range(1, n):
        ys.append(c * k + 0.5 * c * (_GL_NODES + 1.0))
        ws.append(0.5 * c * _GL_WEIGHTS)
    y = np.concatenate(ys) if ys else np.empty(0)
    w = np.concatenate(ws) if ws else np.empty(0)
    rho_w = _pcf_array(params, y) * w if y.size else w

    def success(d):
        s = theta * d**eta
        x = y + d
        near = xi * s * np.sum(rho_w / (s + x**eta))
        far = kernels.far_field_log_moment(params.lam, xi, eta, theta, d, n * c + d, 1)
        return math.exp(far - near)

    m1 = kernels.link_average(success, c, params.mu)
    return _outage(theta, m1, Model.M3)


def outage(model, params: ScenarioParams, theta: float, config: DiscretizationConfig | None = None) -> OutageResult:
    """Dispatch on the model name."""
    model = Model(model)
    if model is Model.DISCRETIZATION:
        return outage_discretization(params, config or choose_k(params), theta)
    return {
        Model.M1: outage_m1,
        Model.M2: outage_m2,
        Model.M3: outage_m3,
        Model.M4: outage_m4,
    }[model](params, theta)
