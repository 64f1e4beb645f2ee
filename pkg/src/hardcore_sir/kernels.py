"""Near-field and far-field factors shared by the outage and moment models.

Notation: an interferer at distance y from the receiver contributes the
conditional success factor ``1 - xi + xi / (1 + s y^-eta)`` with
``s = theta d^eta`` and d the link distance.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import comb

from .errors import QuadratureError
from .specfun import hyp2f1_array

# link-distance average runs over u = rate * (d - offset) in [0, U_MAX];
# the discarded tail weighs e^-40
U_MAX = 40.0
LINK_TOL = 1e-6


def power_integrals(eta: float, s: float, edges, jmax: int) -> np.ndarray:
    """Rows j = 0..jmax of I_j(e) = int_0^e (s / (s + y^eta))^j dy."""
    edges = np.asarray(edges, dtype=float)
    out = np.empty((jmax + 1, edges.size))
    out[0] = edges
    z = -(edges**eta) / s
    for j in range(1, jmax + 1):
        val, _ = hyp2f1_array(j, 1.0 / eta, 1.0 + 1.0 / eta, z)
        out[j] = edges * val
    return out


def interval_means(eta: float, s: float, xi: float, edges, b: int) -> np.ndarray:
    """Mean of (1 - xi s / (s + y^eta))^b over each interval [e_k, e_k+1]."""
    edges = np.asarray(edges, dtype=float)
    I = power_integrals(eta, s, edges, b)
    width = np.diff(edges)
    total = np.zeros(edges.size - 1)
    for j in range(b + 1):
        total += comb(b, j, exact=True) * (-xi) ** j * np.diff(I[j])
    return total / width


def near_field_moment(p, edges, eta: float, s: float, xi: float, b: int) -> float:
    """Product over independently occupied intervals of 1 - p_k + p_k * mean_k."""
    p = np.asarray(p, dtype=float)
    if p.size == 0:
        return 1.0
    means = interval_means(eta, s, xi, edges, b)
    return float(np.prod(1.0 - p + p * means))


def far_field_log_moment(lam: float, xi: float, eta: float, theta: float, d: float, L: float, b: int) -> float:
    """log of exp(-lam int_L^inf 1 - (1 - xi s/(s + x^eta))^b dx) via 2F1.

    Uses (-xi s)^j F_j with F_j = L^(1 - j eta)/(j eta - 1) 2F1(j - 1/eta, j;
    j + 1 - 1/eta; -s L^-eta), rewritten in terms of w = s L^-eta to keep the
    powers bounded.
    """
    if lam == 0.0 or xi == 0.0:
        return 0.0
    w = theta * (d / L) ** eta
    acc = 0.0
    for j in range(1, b + 1):
        g, _ = hyp2f1_array(j - 1.0 / eta, j, j + 1.0 - 1.0 / eta, np.array([-w]))
        acc += comb(b, j, exact=True) * (-xi * w) ** j * L * g[0] / (j * eta - 1.0)
    return lam * acc


def link_average(fn, offset: float, rate: float, tol: float = LINK_TOL):
    """Average fn(d) over d = offset + Exp(rate).

    fn may return a scalar or a 1-D array; adaptive Gauss-Kronrod over
    u = rate (d - offset) on [0, U_MAX].
    """
    res, err = integrate.quad_vec(
        lambda u: np.asarray(fn(offset + u / rate)) * np.exp(-u),
        0.0,
        U_MAX,
        epsabs=1e-11,
        epsrel=1e-10,
    )
    if not np.all(np.isfinite(res)) or err > tol:
        raise QuadratureError(f"link-distance average error {err:.3g} exceeds {tol:.1g}")
    return res
