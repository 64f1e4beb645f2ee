"""Special functions: Gauss hypergeometric 2F1, upper incomplete gamma, Beta.

The hypergeometric function is evaluated only for real z < 1.  Three routes
are used depending on z:

* |z| <= 0.5, or 0 <= z < 1: the defining power series;
* -2 <= z < -0.5: the Pfaff transformation, whose series argument
  z/(z-1) lies in (1/3, 2/3];
* z < -2: the 1/z connection formula, whose series argument has modulus
  below 1/2.  When b - a is an integer that formula is singular; the Pfaff
  route then extends to z = -9 and the Euler integral covers z < -9.

All routes accept a numpy array of z so that hot loops evaluate many
arguments per call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, DomainError

MAX_TERMS = 10_000
TERM_TOL = 1e-14
_EPS = np.finfo(float).eps

# route edges in z: the Pfaff series converges like (z/(z-1))^n, the 1/z
# series like z^-n; below -2 the 1/z route is faster
PFAFF_EDGE = -0.5
INVERSE_EDGE = -2.0
EULER_EDGE = -9.0


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    est_abs_error: float


def _is_nonpos_int(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _is_int(x: float) -> bool:
    return float(x).is_integer()


_CHUNK = 64


def _series(a, b, c, z):
    """Sum the 2F1 power series elementwise; returns (value, abs_error).

    Terms are generated in blocks of _CHUNK by a cumulative product of the
    term ratios.  An element is done once a term falls below TERM_TOL
    relative to the partial sum while the ratio bound is below one; the
    tail is then bounded by a geometric series.
    """
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    abs_sum = np.ones_like(z)
    last = np.ones_like(z)
    err = np.zeros_like(z)
    done = np.zeros(z.shape, dtype=bool)
    absz = np.abs(z)
    for start in range(0, MAX_TERMS, _CHUNK):
        n = np.arange(start, start + _CHUNK, dtype=float)
        factor = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        terms = last[None, :] * np.cumprod(factor[:, None] * z[None, :], axis=0)
        if np.any(factor == 0.0):
            # terminating series: a or b is a non-positive integer
            k = int(np.argmax(factor == 0.0))
            terms[k + 1 :] = 0.0
        partial = total[None, :] + np.cumsum(terms, axis=0)
        abs_terms = np.abs(terms)
        ratio = np.abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2.0)))
        rho = np.maximum(ratio[:, None] * absz[None, :], absz[None, :])
        ok = (abs_terms <= TERM_TOL * np.abs(partial)) & (rho < 1.0)
        if np.any(factor == 0.0):
            ok[int(np.argmax(factor == 0.0)) :] = True
        hit = ok.any(axis=0) & ~done
        if hit.any():
            idx = np.argmax(ok, axis=0)
            cols = np.nonzero(hit)[0]
            rows = idx[cols]
            total[cols] = partial[rows, cols]
            abs_sum[cols] += np.cumsum(abs_terms, axis=0)[rows, cols]
            r = rho[rows, cols]
            err[cols] = np.where(r < 1.0, abs_terms[rows, cols] * r / (1.0 - r), 0.0)
            done |= hit
        if done.all():
            break
        rest = ~done
        total[rest] = partial[-1, rest]
        abs_sum[rest] += abs_terms.sum(axis=0)[rest]
        last[rest] = terms[-1, rest]
    else:
        raise ConvergenceError(
            f"2F1({a}, {b}; {c}; z) series did not converge in {MAX_TERMS} terms"
        )
    err = err + 4.0 * _EPS * abs_sum
    return total, err


def _pfaff(a, b, c, z):
    w = z / (z - 1.0)
    # prefer the variant whose series terminates
    if _is_nonpos_int(c - a) and not _is_nonpos_int(c - b):
        val, err = _series(c - a, b, c, w)
        scale = (1.0 - z) ** (-b)
    else:
        val, err = _series(a, c - b, c, w)
        scale = (1.0 - z) ** (-a)
    return scale * val, np.abs(scale) * err


def _gamma_ratio(num, den):
    """Product of gamma(num_i) times product of 1/gamma(den_j), pole-safe."""
    out = 1.0
    for x in num:
        out *= special.gamma(x)
    for x in den:
        out *= special.rgamma(x)
    return out


def _inverse(a, b, c, z):
    """1/z connection formula for z < -2 with non-integer b - a."""
    if _is_int(b - a):
        raise DomainError("1/z transformation is singular for integer b - a")
    mz = -z
    coef1 = _gamma_ratio((c, b - a), (b, c - a))
    coef2 = _gamma_ratio((c, a - b), (a, c - b))
    val = np.zeros_like(z)
    err = np.zeros_like(z)
    if coef1 != 0.0:
        v1, e1 = _series(a, a - c + 1.0, a - b + 1.0, 1.0 / z)
        p1 = coef1 * mz ** (-a)
        val = val + p1 * v1
        err = err + np.abs(p1) * e1
    if coef2 != 0.0:
        v2, e2 = _series(b, b - c + 1.0, b - a + 1.0, 1.0 / z)
        p2 = coef2 * mz ** (-b)
        val = val + p2 * v2
        err = err + np.abs(p2) * e2
    err = err + 8.0 * _EPS * np.abs(val)
    return val, err


def _euler_integral(a, b, c, z):
    """Euler integral representation, valid when c > b > 0 (after a/b swap)."""
    if not (c > b > 0):
        if c > a > 0:
            a, b = b, a
        else:
            raise ConvergenceError(
                f"no convergent route for 2F1({a}, {b}; {c}; z) at large negative z"
            )
    pref = _gamma_ratio((c,), (b, c - b))
    vals = np.empty_like(z)
    errs = np.empty_like(z)
    for i, zi in enumerate(z):
        v, e = integrate.quad(
            lambda t: (1.0 - zi * t) ** (-a),
            0.0,
            1.0,
            weight="alg",
            wvar=(b - 1.0, c - b - 1.0),
            epsabs=0.0,
            epsrel=1e-13,
            limit=200,
        )
        vals[i] = pref * v
        errs[i] = abs(pref) * e
    return vals, errs


def _check_params(c, z):
    if _is_nonpos_int(c):
        raise DomainError(f"2F1 undefined for non-positive integer c = {c}")
    z = np.asarray(z, dtype=float)
    if np.any(z >= 1.0) or np.any(~np.isfinite(z)):
        raise DomainError("2F1 is only evaluated for finite z < 1")
    return z


def hyp2f1_array(a, b, c, z, method=None):
    """Vectorised 2F1(a, b; c; z) over an array of z.

    Returns ``(values, abs_errors)``.  ``method`` forces a route
    ("series", "pfaff", "inverse", "euler") for cross-checking; by default
    the route is picked per element from the value of z.
    """
    a, b, c = float(a), float(b), float(c)
    z = _check_params(c, z)
    shape = z.shape
    z = z.ravel()
    if a == 0.0 or b == 0.0:
        return np.ones(shape), np.zeros(shape)

    routes = {
        "series": _series,
        "pfaff": _pfaff,
        "inverse": _inverse,
        "euler": _euler_integral,
    }
    if method is not None:
        val, err = routes[method](a, b, c, z)
        return val.reshape(shape), err.reshape(shape)

    terminating = _is_nonpos_int(a) or _is_nonpos_int(b)
    val = np.empty_like(z)
    err = np.empty_like(z)
    if terminating:
        masks = [(np.ones(z.shape, dtype=bool), _series)]
    else:
        # integer b - a makes the 1/z formula singular; fall back to Euler's integral
        far, edge = (_euler_integral, EULER_EDGE) if _is_int(b - a) else (_inverse, INVERSE_EDGE)
        masks = [
            (z >= PFAFF_EDGE, _series),
            ((z < PFAFF_EDGE) & (z >= edge), _pfaff),
            (z < edge, far),
        ]
    for mask, route in masks:
        if mask.any():
            val[mask], err[mask] = route(a, b, c, z[mask])
    return val.reshape(shape), err.reshape(shape)


def hyp2f1(a: float, b: float, c: float, z: float, method=None) -> SpecFunResult:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z < 1."""
    val, err = hyp2f1_array(a, b, c, np.array([z], dtype=float), method=method)
    return SpecFunResult(float(val[0]), float(err[0]))


# ---------------------------------------------------------------------------
# incomplete gamma


def _gamma_cf_scaled(a: float, x: float) -> float:
    """e^x * Gamma(a, x) from the Legendre continued fraction (modified Lentz)."""
    tiny = 1e-300
    bb = x + 1.0 - a
    cc = 1.0 / tiny
    dd = 1.0 / bb if bb != 0.0 else 1.0 / tiny
    h = dd
    for i in range(1, MAX_TERMS):
        an = -i * (i - a)
        bb += 2.0
        dd = an * dd + bb
        if abs(dd) < tiny:
            dd = tiny
        cc = bb + an / cc
        if abs(cc) < tiny:
            cc = tiny
        dd = 1.0 / dd
        delta = dd * cc
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return math.exp(a * math.log(x)) * h
    raise ConvergenceError(f"continued fraction for Gamma({a}, {x}) did not converge")


def _gamma_small_x(a: float, x: float) -> float:
    """Gamma(a, x) for x < 1.

    For a < 1/2: Gamma(a, 1) from the continued fraction plus
    int_x^1 t^(a-1) e^-t dt = sum_n (-1)^n / n! (1 - x^(a+n)) / (a+n),
    with (1 - x^s)/s formed by expm1 so orders near a non-positive integer
    lose no digits.
    """
    if a >= 0.5:
        return float(special.gammaincc(a, x) * special.gamma(a))
    lx = math.log(x)
    total = _gamma_cf_scaled(a, 1.0) * math.exp(-1.0)
    fact = 1.0
    for n in range(MAX_TERMS):
        if n:
            fact *= n
        s = a + n
        g = -lx if s == 0.0 else -math.expm1(s * lx) / s
        term = (-1.0) ** n * g / fact
        total += term
        if s > 0 and abs(term) <= TERM_TOL * abs(total):
            return total
    raise ConvergenceError(f"series for Gamma({a}, {x}) did not converge")


def upper_inc_gamma_scaled(a: float, x: float) -> SpecFunResult:
    """e^x * Gamma(a, x); bounded for large x where the factors over/underflow."""
    a, x = float(a), float(x)
    if not x > 0:
        raise DomainError(f"upper incomplete gamma needs x > 0, got {x}")
    if x >= max(1.0, a + 1.0):
        val = _gamma_cf_scaled(a, x)
    else:
        val = _gamma_small_x(a, x) * math.exp(x)
    return SpecFunResult(val, 1e-14 * abs(val))


def upper_inc_gamma(a: float, x: float) -> SpecFunResult:
    """Upper incomplete gamma Gamma(a, x) = int_x^inf t^(a-1) e^-t dt, x > 0."""
    a, x = float(a), float(x)
    if not x > 0:
        raise DomainError(f"upper incomplete gamma needs x > 0, got {x}")
    if x >= max(1.0, a + 1.0):
        val = _gamma_cf_scaled(a, x) * math.exp(-x)
    else:
        val = _gamma_small_x(a, x)
    return SpecFunResult(val, 1e-14 * abs(val))


def log_beta(alpha: float, beta: float) -> float:
    """ln B(alpha, beta) for positive arguments."""
    if not (alpha > 0 and beta > 0):
        raise DomainError(f"Beta function needs positive arguments, got ({alpha}, {beta})")
    return float(special.betaln(alpha, beta))


def gamma(x: float) -> float:
    """Complete gamma function."""
    return float(special.gamma(x))
