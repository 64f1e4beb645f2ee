import math

import numpy as np
import pytest
from scipy import integrate

from hardcore_sir.errors import DomainError
from hardcore_sir.models import (
    Model,
    OccupancyMode,
    choose_k,
    db_to_linear,
    discretization_config,
    linear_to_db,
    m2_b,
    mean_far_interference,
    mean_interference_lower_bound,
    outage,
    outage_discretization,
    outage_m1,
    outage_m2,
    outage_m3,
    outage_m4,
    rmin,
)
from hardcore_sir.pointproc import ScenarioParams, interval_occupancy, pcf

from . import oracles
from .conftest import HALF_XI, random_scenarios


def m2_oracle(p, theta):
    # PPP on (0, inf) behind the transmitter, exponential link with rate lambda
    def ps(d):
        s = theta * d**p.eta
        return math.exp(oracles.ppp_log_moment(p.lam, p.xi, p.eta, s, d))

    return 1.0 - oracles.link_avg(ps, 0.0, p.lam)


def m4_oracle(p, theta):
    def ps(d):
        s = theta * d**p.eta
        return math.exp(oracles.ppp_log_moment(p.lam, p.xi, p.eta, s, d))

    return 1.0 - oracles.link_avg(ps, p.c, p.mu)


def m1_oracle(p, theta):
    def ps(d):
        s = theta * d**p.eta
        return math.exp(oracles.ppp_log_moment(p.lam, p.xi, p.eta, s, p.c + d))

    return 1.0 - oracles.link_avg(ps, p.c, p.mu)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0, 1000.0])
def test_m2_closed_form_matches_quadrature(theta):
    assert outage_m2(HALF_XI, theta).p_out == pytest.approx(m2_oracle(HALF_XI, theta), abs=1e-9)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0, 1000.0])
def test_m4_closed_form_matches_quadrature(theta):
    assert outage_m4(HALF_XI, theta).p_out == pytest.approx(m4_oracle(HALF_XI, theta), abs=1e-9)


@pytest.mark.parametrize("theta", [0.1, 1.0, 10.0])
def test_m1_matches_quadrature(theta):
    assert outage_m1(HALF_XI, theta).p_out == pytest.approx(m1_oracle(HALF_XI, theta), abs=1e-8)


def test_discretization_matches_brute_force():
    p = HALF_XI
    cfg = discretization_config(p, 8)
    theta = 1.0

    def ps(d):
        s = theta * d**p.eta
        near = oracles.near_moment(cfg.p, p.c, d, s, p.eta, p.xi)
        far = oracles.ppp_log_moment(p.lam, p.xi, p.eta, s, cfg.R + d)
        return near * math.exp(far)

    ref = 1.0 - oracles.link_avg(ps, p.c, p.mu)
    assert outage_discretization(p, cfg, theta).p_out == pytest.approx(ref, abs=1e-8)


def test_m2_is_scale_free_and_b_definition():
    a = outage_m2(HALF_XI, 3.0).p_out
    b = outage_m2(HALF_XI.replace(lam=0.002, c=100.0), 3.0).p_out
    assert a == pytest.approx(b, rel=1e-14)
    # eta = 4: 2F1(1, 3/4; 7/4; -1) reference from the Euler integral
    ref, _ = integrate.quad(lambda t: 0.75 * t**-0.25 / (1 + t), 0, 1, epsrel=1e-13)
    assert m2_b(4.0, 1.0, 1.0) == pytest.approx(ref / 3.0, rel=1e-12)


def test_m3_reduces_to_m1_with_one_unit():
    for theta in (0.1, 1.0, 10.0):
        assert outage_m3(HALF_XI, theta, exact_pcf_units=1).p_out == pytest.approx(outage_m1(HALF_XI, theta).p_out, abs=1e-10)


def test_m3_against_pcf_quadrature():
    p, theta, n = HALF_XI, 1.0, 4

    def ps(d):
        s = theta * d**p.eta
        f = lambda y: pcf(p, y) * p.xi * s / (s + (y + d) ** p.eta)
        near = sum(
            integrate.quad(f, k * p.c, (k + 1) * p.c, epsabs=0, epsrel=1e-13)[0] for k in range(1, n)
        )
        far = oracles.ppp_log_moment(p.lam, p.xi, p.eta, s, n * p.c + d)
        return math.exp(far - near)

    ref = 1.0 - oracles.link_avg(ps, p.c, p.mu)
    assert outage_m3(p, theta).p_out == pytest.approx(ref, abs=1e-8)


def test_zero_activity_means_no_outage():
    p = HALF_XI.replace(xi=0.0)
    cfg = choose_k(p)
    for m in Model:
        assert outage(m, p, 5.0, cfg).p_out == 0.0


def test_rmin_values():
    assert rmin(HALF_XI) == pytest.approx(500.31, abs=0.01)
    cfg = choose_k(HALF_XI)
    assert cfg.K == 32 and cfg.R == pytest.approx(512.0)
    snap1000 = ScenarioParams(lam=0.0205, c=14.82, eta=3.0, xi=0.5, q=0.02)
    assert rmin(snap1000) == pytest.approx(441.62, abs=0.01)
    cfg1000 = choose_k(snap1000)
    assert cfg1000.K == 30 and cfg1000.R == pytest.approx(444.6)


def test_rmin_keeps_far_field_mean_below_fraction_of_bound():
    for p in random_scenarios(20, seed=5):
        r = rmin(p)
        assert mean_far_interference(p, r) <= p.q * mean_interference_lower_bound(p) * (1 + 1e-9)


def test_mean_far_interference_matches_quadrature():
    for p in random_scenarios(10, seed=6):
        R = 10 * p.c

        def inner(d):
            return p.lam * p.xi * (R + d) ** (1 - p.eta) / (p.eta - 1)

        ref = oracles.link_avg(inner, p.c, p.mu)
        assert mean_far_interference(p, R) == pytest.approx(ref, rel=1e-9)


def test_mean_interference_lower_bound_matches_quadrature():
    p = HALF_XI
    rho_min = p.mu * math.exp(-p.mu * p.c)

    def inner(d):
        return p.xi * rho_min * (p.c + d) ** (1 - p.eta) / (p.eta - 1)

    assert mean_interference_lower_bound(p) == pytest.approx(oracles.link_avg(inner, p.c, p.mu), rel=1e-9)


def test_discretization_config_modes():
    cfg = discretization_config(HALF_XI, 32)
    assert len(cfg.p) == 31 and cfg.c == pytest.approx(16.0)
    assert cfg.p[0] == pytest.approx(interval_occupancy(HALF_XI, 1))
    approx = discretization_config(HALF_XI, 32, OccupancyMode.APPROX_LAMBDA_C)
    assert approx.p == pytest.approx((0.4,) * 31)
    with pytest.raises(DomainError):
        discretization_config(HALF_XI, 1)
    with pytest.raises(DomainError):
        rmin(HALF_XI.replace(c=0.0))


def test_outage_readouts():
    cfg = choose_k(HALF_XI)
    assert outage_discretization(HALF_XI, cfg, db_to_linear(-10.0)).p_out == pytest.approx(0.014, abs=1e-3)
    assert outage_discretization(HALF_XI, cfg, db_to_linear(10.0)).p_out == pytest.approx(0.45, abs=0.01)
    low = HALF_XI.replace(xi=0.1)
    assert outage_discretization(low, cfg, db_to_linear(24.5)).p_out == pytest.approx(0.45, abs=0.01)


def test_model_ordering_at_low_threshold():
    # the shifted link distance helps: M4 has less outage than M2 only for large theta
    theta = 0.1
    assert outage_m1(HALF_XI, theta).p_out < outage_m2(HALF_XI, theta).p_out


def test_db_conversion_round_trip():
    x = np.array([-10.0, 0.0, 24.5])
    np.testing.assert_allclose(linear_to_db(db_to_linear(x)), x, atol=1e-12)


def test_invalid_threshold():
    with pytest.raises(DomainError):
        outage_m1(HALF_XI, 0.0)
