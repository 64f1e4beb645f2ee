import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from hardcore_sir.errors import DomainError
from hardcore_sir.pointproc import (
    LaneSnapshot,
    OriginKind,
    ScenarioParams,
    hardcore_positions,
    interval_occupancy,
    interval_occupancy_approx,
    make_rng,
    pcf,
    sample_hardcore,
    sample_link_distance,
    sample_ppp,
    stationary_hardcore_positions,
)


def test_intensity_and_rate_relation():
    p = ScenarioParams(lam=0.025, c=16.0)
    assert p.mu == pytest.approx(0.025 / 0.6)
    assert 1.0 / p.lam == pytest.approx(p.c + 1.0 / p.mu)
    q = ScenarioParams.from_mu(p.mu, 16.0)
    assert q.lam == pytest.approx(p.lam, rel=1e-15)


@pytest.mark.parametrize(
    "kw",
    [
        dict(lam=0.0, c=1.0),
        dict(lam=0.1, c=-1.0),
        dict(lam=0.1, c=10.0),
        dict(lam=0.1, c=1.0, eta=2.0),
        dict(lam=0.1, c=1.0, xi=1.5),
        dict(lam=0.1, c=1.0, q=0.0),
    ],
)
def test_scenario_validation(kw):
    with pytest.raises(DomainError):
        ScenarioParams(**kw)


def test_zero_activity_is_admitted():
    assert ScenarioParams(lam=0.02, c=10.0, xi=0.0).xi == 0.0


def pcf_oracle(p, r):
    # density of the j-th neighbour is the convolution of j shifted exponentials
    total = 0.0
    for j in range(1, int(r // p.c) + 1):
        x = r - j * p.c
        if x > 0:
            total += p.mu**j * x ** (j - 1) * math.exp(-p.mu * x) / math.factorial(j - 1)
    return total


def test_pcf_zero_inside_hardcore_and_tends_to_intensity():
    p = ScenarioParams(lam=0.025, c=16.0)
    assert pcf(p, 0.0) == 0.0 and pcf(p, 15.9) == 0.0
    for r in (20.0, 33.0, 47.5, 100.0):
        assert pcf(p, r) == pytest.approx(pcf_oracle(p, r), rel=1e-12)
    assert pcf(p, 2000.0) == pytest.approx(p.lam, rel=1e-6)


def test_pcf_minimum_bound_beyond_hardcore():
    p = ScenarioParams(lam=0.025, c=16.0)
    bound = p.mu * math.exp(-p.mu * p.c)
    r = np.linspace(16.01, 400.0, 2000)
    assert all(pcf(p, x) >= bound * (1 - 1e-12) for x in r)


def test_pcf_poisson_limit():
    assert pcf(ScenarioParams(lam=0.02, c=0.0), 5.0) == 0.02


def test_interval_occupancy_is_integral_of_pcf():
    p = ScenarioParams(lam=0.025, c=16.0)
    for k in (1, 2, 3, 7, 20):
        ref, _ = integrate.quad(lambda r: pcf_oracle(p, r), k * p.c, (k + 1) * p.c, epsabs=1e-13, points=[])
        assert interval_occupancy(p, k) == pytest.approx(ref, abs=1e-10)


def test_interval_occupancy_limits():
    p = ScenarioParams(lam=0.025, c=16.0)
    # first interval: the nearest neighbour lies in (c, 2c) with probability 1 - e^(-mu c)
    assert interval_occupancy(p, 1) == pytest.approx(1 - math.exp(-p.mu * p.c), rel=1e-13)
    assert interval_occupancy(p, 200) == pytest.approx(interval_occupancy_approx(p), rel=1e-9)
    with pytest.raises(DomainError):
        interval_occupancy(p, 0)


@settings(max_examples=30, deadline=None)
@given(lc=st.floats(0.05, 0.7), k=st.integers(1, 60))
def test_interval_occupancy_is_probability(lc, k):
    p = ScenarioParams(lam=0.02, c=lc / 0.02)
    assert 0.0 <= interval_occupancy(p, k) <= 1.0


def test_sampler_respects_hardcore_and_fits_exponential():
    p = ScenarioParams(lam=0.025, c=16.0)
    snap = sample_hardcore(p, 400_000.0, rng_seed=7)
    assert snap.origin_kind is OriginKind.CONDITIONED_TRANSMITTER
    gaps = np.diff(np.concatenate(([0.0], snap.positions)))
    assert gaps.min() >= p.c
    ks = stats.kstest(gaps - p.c, "expon", args=(0, 1 / p.mu))
    assert ks.pvalue > 0.01


def test_sampler_is_deterministic_and_prefix_stable():
    p = ScenarioParams(lam=0.025, c=16.0)
    a = sample_hardcore(p, 25_000.0, 3)
    b = sample_hardcore(p, 25_000.0, 3)
    c = sample_hardcore(p, 50_000.0, 3)
    assert a == b
    np.testing.assert_array_equal(c.positions[: len(a)], a.positions)
    assert sample_hardcore(p, 25_000.0, 4) != a


def test_stationary_process_intensity_and_hardcore():
    p = ScenarioParams(lam=0.02, c=20.0)
    counts, first = [], []
    for i in range(3000):
        pos = stationary_hardcore_positions(p, 0.0, 1000.0, make_rng(11, i))
        counts.append(pos.size)
        first.append(pos[0])
        assert np.all(np.diff(pos) >= p.c)
    assert np.mean(counts) == pytest.approx(p.lam * 1000.0, rel=0.01)
    # forward recurrence distance has mean (E[G^2]) / (2 E[G])
    eg = p.c + 1 / p.mu
    eg2 = p.c**2 + 2 * p.c / p.mu + 2 / p.mu**2
    assert np.mean(first) == pytest.approx(eg2 / (2 * eg), rel=0.05)


def test_stationary_offset_restriction():
    p = ScenarioParams(lam=0.02, c=20.0)
    pos = stationary_hardcore_positions(p, 50.0, 5000.0, make_rng(1))
    assert pos.min() >= 50.0 and pos.max() <= 5000.0


def test_link_distance_and_ppp():
    p = ScenarioParams(lam=0.025, c=16.0)
    assert sample_link_distance(p, 1) >= p.c
    snap = sample_ppp(0.01, (0.0, 1e6), 5)
    assert snap.origin_kind is OriginKind.REFERENCE_RECEIVER
    assert len(snap) == pytest.approx(1e4, rel=0.05)
    with pytest.raises(DomainError):
        sample_ppp(0.0, (0, 1), 1)


def test_snapshot_validation():
    with pytest.raises(DomainError):
        LaneSnapshot(np.array([1.0, 1.0]))
    s = LaneSnapshot(np.array([1.0, 4.0, 9.0]))
    np.testing.assert_array_equal(s.gaps, [3.0, 5.0])


def test_streams_are_keyed():
    a = make_rng(1, 2, 3).random(4)
    assert np.array_equal(a, make_rng(1, 2, 3).random(4))
    assert not np.array_equal(a, make_rng(1, 3, 2).random(4))
