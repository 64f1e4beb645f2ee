"""Monte Carlo ground truth for the outage probability and the meta distribution.

Each spatial configuration draws the link distance d and the interferer
positions behind the transmitter.  Its conditional success probability
P_s(theta) is either computed exactly as the product over interferers of
``1 - xi + xi / (1 + theta (d / y)^eta)`` (the expectation over Rayleigh
fading and ALOHA), or estimated from ``n_fading`` explicit fading/activity
draws.

Random streams: configuration ``i`` of master seed ``S`` uses Philox streams
keyed ``[S, i, k]`` with k = 0 (link distance), 1 (own-lane positions),
2 (fading and activity) and 3 + lane index (other lanes).  Results are
keyed by configuration index, so any degree of parallelism gives
bit-identical output.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .metadist import MetaMoments
from .pointproc import ScenarioParams, hardcore_positions, make_rng, stationary_hardcore_positions

THREADS_ENV = "HARDCORE_SIR_THREADS"
Z95 = 1.959963984540054
CCDF_POINTS = 201
_FADING_CHUNK = 1000


class Source(str, enum.Enum):
    HARDCORE = "hardcore"
    EMPIRICAL = "empirical_headway_cdf"


@dataclass(frozen=True)
class SimulationPlan:
    n_configs: int = 1000
    n_fading: int = 1
    segment_length: float = 25_000.0
    master_seed: int = 0
    source: Source = Source.HARDCORE
    exact: bool = True

    def __post_init__(self):
        object.__setattr__(self, "source", Source(self.source))
        if self.n_configs < 1 or self.n_fading < 1:
            raise DomainError("n_configs and n_fading must be >= 1")
        if not self.segment_length > 0:
            raise DomainError("segment_length must be positive")


@dataclass(frozen=True)
class LaneSpec:
    """One lane of a multi-lane simulation.

    The own lane (listed first) is conditioned on the transmitter at the
    origin.  Other lanes are stationary processes seen from the receiver;
    only vehicles at least ``offset`` behind it interfere.  ``gaps``, when
    given, replaces the shifted exponential by resampling of observed gaps.
    """

    params: ScenarioParams
    role: str = "own"
    offset: float = 0.0
    gaps: np.ndarray | None = field(default=None, compare=False)


@dataclass
class SimulationResult:
    theta_grid: np.ndarray
    per_config_success: np.ndarray
    p_out: np.ndarray
    moments: list
    ci_halfwidth: np.ndarray
    ci_m2_halfwidth: np.ndarray
    plan: SimulationPlan
    ccdf_u: np.ndarray | None = None
    ccdf: np.ndarray | None = None

    def rows(self):
        """One record per theta: theta_db, p_out, ci, m1, m2, cov."""
        out = []
        for i, th in enumerate(self.theta_grid):
            m = self.moments[i]
            out.append(
                {
                    "theta_db": float(10.0 * math.log10(th)),
                    "p_out": float(self.p_out[i]),
                    "ci": float(self.ci_halfwidth[i]),
                    "m1": m.mean,
                    "m2": m.m_full[1],
                    "cov": m.cov,
                }
            )
        return out

    def to_csv(self, path_or_file):
        write_rows_csv(self.rows(), path_or_file)

    def to_json(self, path_or_file, per_config: bool = False):
        doc = {
            "plan": {k: (v.value if isinstance(v, enum.Enum) else v) for k, v in asdict(self.plan).items()},
            "rows": self.rows(),
            "ci_m2": [float(x) for x in self.ci_m2_halfwidth],
        }
        if self.ccdf is not None:
            doc["ccdf_u"] = self.ccdf_u.tolist()
            doc["ccdf"] = self.ccdf.tolist()
        if per_config:
            doc["per_config_success"] = self.per_config_success.tolist()
        _dump_json(doc, path_or_file)


def fmt17(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_rows_csv(rows, path_or_file):
    if not rows:
        return
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0].keys()))
        for r in rows:
            w.writerow([fmt17(v) for v in r.values()])
    finally:
        if own:
            fh.close()


def _dump_json(doc, path_or_file):
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        json.dump(doc, path_or_file, indent=1)
        path_or_file.write("\n")


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return min(4, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# one configuration


def _empirical_positions(gaps, length, rng):
    mean_gap = float(np.mean(gaps))
    pieces, last = [], 0.0
    while last <= length:
        pos = last + np.cumsum(rng.choice(gaps, size=1024))
        pieces.append(pos)
        last = pos[-1]
        if mean_gap <= 0:
            break
    pos = np.concatenate(pieces)
    return pos[pos <= length]


def _draw_configuration(lanes, plan, idx):
    """Link distance and receiver-to-interferer distances of configuration idx."""
    seed = plan.master_seed
    own = lanes[0]
    rng_link = make_rng(seed, idx, 0)
    rng_pos = make_rng(seed, idx, 1)
    if own.gaps is not None:
        d = float(rng_link.choice(own.gaps))
        x = _empirical_positions(own.gaps, plan.segment_length, rng_pos)
    else:
        p = own.params
        d = float(p.c + rng_link.exponential(1.0 / p.mu))
        x = hardcore_positions(p, plan.segment_length, rng_pos)
    dist = [x + d]
    for li, lane in enumerate(lanes[1:]):
        rng = make_rng(seed, idx, 3 + li)
        if lane.gaps is not None:
            shift = rng.uniform(0.0, float(np.max(lane.gaps)))
            y = _empirical_positions(lane.gaps, plan.segment_length + shift, rng) - shift
            y = y[y >= lane.offset]
        else:
            y = stationary_hardcore_positions(lane.params, lane.offset, plan.segment_length, rng)
        dist.append(y)
    return d, np.concatenate(dist)


def exact_success(d, y, thetas, eta, xi) -> np.ndarray:
    """Conditional success probability for each theta, exact over fading and ALOHA."""
    if xi == 0.0 or y.size == 0:
        return np.ones(len(thetas))
    g = (d / y) ** eta
    u = np.outer(thetas, g)
    return np.exp(np.sum(np.log1p(-xi * u / (1.0 + u)), axis=1))


def sampled_success(d, y, thetas, eta, xi, n_fading, rng) -> np.ndarray:
    """Fraction of fading/activity draws with SIR > theta."""
    wins = np.zeros(len(thetas))
    signal_gain = d ** (-eta)
    path = y ** (-eta)
    done = 0
    while done < n_fading:
        m = min(_FADING_CHUNK, n_fading - done)
        h0 = rng.exponential(size=m)
        h = rng.exponential(size=(m, y.size))
        active = rng.random(size=(m, y.size)) < xi
        interference = (h * active) @ path
        with np.errstate(divide="ignore"):
            sir = h0 * signal_gain / interference
        wins += np.sum(sir[None, :] > np.asarray(thetas)[:, None], axis=1)
        done += m
    return wins / n_fading


def _config_success(lanes, plan, thetas, idx):
    d, y = _draw_configuration(lanes, plan, idx)
    eta, xi = lanes[0].params.eta, lanes[0].params.xi
    if plan.exact:
        return exact_success(d, y, thetas, eta, xi)
    return sampled_success(d, y, thetas, eta, xi, plan.n_fading, make_rng(plan.master_seed, idx, 2))


def _run(lanes, plan, theta_grid, workers=None, with_ccdf=False) -> SimulationResult:
    thetas = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if np.any(thetas <= 0):
        raise DomainError("SIR thresholds must be positive")
    n = plan.n_configs
    per = np.empty((n, thetas.size))
    workers = workers or default_workers()
    bounds = np.linspace(0, n, min(n, 8 * workers) + 1).astype(int)

    def work(lo_hi):
        lo, hi = lo_hi
        for i in range(lo, hi):
            per[i] = _config_success(lanes, plan, thetas, i)

    chunks = list(zip(bounds[:-1], bounds[1:]))
    if workers == 1:
        for ch in chunks:
            work(ch)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(work, chunks))

    m1 = per.mean(axis=0)
    sq = per**2
    m2 = sq.mean(axis=0)
    m3 = (per**3).mean(axis=0)
    if n > 1:
        ci = Z95 * per.std(axis=0, ddof=1) / math.sqrt(n)
        ci2 = Z95 * sq.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        ci = np.full(thetas.size, np.nan)
        ci2 = np.full(thetas.size, np.nan)
    moments = [MetaMoments(float(t), (a, b, c), "simulation") for t, a, b, c in zip(thetas, m1, m2, m3)]
    result = SimulationResult(thetas, per, 1.0 - m1, moments, ci, ci2, plan)
    if with_ccdf:
        u = np.linspace(0.0, 1.0, CCDF_POINTS)
        result.ccdf_u = u
        result.ccdf = np.array([empirical_ccdf(per[:, k], u) for k in range(thetas.size)])
    return result


def empirical_ccdf(samples, u) -> np.ndarray:
    """Fraction of samples strictly above each u."""
    s = np.sort(np.asarray(samples))
    return 1.0 - np.searchsorted(s, np.asarray(u), side="right") / s.size


def _own_lane(params, headways):
    gaps = None
    if headways is not None:
        gaps = np.asarray(getattr(headways, "gaps", headways), dtype=float)
    return LaneSpec(params, "own", 0.0, gaps)


def simulate_outage(params: ScenarioParams, plan: SimulationPlan, theta_grid, headways=None, workers=None) -> SimulationResult:
    """Outage probability per theta, p_out = 1 - mean conditional success.

    ``headways`` (a HeadwayFit or array of gaps) is required when the plan's
    source is the empirical headway CDF.
    """
    if plan.source is Source.EMPIRICAL and headways is None:
        raise DomainError("empirical source needs observed headways")
    lanes = [_own_lane(params, headways if plan.source is Source.EMPIRICAL else None)]
    return _run(lanes, plan, theta_grid, workers)


def simulate_meta(params: ScenarioParams, plan: SimulationPlan, theta_grid, headways=None, workers=None) -> SimulationResult:
    """Per-configuration success probabilities with moments and empirical CCDF."""
    if plan.source is Source.EMPIRICAL and headways is None:
        raise DomainError("empirical source needs observed headways")
    lanes = [_own_lane(params, headways if plan.source is Source.EMPIRICAL else None)]
    return _run(lanes, plan, theta_grid, workers, with_ccdf=True)


def simulate_multilane(lane_specs, plan: SimulationPlan, theta_grid, workers=None) -> SimulationResult:
    """Meta distribution with the own lane plus offset-restricted other lanes.

    Lateral lane separation is ignored in the pathloss distance.
    """
    lanes = [ls if isinstance(ls, LaneSpec) else LaneSpec(*ls) for ls in lane_specs]
    if not lanes:
        raise DomainError("at least the own lane is required")
    return _run(lanes, plan, theta_grid, workers, with_ccdf=True)
