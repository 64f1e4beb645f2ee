"""The 1-D hardcore (shifted-exponential headway) process.

Gaps between successive vehicles are ``c + Exp(mu)``, so the intensity is
``lambda = mu / (1 + mu c)``.  A transmitter is conditioned at the origin and
interferers occupy the positive half-axis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import DomainError


class OriginKind(str, enum.Enum):
    CONDITIONED_TRANSMITTER = "conditioned_transmitter"
    REFERENCE_RECEIVER = "reference_receiver"


@dataclass(frozen=True)
class ScenarioParams:
    """Deployment and channel parameters.

    lam is the vehicle intensity (1/m), c the hardcore distance (m), eta the
    pathloss exponent, xi the ALOHA activity and q the far-field fraction of
    the mean interference used to place the near/far split.
    """

    lam: float
    c: float
    eta: float = 3.0
    xi: float = 0.5
    q: float = 0.02

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"intensity must be positive, got {self.lam}")
        if self.c < 0:
            raise DomainError(f"hardcore distance must be >= 0, got {self.c}")
        if not self.lam * self.c < 1:
            raise DomainError(f"need lambda*c < 1, got {self.lam * self.c}")
        if not self.eta > 2:
            raise DomainError(f"pathloss exponent must exceed 2, got {self.eta}")
        # xi = 0 is admitted as the interference-free degenerate case
        if not 0 <= self.xi <= 1:
            raise DomainError(f"activity must lie in [0, 1], got {self.xi}")
        if not 0 < self.q < 1:
            raise DomainError(f"q must lie in (0, 1), got {self.q}")

    @property
    def mu(self) -> float:
        """Rate of the exponential part of the headway."""
        return self.lam / (1.0 - self.lam * self.c)

    @classmethod
    def from_mu(cls, mu: float, c: float, **kw) -> "ScenarioParams":
        return cls(lam=mu / (1.0 + mu * c), c=c, **kw)

    def replace(self, **changes) -> "ScenarioParams":
        kw = dict(lam=self.lam, c=self.c, eta=self.eta, xi=self.xi, q=self.q)
        kw.update(changes)
        return ScenarioParams(**kw)


@dataclass(frozen=True)
class LaneSnapshot:
    positions: np.ndarray
    origin_kind: OriginKind = OriginKind.CONDITIONED_TRANSMITTER
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 1:
            raise DomainError("positions must be one-dimensional")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise DomainError("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)

    def __len__(self):
        return self.positions.size

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.positions)

    def __eq__(self, other):
        if not isinstance(other, LaneSnapshot):
            return NotImplemented
        return self.origin_kind == other.origin_kind and np.array_equal(
            self.positions, other.positions
        )


def make_rng(seed, *keys) -> np.random.Generator:
    """Counter-based generator for a master seed and optional stream keys.

    Streams are Philox keyed by ``SeedSequence([seed, *keys])``; a
    configuration index (and a sub-stream tag) as keys gives independent,
    machine-independent streams whatever the evaluation order.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def pcf(params: ScenarioParams, r: float) -> float:
    """Pair correlation (neighbour density) of the hardcore process at distance r.

    Sum of the densities of the j-th neighbour, each ``j c + Gamma(j, mu)``,
    over the ``floor(r / c)`` neighbours that can lie below r.
    """
    if r < 0:
        raise DomainError(f"distance must be non-negative, got {r}")
    c, mu = params.c, params.mu
    if c == 0:
        return params.lam if r > 0 else 0.0
    if r <= c:
        return 0.0
    k = int(math.floor(r / c))
    j = np.arange(1, k + 1)
    x = r - j * c
    keep = x > 0
    return float(np.sum(stats.gamma.pdf(x[keep], a=j[keep], scale=1.0 / mu)))


def interval_occupancy(params: ScenarioParams, k: int) -> float:
    """Probability p_k that the interval (kc, (k+1)c) holds a vehicle.

    Sum over j of Q(j, c mu (k-j)) - Q(j, c mu (k+1-j)) with Q the
    regularised upper incomplete gamma, Q(j, 0) = 1.
    """
    if k < 1:
        raise DomainError(f"interval index must be >= 1, got {k}")
    cmu = params.c * params.mu
    j = np.arange(1, k + 1)
    total = np.sum(special.gammaincc(j, cmu * (k - j)) - special.gammaincc(j, cmu * (k + 1 - j)))
    return float(min(max(total, 0.0), 1.0))


def interval_occupancy_approx(params: ScenarioParams) -> float:
    """Large-k limit of the interval occupancy, lambda * c."""
    return params.lam * params.c


def _gaps(params: ScenarioParams, rng: np.random.Generator, n: int) -> np.ndarray:
    return params.c + rng.exponential(1.0 / params.mu, size=n)


def hardcore_positions(params: ScenarioParams, length: float, rng: np.random.Generator) -> np.ndarray:
    """Cumulative shifted-exponential gaps from the origin, truncated at length."""
    # fixed chunk size: a longer segment extends the same gap sequence
    chunk = 1024
    pieces = []
    last = 0.0
    while last <= length:
        pos = last + np.cumsum(_gaps(params, rng, chunk))
        pieces.append(pos)
        last = pos[-1]
    pos = np.concatenate(pieces)
    return pos[pos <= length]


def sample_hardcore(params: ScenarioParams, length: float, rng_seed: int) -> LaneSnapshot:
    """Interferer positions behind a transmitter conditioned at the origin."""
    if not length > 0:
        raise DomainError(f"segment length must be positive, got {length}")
    rng = make_rng(rng_seed)
    return LaneSnapshot(hardcore_positions(params, length, rng), OriginKind.CONDITIONED_TRANSMITTER)


def stationary_hardcore_positions(
    params: ScenarioParams, start: float, length: float, rng: np.random.Generator
) -> np.ndarray:
    """Stationary (unconditioned) hardcore points in [start, length].

    The first point after the origin follows the forward-recurrence law:
    uniform on [0, c] with probability lambda*c, else c + Exp(mu).
    """
    if rng.random() < params.lam * params.c:
        first = rng.uniform(0.0, params.c)
    else:
        first = params.c + rng.exponential(1.0 / params.mu)
    pos = first + np.concatenate(([0.0], hardcore_positions(params, max(length - first, 0.0), rng)))
    return pos[(pos >= start) & (pos <= length)]


def sample_link_distance(params: ScenarioParams, rng_seed: int) -> float:
    """Transmitter-receiver distance, shifted exponential c + Exp(mu)."""
    rng = make_rng(rng_seed)
    return float(params.c + rng.exponential(1.0 / params.mu))


def ppp_positions(intensity: float, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    if hi <= lo:
        return np.empty(0)
    n = rng.poisson(intensity * (hi - lo))
    return np.sort(rng.uniform(lo, hi, size=n))


def sample_ppp(intensity: float, interval, rng_seed: int) -> LaneSnapshot:
    """Homogeneous Poisson points on the interval, sorted."""
    if not intensity > 0:
        raise DomainError(f"intensity must be positive, got {intensity}")
    lo, hi = map(float, interval)
    rng = make_rng(rng_seed)
    return LaneSnapshot(ppp_positions(intensity, lo, hi, rng), OriginKind.REFERENCE_RECEIVER)
