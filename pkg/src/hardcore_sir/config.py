"""Scenario files and run configuration.

Grammar of a scenario file, one entry per line::

    # comment
    key = value

Blank lines and ``#`` comments are ignored; keys are case-sensitive and may
appear once.  Recognised keys:

    lam, c, eta, xi, q       scenario parameters (lam in 1/m, c in m)
    theta_db                 grid "a:b:step" (inclusive), a comma list, or one value
    models                   comma list of model names
    K                        number of near-field intervals (default ceil(R_min / c))
    occupancy                exact_eq2 | approx_lambda_c
    B                        number of meta moments (1..3, default 2)
    beta                     beta2 | gen_beta2 | gen_beta3
    m2_lambda                intensity used by M2 in multi-lane compositions
    seed, configs, fading, segment_length
                             simulation plan (fading is an integer or "exact")
    lane.<name>.<field>      other lanes; fields lam, c, offset, model
                             (discretization | ppp), K, ppp_lam

Other lanes are listed in order of first appearance.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, ParseError
from .metadist import BetaKind, LaneModel
from .models import OccupancyMode
from .montecarlo import SimulationPlan
from .pointproc import ScenarioParams

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "scenarios")

ANALYTIC_MODELS = ("discretization", "M1", "M2", "M3", "M4", "lemma3", "lemma4")
META_MODELS = ("discretization", "M1", "M2", "lemma3", "lemma4")

_FLOAT_KEYS = {"lam", "c", "eta", "xi", "q", "m2_lambda", "segment_length"}
_INT_KEYS = {"K", "B", "seed", "configs"}
_STR_KEYS = {"theta_db", "models", "occupancy", "beta", "fading"}
_LANE_FIELDS = {"lam": float, "c": float, "offset": float, "model": str, "K": int, "ppp_lam": float}


@dataclass(frozen=True)
class OtherLaneSpec:
    name: str
    lam: float
    offset: float
    c: float = 0.0
    model: LaneModel = LaneModel.PPP
    K: int = 0
    ppp_lam: float | None = None


@dataclass
class RunConfig:
    scenario: ScenarioParams
    theta_grid_db: list
    models: list = field(default_factory=list)
    plan: SimulationPlan | None = None
    output_path: str | None = None
    output_format: str = "csv"
    K: int | None = None
    occupancy: OccupancyMode = OccupancyMode.EXACT_EQ2
    B: int = 2
    beta: BetaKind = BetaKind.BETA2
    m2_lambda: float | None = None
    other_lanes: list = field(default_factory=list)

    def validate(self):
        if not self.models and self.plan is None:
            raise DomainError("select at least one model or a simulation plan")
        if self.output_format not in ("csv", "json"):
            raise DomainError(f"unknown output format {self.output_format!r}")

    @property
    def theta_linear(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.theta_grid_db, dtype=float) / 10.0)


def parse_theta_grid(text: str) -> list:
    """dB grid from "a:b:step" (inclusive of b), "x,y,z" or a single value."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, step = (float(p) for p in text.split(":"))
            if step <= 0 or b < a:
                raise DomainError(f"bad theta grid {text!r}")
            n = int(math.floor((b - a) / step + 1e-9))
            return [round(a + i * step, 12) for i in range(n + 1)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise DomainError(f"bad theta grid {text!r}") from None


def parse_models(text: str) -> list:
    names = [m.strip() for m in text.split(",") if m.strip()]
    lookup = {m.lower(): m for m in ANALYTIC_MODELS + ("simulation",)}
    out = []
    for n in names:
        if n.lower() not in lookup:
            raise DomainError(f"unknown model {n!r}; choose from {', '.join(lookup.values())}")
        out.append(lookup[n.lower()])
    return out


def read_scenario_file(path) -> dict:
    """Parse a key = value file into a dict of raw strings (with line numbers checked)."""
    if not os.path.exists(path):
        alt = os.path.join(SCENARIO_DIR, path if path.endswith(".cfg") else path + ".cfg")
        if os.path.exists(alt):
            path = alt
        else:
            raise FileNotFoundError(path)
    raw = {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", line=n)
            key, value = (p.strip() for p in line.split("=", 1))
            if not _known_key(key):
                raise ParseError(f"unknown key {key!r}", line=n)
            if key in raw:
                raise ParseError(f"duplicate key {key!r}", line=n)
            try:
                _convert(key, value)
            except (ValueError, DomainError) as exc:
                raise ParseError(f"bad value for {key}: {exc}", line=n) from None
            raw[key] = value
    return raw


def _known_key(key):
    if key in _FLOAT_KEYS | _INT_KEYS | _STR_KEYS:
        return True
    parts = key.split(".")
    return len(parts) == 3 and parts[0] == "lane" and parts[2] in _LANE_FIELDS


def _convert(key, value):
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    if key == "theta_db":
        return parse_theta_grid(value)
    if key == "models":
        return parse_models(value)
    if key == "occupancy":
        return OccupancyMode(value)
    if key == "beta":
        return BetaKind(value)
    if key == "fading":
        return value if value == "exact" else int(value)
    if key.startswith("lane."):
        kind = _LANE_FIELDS[key.split(".")[2]]
        return LaneModel(value) if key.endswith(".model") else kind(value)
    return value


def _other_lanes(raw):
    lanes = {}
    for key, value in raw.items():
        if key.startswith("lane."):
            _, name, fld = key.split(".")
            lanes.setdefault(name, {})[fld] = _convert(key, value)
    out = []
    for name, f in lanes.items():
        if "lam" not in f or "offset" not in f:
            raise DomainError(f"lane {name}: lam and offset are required")
        out.append(OtherLaneSpec(name=name, **f))
    return out


def build_run_config(raw: dict, overrides: dict | None = None) -> RunConfig:
    """Merge file values with command-line overrides (overrides win)."""
    values = {k: _convert(k, v) for k, v in raw.items()}
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    if "lam" not in values or "c" not in values:
        raise DomainError("scenario needs lam and c")
    params = ScenarioParams(
        lam=values["lam"],
        c=values["c"],
        eta=values.get("eta", 3.0),
        xi=values.get("xi", 0.5),
        q=values.get("q", 0.02),
    )
    plan = None
    if "configs" in values or "simulation" in values.get("models", []):
        fading = values.get("fading", "exact")
        plan = SimulationPlan(
            n_configs=values.get("configs", 1000),
            n_fading=1 if fading == "exact" else int(fading),
            segment_length=values.get("segment_length", 25_000.0),
            master_seed=values.get("seed", 0),
            exact=fading == "exact",
        )
    models = [m for m in values.get("models", []) if m != "simulation"]
    return RunConfig(
        scenario=params,
        theta_grid_db=values.get("theta_db", [0.0]),
        models=models,
        plan=plan,
        K=values.get("K"),
        occupancy=values.get("occupancy", OccupancyMode.EXACT_EQ2),
        B=values.get("B", 2),
        beta=values.get("beta", BetaKind.BETA2),
        m2_lambda=values.get("m2_lambda"),
        other_lanes=_other_lanes(raw),
    )


def with_output(cfg: RunConfig, path, fmt) -> RunConfig:
    return replace(cfg, output_path=path, output_format=fmt)
