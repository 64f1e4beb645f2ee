"""SIR outage probability and meta distribution for 1-D hardcore vehicular networks."""

from .asymptotics import AsymptoticRegime, Regime, cov_limit, lemma3_limit, lemma3_moments, lemma4_moments
from .errors import (
    ConvergenceError,
    DomainError,
    HardcoreSIRError,
    InfeasibleMoments,
    InsufficientData,
    NoConvergence,
    ParseError,
    QuadratureError,
    ValidationError,
)
from .metadist import (
    BetaFit,
    BetaKind,
    LaneModel,
    MetaMoments,
    OtherLane,
    fit_beta,
    fit_generalized_beta,
    meta_ccdf,
    meta_moments,
    meta_moments_m1,
    meta_moments_m2,
    multilane_moments,
)
from .models import (
    DiscretizationConfig,
    Model,
    OccupancyMode,
    OutageResult,
    choose_k,
    discretization_config,
    outage,
    rmin,
)
from .montecarlo import LaneSpec, SimulationPlan, SimulationResult, simulate_meta, simulate_multilane, simulate_outage
from .pointproc import LaneSnapshot, ScenarioParams, pcf, sample_hardcore, sample_ppp
from .traces import HeadwayFit, TraceSnapshot, fit_headways, multilane_geometry, parse_snapshot

__version__ = "0.1.0"
