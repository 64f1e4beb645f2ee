"""Command-line front end: ``hardcore-sir <subcommand> [options]``.

Exit status: 0 on success (warnings included), 1 on a numerical or data
error, 2 on a usage error or a missing input file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import asymptotics, config as cfgmod, metadist, models, montecarlo, traces
from .errors import DomainError, HardcoreSIRError, InfeasibleMoments, NoConvergence
from .metadist import BetaKind, LaneModel, OtherLane
from .montecarlo import LaneSpec, fmt17
from .pointproc import ScenarioParams

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2
SWEEP_PARAMS = ("lam", "c", "eta", "xi", "q")


class UsageError(Exception):
    pass


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# output


def emit(rows, fmt, path, extra=None):
    """Write rows as CSV (17 significant digits) or JSON with the same values."""
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        if fmt == "json":
            doc = dict(extra or {})
            doc["rows"] = [{k: _json_value(v) for k, v in r.items()} for r in rows]
            json.dump(doc, out, indent=1)
            out.write("\n")
        elif rows:
            keys = list(rows[0].keys())
            out.write(",".join(keys) + "\n")
            for r in rows:
                out.write(",".join(_csv_cell(r.get(k)) for k in keys) + "\n")
    finally:
        if path:
            out.close()


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def _csv_cell(v):
    s = fmt17(v)
    return f'"{s}"' if ("," in s or '"' in s) else s


# ---------------------------------------------------------------------------
# configuration from arguments


def _common(p):
    p.add_argument("--scenario", help="scenario file (path or bundled name, e.g. low_activity)")
    p.add_argument("--theta-db", help='threshold grid in dB: "a:b:step", "x,y" or one value')
    p.add_argument("--models", help="comma list: discretization,M1,M2,M3,M4,lemma3,lemma4,simulation")
    p.add_argument("--seed", type=int)
    p.add_argument("--configs", type=int, help="simulation: spatial configurations")
    p.add_argument("--fading", help='fading draws per configuration, or "exact"')
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--q", type=float, help="far-field fraction of the mean interference")
    p.add_argument("--override-c", type=float, help="hardcore distance c in m")
    p.add_argument("--override-lambda", type=float, help="intensity in 1/m")
    p.add_argument("--xi", type=float, help="ALOHA activity")
    p.add_argument("--eta", type=float, help="pathloss exponent")
    p.add_argument("--K", type=int, help="near-field intervals")
    p.add_argument("--B", type=int, help="number of meta moments (1..3)")
    p.add_argument("--beta", choices=[k.value for k in BetaKind], help="meta distribution family")


def _overrides(args) -> dict:
    ov = {
        "lam": args.override_lambda,
        "c": args.override_c,
        "q": args.q,
        "xi": args.xi,
        "eta": args.eta,
        "seed": args.seed,
        "configs": args.configs,
        "K": args.K,
        "B": args.B,
        "beta": BetaKind(args.beta) if args.beta else None,
    }
    if args.theta_db is not None:
        ov["theta_db"] = cfgmod.parse_theta_grid(args.theta_db)
    if args.models is not None:
        ov["models"] = cfgmod.parse_models(args.models)
    if args.fading is not None:
        ov["fading"] = args.fading if args.fading == "exact" else int(args.fading)
    return ov


def load_config(args, require_selection=True) -> cfgmod.RunConfig:
    raw = cfgmod.read_scenario_file(args.scenario) if args.scenario else {}
    try:
        overrides = _overrides(args)
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    try:
        cfg = cfgmod.build_run_config(raw, overrides)
    except DomainError as exc:
        if "needs lam and c" in str(exc):
            raise UsageError(f"{exc} (give --scenario or --override-lambda/--override-c)") from None
        raise
    cfg = cfgmod.with_output(cfg, args.out, args.format)
    if require_selection:
        try:
            cfg.validate()
        except DomainError as exc:
            raise UsageError(str(exc)) from None
    return cfg


# ---------------------------------------------------------------------------
# helpers shared by subcommands


def disc_config(cfg):
    p = cfg.scenario
    if cfg.K is not None:
        return models.discretization_config(p, cfg.K, cfg.occupancy)
    return models.choose_k(p, cfg.occupancy)


def other_lane_k(lane, params) -> int:
    """Intervals for an other lane: cover [r0, R_other] with R_other = (1/q)^(1/(eta-1)) r0."""
    if lane.K:
        return lane.K
    if lane.c <= 0:
        return 0
    r_other = (1.0 / params.q) ** (1.0 / (params.eta - 1.0)) * lane.offset
    return max(1, math.ceil((r_other - lane.offset) / lane.c - 1e-9))


def analytic_others(cfg, own_model):
    out = []
    for ln in cfg.other_lanes:
        if own_model == "discretization" and LaneModel(ln.model) is LaneModel.DISCRETIZATION:
            out.append(OtherLane(ln.lam, ln.offset, LaneModel.DISCRETIZATION, ln.c, other_lane_k(ln, cfg.scenario)))
        else:
            lam = ln.lam if own_model == "discretization" else (ln.ppp_lam or ln.lam)
            out.append(OtherLane(lam, ln.offset, LaneModel.PPP))
    return out


def sim_lanes(cfg):
    p = cfg.scenario
    lanes = [LaneSpec(p)]
    for ln in cfg.other_lanes:
        lanes.append(LaneSpec(p.replace(lam=ln.lam, c=ln.c), ln.name, ln.offset))
    return lanes


def model_moments(cfg, model, theta, B, config=None) -> metadist.MetaMoments:
    p = cfg.scenario
    if model in ("lemma3", "lemma4"):
        if cfg.other_lanes:
            raise DomainError(f"{model} covers the own lane only")
        fn = asymptotics.lemma3_moments if model == "lemma3" else asymptotics.lemma4_moments
        return fn(p, p.xi, theta)
    if cfg.other_lanes:
        if model not in ("discretization", "M1", "M2"):
            raise DomainError(f"model {model} does not support other lanes")
        return metadist.multilane_moments(
            p, model, analytic_others(cfg, model), theta, B, config, cfg.m2_lambda
        )
    if model == "discretization":
        return metadist.meta_moments(p, config, theta, B)
    if model == "M1":
        return metadist.meta_moments_m1(p, theta, B)
    if model == "M2":
        return metadist.meta_moments_m2(p, theta, B)
    raise DomainError(f"model {model} has no meta distribution")


def run_simulation(cfg, thetas, meta=False):
    if cfg.other_lanes:
        return montecarlo.simulate_multilane(sim_lanes(cfg), cfg.plan, thetas)
    fn = montecarlo.simulate_meta if meta else montecarlo.simulate_outage
    return fn(cfg.scenario, cfg.plan, thetas)


# ---------------------------------------------------------------------------
# subcommands


def outage_rows(cfg):
    thetas = cfg.theta_linear
    config = disc_config(cfg) if "discretization" in cfg.models else None
    sim = run_simulation(cfg, thetas) if cfg.plan is not None else None
    rows = []
    for i, (tdb, th) in enumerate(zip(cfg.theta_grid_db, thetas)):
        for m in cfg.models:
            note = asymptotics.regime_note(m, th)
            if m.startswith("lemma") or cfg.other_lanes:
                p_out = 1.0 - model_moments(cfg, m, th, 1, config).mean
            else:
                p_out = models.outage(m, cfg.scenario, th, config).p_out
            rows.append({"theta_db": float(tdb), "model": m, "p_out": p_out, "ci": None, "note": note})
        if sim is not None:
            rows.append(
                {"theta_db": float(tdb), "model": "simulation", "p_out": sim.p_out[i], "ci": sim.ci_halfwidth[i], "note": ""}
            )
    return rows


def cmd_outage(cfg) -> int:
    emit(outage_rows(cfg), cfg.output_format, cfg.output_path, {"command": "outage"})
    return EXIT_OK


def _fit(m, kind):
    if kind is BetaKind.BETA2:
        return metadist.fit_beta(m)
    return metadist.fit_generalized_beta(m, kind)


def meta_rows(cfg):
    thetas = cfg.theta_linear
    u = np.linspace(0.0, 1.0, montecarlo.CCDF_POINTS)
    B = max(cfg.B, 3 if cfg.beta is BetaKind.GEN_BETA3 else 2)
    config = disc_config(cfg) if "discretization" in cfg.models else None
    sim = run_simulation(cfg, thetas, meta=True) if cfg.plan is not None else None
    rows, warnings = [], []
    for i, (tdb, th) in enumerate(zip(cfg.theta_grid_db, thetas)):
        entries = [(m, model_moments(cfg, m, th, B, config), None) for m in cfg.models]
        if sim is not None:
            entries.append(("simulation", sim.moments[i], sim.ccdf[i]))
        for m, mom, empirical in entries:
            base = {
                "theta_db": float(tdb),
                "model": m,
                "m1": mom.mean,
                "m2": mom.m_full[1],
                "cov": mom.cov,
                "alpha": None,
                "beta": None,
                "epsilon": None,
                "flag": "",
                "note": asymptotics.regime_note(m, th),
            }
            try:
                fit = _fit(mom, cfg.beta)
                base.update(alpha=fit.alpha, beta=fit.beta, epsilon=fit.epsilon)
                ccdf = empirical if empirical is not None else metadist.meta_ccdf(fit, u)
            except (InfeasibleMoments, NoConvergence, DomainError) as exc:
                base["flag"] = type(exc).__name__
                warnings.append(f"theta {tdb:g} dB, {m}: {exc}")
                ccdf = empirical
            if ccdf is None:
                rows.append({**base, "u": None, "ccdf": None})
            else:
                rows.extend({**base, "u": float(uu), "ccdf": float(cc)} for uu, cc in zip(u, ccdf))
    return rows, warnings


def cmd_meta(cfg) -> int:
    rows, warnings = meta_rows(cfg)
    for w in warnings:
        _warn(w)
    emit(rows, cfg.output_format, cfg.output_path, {"command": "meta"})
    return EXIT_OK


def cmd_simulate(cfg, per_config=False, headways=None) -> int:
    if cfg.plan is None:
        cfg.plan = montecarlo.SimulationPlan()
    thetas = cfg.theta_linear
    if headways is not None:
        plan = montecarlo.SimulationPlan(**{**cfg.plan.__dict__, "source": montecarlo.Source.EMPIRICAL})
        res = montecarlo.simulate_meta(cfg.scenario, plan, thetas, headways=headways)
    else:
        res = run_simulation(cfg, thetas, meta=True)
    if cfg.output_format == "json":
        res.to_json(cfg.output_path or sys.stdout, per_config=per_config)
    else:
        res.to_csv(cfg.output_path or sys.stdout)
    return EXIT_OK


def fit_rows(path, lane, timestamp, override_c, override_lambda):
    snap = traces.parse_snapshot(path, timestamp=timestamp)
    if snap.unsorted_rows:
        _warn(f"{snap.unsorted_rows} rows were out of order and have been sorted")
    lanes = [lane] if lane is not None else sorted(snap.lanes)
    return {ln: traces.fit_headways(snap, ln, override_c, override_lambda) for ln in lanes}


def cmd_fit(args) -> int:
    fits = fit_rows(args.trace, args.lane, args.timestamp, args.override_c, args.override_lambda)
    if args.format == "json":
        doc = {ln: f.to_dict() for ln, f in fits.items()}
        text = json.dumps(doc, indent=1) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        rows = [
            {"lane": ln, "lambda_hat": f.lambda_hat, "c_hat": f.c_hat, "n_gaps": f.n_gaps, "lambda_c": f.lambda_hat * f.c_hat}
            for ln, f in fits.items()
        ]
        emit(rows, "csv", args.out)
    return EXIT_OK


def rmin_rows(cfg):
    p = cfg.scenario
    config = disc_config(cfg)
    rows = [{"lane": "own", "r0_m": None, "rmin_m": models.rmin(p), "K": config.K, "R_m": config.R}]
    for ln in cfg.other_lanes:
        r_other = (1.0 / p.q) ** (1.0 / (p.eta - 1.0)) * ln.offset
        k = other_lane_k(ln, p)
        rows.append({"lane": ln.name, "r0_m": ln.offset, "rmin_m": r_other, "K": k or None, "R_m": ln.offset + k * ln.c if k else None})
    return rows


def cmd_rmin(cfg) -> int:
    emit(rmin_rows(cfg), cfg.output_format, cfg.output_path, {"command": "rmin"})
    return EXIT_OK


def sweep_rows(cfg, param, values):
    rows = []
    for v in values:
        sub = cfgmod.RunConfig(**{**cfg.__dict__, "scenario": cfg.scenario.replace(**{param: v})})
        for r in outage_rows(sub):
            rows.append({param: v, **r})
    return rows


def cmd_sweep(cfg, param, values) -> int:
    emit(sweep_rows(cfg, param, values), cfg.output_format, cfg.output_path, {"command": "sweep", "param": param})
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardcore-sir", description="SIR outage and meta distribution for 1-D hardcore vehicular networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("outage", help="outage probability per threshold and model")
    _common(p)
    p = sub.add_parser("meta", help="meta distribution moments, Beta fit and CCDF")
    _common(p)
    p = sub.add_parser("simulate", help="Monte Carlo meta distribution")
    _common(p)
    p.add_argument("--per-config", action="store_true", help="JSON: include the per-configuration matrix")
    p.add_argument("--trace", help="sample headways from this snapshot's empirical CDF")
    p.add_argument("--lane", help="lane of --trace")
    p.add_argument("--timestamp", type=int)
    p = sub.add_parser("fit-trace", help="fit (lambda, c) per lane of a snapshot")
    p.add_argument("--trace", required=True)
    p.add_argument("--lane")
    p.add_argument("--timestamp", type=int)
    p.add_argument("--override-c", type=float)
    p.add_argument("--override-lambda", type=float)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p = sub.add_parser("rmin", help="near/far split R_min, K and R")
    _common(p)
    p = sub.add_parser("sweep", help="outage over a list of values of one scenario parameter")
    _common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma list")
    return parser


def _dispatch(args) -> int:
    if args.command == "fit-trace":
        return cmd_fit(args)
    if args.command == "outage":
        return cmd_outage(load_config(args))
    if args.command == "meta":
        return cmd_meta(load_config(args))
    if args.command == "rmin":
        return cmd_rmin(load_config(args, require_selection=False))
    if args.command == "sweep":
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise UsageError(f"bad --values {args.values!r}") from None
        return cmd_sweep(load_config(args), args.param, values)
    if args.command == "simulate":
        cfg = load_config(args, require_selection=False)
        headways = None
        if args.trace:
            fits = fit_rows(args.trace, args.lane, args.timestamp, args.override_c, args.override_lambda)
            if len(fits) != 1:
                raise UsageError("--trace holds several lanes; pick one with --lane")
            headways = next(iter(fits.values()))
            p = cfg.scenario
            cfg.scenario = ScenarioParams(headways.lambda_hat, headways.c_hat, p.eta, p.xi, p.q)
        return cmd_simulate(cfg, args.per_config, headways)
    raise UsageError(f"unknown command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"{parser.prog}: error: file not found: {exc.filename or exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (HardcoreSIRError, ValueError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
