import argparse
import logging
import sys
from dataclasses import asdict
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from config import Config
from models.distributions import BivariateLognormalSpec
from models.errors import ConfigError
from models.limits import LIMIT_FRACTION_PATH
from models.response import ErrorResponse, SuccessResponse
from models.sweep import SweepConfig
from models.xos import AssetScenario, XosStructure, XosType
from services.default_risk_service import MonteCarloPdEstimator
from services.limit_analysis_service import (
    classify_limit_estimation,
    debt_limit_distribution,
    equity_limit_path,
    limit_pd_suzuki_equity,
    limiting_variance_ratio,
    regime_boundary,
    verify_area_limits,
)
from services.mixture_service import (
    build_overestimation_case,
    build_underestimation_case,
    realize_on_quadrant,
    scenario_default_probability,
    scenario_lognormal_pd,
    two_point_lognormal_pd,
)
from services.sweep_config_loader import load_sweep_config, parse_number_list
from services.sweep_service import emit_cdf_comparison, emit_scatter, frame_to_csv_text, run_sweep, write_csv
from services.valuation_service import iterate_claims, value_closed_form

XOS_TYPE_CHOICES = [t.value for t in XosType if t != XosType.MIXED]


def _number_list(text: str) -> List[float]:
    try:
        return parse_number_list(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="Root seed (default: XOS_SEED or 0)")
    common.add_argument("--out", help="Output path (default: stdout)")
    common.add_argument("--format", choices=["text", "csv", "json"], default="text")
    common.add_argument("--workers", type=int, help="Worker count (default: XOS_WORKERS or 1)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Default: XOS_LOG_LEVEL or INFO")

    structure = argparse.ArgumentParser(add_help=False)
    for name in ("ms12", "ms21", "md12", "md21"):
        structure.add_argument(f"--{name}", type=float, default=0.0)
    structure.add_argument("--d1", type=float, default=1.0)
    structure.add_argument("--d2", type=float, default=1.0)

    assets = argparse.ArgumentParser(add_help=False)
    assets.add_argument("--sigma2", type=float, default=1.0, help="Log-variance of both exogenous assets")
    assets.add_argument("--sig12", type=float, default=0.0, help="Log-scale covariance")
    assets.add_argument("--a", type=float, default=1.0, help="Expected exogenous assets of each firm")
    assets.add_argument("--n", type=int, default=100_000, help="Simulated scenarios")

    parser = argparse.ArgumentParser(prog="xos", description="Two-firm cross-ownership credit engine")
    sub = parser.add_subparsers(dest="command", required=True)

    value = sub.add_parser("value", parents=[common, structure], help="Value claims for one asset scenario")
    value.add_argument("--a1", type=float, required=True)
    value.add_argument("--a2", type=float, required=True)
    value.add_argument("--method", choices=["closed-form", "fixed-point"], default="closed-form")

    pd_cmd = sub.add_parser("pd", parents=[common, assets], help="Suzuki and lognormal default probabilities")
    pd_cmd.add_argument("--type", choices=XOS_TYPE_CHOICES, default=XosType.EQUITY_ONLY.value)
    pd_cmd.add_argument("--frac", type=float, help="Both fractions")
    pd_cmd.add_argument("--frac12", type=float, default=0.5)
    pd_cmd.add_argument("--frac21", type=float, default=0.5)
    pd_cmd.add_argument("--d", type=float, help="Face value of both firms")
    pd_cmd.add_argument("--d1", type=float, default=1.0)
    pd_cmd.add_argument("--d2", type=float, default=1.0)
    pd_cmd.add_argument("--firm", type=int, choices=[1, 2], default=1)

    sweep = sub.add_parser("sweep", parents=[common], help="Relative-risk sweep or CDF figure data")
    sweep.add_argument("--config", help="key=value sweep configuration (default: the study grid)")
    sweep.add_argument("--figure-data", choices=[XosType.EQUITY_ONLY.value, XosType.DEBT_ONLY.value],
                       help="Emit firm value CDF tables instead of a sweep; --out is the file stem")
    sweep.add_argument("--d-grid", type=_number_list, default=[0.9], help="Face values for --figure-data")
    sweep.add_argument("--frac", type=float, default=0.95)
    sweep.add_argument("--sigma2", type=float, default=1.0)
    sweep.add_argument("--n", type=int, default=100_000)

    limit = sub.add_parser("limit", parents=[common], help="Limits of fractions tending to 1")
    limit.add_argument("--kind", choices=["equity", "debt", "boundary", "areas"], default="equity")
    limit.add_argument("--d1", type=float, default=1.0)
    limit.add_argument("--d2", type=float, default=1.0)
    limit.add_argument("--mu", type=float, help="Log-mean of A1 (default: -0.5 * sigma2)")
    limit.add_argument("--sigma2", type=float, default=1.0)
    limit.add_argument("--n", type=int, default=1_000_000)
    limit.add_argument("--method", choices=["mc", "quadrature"], default="mc")
    limit.add_argument("--area-type", choices=[XosType.EQUITY_ONLY.value, XosType.DEBT_ONLY.value],
                       default=XosType.EQUITY_ONLY.value)

    general = sub.add_parser("general", parents=[common, structure], help="Two-point laws on which the lognormal errs")
    general.add_argument("--p", type=float, required=True, help="Default probability of the two-point law")
    general.add_argument("--case", choices=["over", "under"], default="over")
    general.add_argument("--realize", action="store_true", help="Place the law on asset scenarios of the structure")

    scatter = sub.add_parser("scatter", parents=[common, structure, assets], help="Firm values with their Suzuki areas")
    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")
    logging.getLogger().setLevel(level)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        logging.info(f"Wrote {out}")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit(args: argparse.Namespace, data: Dict[str, Any], text: str, frame: Optional[pd.DataFrame] = None) -> None:
    if args.format == "json":
        _write(SuccessResponse(command=args.command, data=data).to_json(), args.out)
    elif args.format == "csv":
        _write(frame_to_csv_text(frame if frame is not None else pd.DataFrame([data])), args.out)
    else:
        _write(text, args.out)


def _spec(args: argparse.Namespace) -> BivariateLognormalSpec:
    return BivariateLognormalSpec.from_asset_level(args.a, args.sigma2, args.sig12)


def _structure(args: argparse.Namespace) -> XosStructure:
    return XosStructure(ms12=args.ms12, ms21=args.ms21, md12=args.md12, md21=args.md21, d1=args.d1, d2=args.d2)


def run_value(args: argparse.Namespace, config: Config) -> None:
    x = _structure(args)
    sc = AssetScenario(args.a1, args.a2)
    if args.method == "fixed-point":
        claims, iterations = iterate_claims(x, sc.a1, sc.a2, config.fixed_point_tol, config.fixed_point_max_iter)
        claim = claims.at(0)
        data = {**claim.to_dict(), "iterations": iterations}
    else:
        claim = value_closed_form(x, sc)
        data = claim.to_dict()
    _emit(args, data, claim.describe())


def run_pd(args: argparse.Namespace, config: Config) -> None:
    f12, f21 = (args.frac, args.frac) if args.frac is not None else (args.frac12, args.frac21)
    d1, d2 = (args.d, args.d) if args.d is not None else (args.d1, args.d2)
    x = XosStructure.of_type(XosType(args.type), f12, f21, d1, d2)
    estimator = MonteCarloPdEstimator.from_config(config)
    comparison = estimator.compare_models(x, _spec(args), args.n, config.default_seed, firm=args.firm)
    rounded = comparison.rounded(config.rounding)
    data = {**x.to_dict(), **comparison.to_dict(),
            "p_s_rounded": rounded.p_suzuki, "p_l_rounded": rounded.p_lognormal, "rr_rounded": rounded.rr}
    text = (f"p_s={comparison.p_suzuki:.6f} (se {comparison.se_suzuki:.2e}) "
            f"p_l={comparison.p_lognormal:.6f} rr={comparison.rr:.5g} "
            f"[rounded: p_s={rounded.p_suzuki} p_l={rounded.p_lognormal} rr={rounded.rr:.5g}]")
    _emit(args, data, text)


def run_sweep_command(args: argparse.Namespace, config: Config) -> None:
    seed = args.seed if args.seed is not None else config.default_seed
    if args.figure_data:
        if not args.out:
            raise ConfigError("--figure-data needs --out as the file stem")
        figure = emit_cdf_comparison(
            XosType(args.figure_data), args.d_grid, seed,
            sigma_sq=args.sigma2, fraction=args.frac, n=args.n,
            estimator=MonteCarloPdEstimator.from_config(config))
        paths = figure.write(args.out)
        rows = {f"{d:g}": c.to_dict() for d, c in figure.comparisons.items()}
        text = "\n".join(f"d={d}: p_s={r['p_suzuki']:.5f} p_l={r['p_lognormal']:.5f} rr={r['rr']:.5g}" for d, r in rows.items())
        sys.stdout.write((SuccessResponse(command=args.command, data={"files": list(paths), "pd": rows}).to_json()
                          if args.format == "json" else text) + "\n")
        return

    overrides = {"seed": args.seed} if args.seed is not None else {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    defaults = {"seed": config.default_seed, "workers": config.workers, "rounding": config.rounding,
                "stream_size": config.stream_size}
    if args.config:
        cfg = load_sweep_config(args.config, overrides, defaults)
    else:
        cfg = SweepConfig(**{**defaults, **overrides})
    frame = run_sweep(cfg)

    if args.format == "json":
        _write(SuccessResponse(command=args.command, data={"cells": frame.to_dict(orient="records")}).to_json(), args.out)
    elif args.out:
        write_csv(frame, args.out)
        logging.info(f"Wrote {len(frame)} cells to {args.out}")
    else:
        sys.stdout.write(frame_to_csv_text(frame))


def run_limit(args: argparse.Namespace, config: Config) -> None:
    mu = args.mu if args.mu is not None else -0.5 * args.sigma2
    spec = BivariateLognormalSpec(mu, mu, args.sigma2, args.sigma2)
    seed = config.default_seed
    estimator = MonteCarloPdEstimator.from_config(config)

    if args.kind == "equity":
        region = limit_pd_suzuki_equity(args.d1, args.d2, spec, method=args.method, n=args.n, seed=seed,
                                        estimator=estimator)
        path = equity_limit_path(args.d1, args.d2, spec, LIMIT_FRACTION_PATH, n=args.n, seed=seed,
                                 estimator=estimator)
        ratio = limiting_variance_ratio(args.d1, args.d2, spec, n=args.n, seed=seed, estimator=estimator)
        frame = pd.DataFrame([asdict(point) for point in path])
        data = {"limit_pd_suzuki": asdict(region), "limiting_variance_ratio": ratio,
                "path": frame.to_dict(orient="records")}
        text = (f"limit p_s={region.probability:.6f} (+/- {region.error:.1e}, {region.method}) "
                f"variance ratio limit={ratio:.5g}\n{frame.to_string(index=False)}")
        _emit(args, data, text, frame)
    elif args.kind == "debt":
        dist = debt_limit_distribution(args.d1, args.d2, spec, n=args.n, seed=seed, estimator=estimator)
        data = {"case": dist.case.value, "pd_suzuki": dist.pd_suzuki, "pd_lognormal": dist.pd_lognormal,
                "mu_tilde": dist.matched.mu_tilde, "sig_tilde_sq": dist.matched.sig_tilde_sq,
                "law": dist.description}
        text = (f"case={dist.case.value} law={dist.description} "
                f"p_s={dist.pd_suzuki:.6g} p_l={dist.pd_lognormal:.6g}")
        _emit(args, data, text)
    elif args.kind == "boundary":
        rb = regime_boundary(mu, args.sigma2 ** 0.5, args.d2)
        estimation = classify_limit_estimation(args.d1, rb)
        data = {**asdict(rb), "d1": args.d1, "estimation": estimation.value}
        text = (f"d1*={rb.d1_star:.8g} d1_max={rb.d1_max:.8g} d1**={rb.d1_star_star:.8g}; "
                f"d1={args.d1:g} is {estimation.value}estimated")
        _emit(args, data, text)
    else:
        report = verify_area_limits(args.d1, args.d2, LIMIT_FRACTION_PATH, XosType(args.area_type))
        data = {"monotone": report.monotone, "converged": report.all_converged, "notes": report.notes}
        text = f"monotone={report.monotone} converged={report.all_converged} " + "; ".join(report.notes)
        _emit(args, data, text.strip())


def run_general(args: argparse.Namespace, config: Config) -> None:
    build = build_overestimation_case if args.case == "over" else build_underestimation_case
    law = build(args.p, args.d1)
    data = {"p": law.p, "lo": law.lo, "hi": law.hi, "mean": law.mean,
            "threshold": law.threshold, "pd_lognormal": two_point_lognormal_pd(law)}
    text = f"V1 = {law.lo:g} w.p. {law.p:g}, {law.hi:.8g} otherwise; lognormal PD={data['pd_lognormal']:.6g}"
    if args.realize:
        x = _structure(args)
        dist = realize_on_quadrant(x, law)
        data["atoms"] = [asdict(atom) for atom in dist.atoms]
        data["pd_suzuki_realized"] = scenario_default_probability(dist, x)
        data["pd_lognormal_realized"] = scenario_lognormal_pd(dist, x)
        text += "\n" + ", ".join(f"({atom.a1:.8g}, {atom.a2:.8g})" for atom in dist.atoms)
    _emit(args, data, text)


def run_scatter(args: argparse.Namespace, config: Config) -> None:
    frame = emit_scatter(_structure(args), _spec(args), args.n, config.default_seed,
                         estimator=MonteCarloPdEstimator.from_config(config))
    if args.format == "json":
        _write(SuccessResponse(command=args.command, data={"rows": len(frame)}).to_json(), None)
        if args.out:
            write_csv(frame, args.out)
    elif args.out:
        write_csv(frame, args.out)
    else:
        sys.stdout.write(frame_to_csv_text(frame))


COMMANDS = {
    "value": run_value,
    "pd": run_pd,
    "sweep": run_sweep_command,
    "limit": run_limit,
    "general": run_general,
    "scatter": run_scatter,
}


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns 0 on success, 2 on usage or configuration errors, 1 otherwise."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        config = Config.from_env()
        if args.seed is not None and args.seed < 0:
            raise ConfigError(f"--seed must be non-negative, got {args.seed}")
        if args.workers is not None and args.workers < 1:
            raise ConfigError(f"--workers must be at least 1, got {args.workers}")
        if args.seed is not None:
            config.default_seed = args.seed
        if args.workers is not None:
            config.workers = args.workers
        _configure_logging(args.log_level or config.log_level)
        logging.info(f"Running '{args.command}' (seed={config.default_seed})")
        COMMANDS[args.command](args, config)
        return 0
    except ConfigError as e:
        logging.error(f"Configuration error: {e}")
        sys.stderr.write(ErrorResponse.from_exception(e, args.command, 2).to_json() + "\n")
        return 2
    except Exception as e:
        logging.error(f"Error running '{args.command}': {e}")
        sys.stderr.write(ErrorResponse.from_exception(e, args.command, 1).to_json() + "\n")
        return 1


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
