"""Command-line surface: simulate, fit, diagnose, ingest, bench.

Exit codes: 0 success, 2 validation error, 3 estimation infeasible,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dataset import BrokenDataset, WeightScheme
from .errors import EstimationInfeasibleError, ParseError, ValidationError
from .estimators import (FitConfig, fit_full_breaking, fit_mle_topl, fit_rank_breaking,
                         fit_restricted_bottoml)
from .experiments import CSV_COLUMNS, ScenarioSpec, run_trials, scaling_table
from .graphs import compute_diagnostics, sample_complexity_check, theoretical_error_bound
from .io import (emit_csv, parse_partial_orders_jsonl, parse_ratings_csv, parse_soc,
                 ratings_to_partial_orders, write_partial_orders_jsonl)
from .validation import check_partial_orders


def _add_scenario_flags(parser):
    parser.add_argument("--d", type=int, required=True, help="number of items")
    parser.add_argument("--n", type=int, required=True, help="number of samples")
    parser.add_argument("--kappa", type=int, required=True, help="offering size")
    parser.add_argument("--ell", type=int, default=1, help="separators per sample")
    parser.add_argument("--placement", default="random-ell",
                        choices=["top-ell", "random-ell", "random-ell-top-half",
                                 "bottom-ell", "position-p", "custom"])
    parser.add_argument("--position", type=int, default=None,
                        help="separator position for position-p placement")
    parser.add_argument("--positions", default=None,
                        help="comma-separated positions for custom placement")
    parser.add_argument("--b", type=float, default=2.0, help="utility box half-width")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)


def _add_fit_flags(parser):
    parser.add_argument("--scheme", default="optimal",
                        choices=["optimal", "uniform", "inverse-kappa"])
    parser.add_argument("--estimator", default="rank-breaking",
                        choices=["rank-breaking", "full-breaking", "mle-topl",
                                 "restricted-bottom"])
    parser.add_argument("--tol", type=float, default=1e-8)
    parser.add_argument("--max-iters", type=int, default=10_000)


def _spec_from_args(args) -> ScenarioSpec:
    positions = None
    if args.positions:
        positions = tuple(int(p) for p in args.positions.split(","))
    return ScenarioSpec(d=args.d, n=args.n, kappa=args.kappa, ell=args.ell,
                        placement=args.placement, position=args.position,
                        positions=positions, b=args.b, trials=args.trials,
                        seed=args.seed)


def _config_from_args(args, b) -> FitConfig:
    return FitConfig(b=b, tolerance=args.tol, max_iterations=args.max_iters)


def _cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    config = _config_from_args(args, args.b)
    aggregate = run_trials(spec, estimator=args.estimator, scheme=args.scheme,
                           config=config)
    diag = aggregate.mean_diagnostics or {}
    row = {
        "scenario_id": f"simulate:{args.estimator}:{args.scheme}",
        "axis": "n", "axis_value": spec.n,
        "estimator": args.estimator, "scheme": args.scheme,
        "trials": len(aggregate.results),
        "mean_mse": aggregate.mean_mse,
        "ci_low": aggregate.ci_low, "ci_high": aggregate.ci_high,
        "alpha": diag.get("alpha", float("nan")),
        "beta": diag.get("beta", float("nan")),
        "gamma": diag.get("gamma", float("nan")),
        "eta": diag.get("eta", float("nan")),
        "runtime_ms": aggregate.mean_runtime_ms,
    }
    emit_csv([row], args.out, CSV_COLUMNS)
    print(f"wrote 1 row to {args.out} (mean MSE {aggregate.mean_mse:.6g})")
    return 0


def _cmd_fit(args) -> int:
    orders = check_partial_orders(parse_partial_orders_jsonl(args.data))
    config = _config_from_args(args, args.b)
    if args.estimator == "rank-breaking":
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(args.scheme))
        result = fit_rank_breaking(dataset, config)
    elif args.estimator == "full-breaking":
        result = fit_full_breaking(orders, config)
    elif args.estimator == "mle-topl":
        result = fit_mle_topl(orders, config)
    else:
        if not args.reference:
            raise ValidationError("--reference (weakest-first item file) is required "
                                  "for the restricted estimator")
        with open(args.reference, "r", encoding="utf-8") as handle:
            reference = [json.loads(line) for line in handle if line.strip()]
        if args.d_tilde is None:
            raise ValidationError("--d-tilde is required for the restricted estimator")
        dataset = BrokenDataset.from_partial_orders(orders, WeightScheme("uniform"))
        result = fit_restricted_bottoml(dataset, args.d_tilde, reference, config)
    payload = result.to_dict()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        print(f"wrote fit to {args.out} (converged={result.converged})")
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_diagnose(args) -> int:
    orders = check_partial_orders(parse_partial_orders_jsonl(args.data))
    dataset = BrokenDataset.from_partial_orders(orders, WeightScheme(args.scheme))
    diag = compute_diagnostics(dataset, args.b)
    required, satisfied = sample_complexity_check(diag, dataset.d, args.b)
    bounds = {}
    for regime in ("general-optimal", "general-custom"):
        try:
            bounds[regime] = theoretical_error_bound(diag, dataset.d, args.b, regime)
        except ValidationError:
            bounds[regime] = None
    payload = {
        "d": dataset.d,
        "b": args.b,
        "diagnostics": diag.to_dict(),
        "sample_complexity": {
            "required": required,
            "actual": diag.effective_sample_size,
            "satisfied": satisfied,
        },
        "error_bounds": bounds,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        print(f"wrote diagnostics to {args.out}")
    else:
        print(text)
    return 0


def _cmd_ingest(args) -> int:
    if args.format == "soc":
        rankings = parse_soc(args.input)
        orders = check_partial_orders(rankings)
    else:
        table = parse_ratings_csv(args.input)
        orders, dropped = ratings_to_partial_orders(table, tie_policy=args.tie_policy)
        if dropped:
            print(f"dropped {dropped} users with no separator", file=sys.stderr)
    write_partial_orders_jsonl(orders, args.out)
    print(f"wrote {len(orders)} partial orders to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    config = _config_from_args(args, args.b)
    values = [int(v) for v in args.values.split(",")]
    estimators = []
    for name in args.estimators.split(","):
        for scheme in args.schemes.split(","):
            estimators.append((name.strip(), scheme.strip()))
    rows = scaling_table(args.axis, spec, values, estimators=estimators, config=config)
    emit_csv(rows, args.out, CSV_COLUMNS)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankbreak",
        description="Utilities from partial orderings via consistent rank-breaking")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one synthetic scenario, emit a results CSV")
    _add_scenario_flags(p_sim)
    _add_fit_flags(p_sim)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit utilities from a partial-order JSONL file")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--b", type=float, default=10.0)
    p_fit.add_argument("--d-tilde", type=int, default=None)
    p_fit.add_argument("--reference", default=None,
                       help="JSONL file of item ids, weakest first (restricted estimator)")
    _add_fit_flags(p_fit)
    p_fit.add_argument("--out", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_diag = sub.add_parser("diagnose", help="comparison-graph diagnostics and bounds")
    p_diag.add_argument("--data", required=True)
    p_diag.add_argument("--b", type=float, default=2.0)
    p_diag.add_argument("--scheme", default="optimal",
                        choices=["optimal", "uniform", "inverse-kappa"])
    p_diag.add_argument("--out", default=None)
    p_diag.set_defaults(func=_cmd_diagnose)

    p_ing = sub.add_parser("ingest", help="convert soc/ratings files to partial-order JSONL")
    p_ing.add_argument("--format", required=True, choices=["soc", "ratings"])
    p_ing.add_argument("--input", required=True)
    p_ing.add_argument("--out", required=True)
    p_ing.add_argument("--tie-policy", default="block")
    p_ing.set_defaults(func=_cmd_ingest)

    p_bench = sub.add_parser("bench", help="scaling grids over n, ell, or d")
    _add_scenario_flags(p_bench)
    p_bench.add_argument("--axis", required=True, choices=["n", "ell", "d"])
    p_bench.add_argument("--values", required=True, help="comma-separated axis values")
    p_bench.add_argument("--estimators", default="rank-breaking")
    p_bench.add_argument("--schemes", default="optimal")
    p_bench.add_argument("--tol", type=float, default=1e-8)
    p_bench.add_argument("--max-iters", type=int, default=10_000)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
