"""Command-line entry point: space inspection, search runs, cost analysis,
and report generation.

Exit codes are a stable scripting contract: 0 success, 2 input error,
3 empty result, 4 evaluator/protocol failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cost, reporting
from .orchestrator import BudgetSpec, resume_search, run_search
from .protocol import ExternalEvaluator, ProtocolError
from .samplers import SamplerSpec, SmacParams, TpeParams
from .space import (
    SearchSpace,
    SpaceError,
    default_space,
    enumerate_space,
    load_space,
    space_size,
)
from .synthetic import SyntheticEvaluator
from .trial_log import LogError, TrialLogWriter, read_log

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_EVALUATOR = 4


def _load_space_arg(path: str | None) -> SearchSpace:
    if path is None:
        return default_space()
    return load_space(path)


def _parse_input_shape(text: str) -> tuple[int, int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 4:
        raise SpaceError(f"input shape must be HxWxCxF, got {text!r}")
    dims = tuple(int(p) for p in parts)
    if min(dims) <= 0:
        raise SpaceError(f"input shape dims must be positive, got {text!r}")
    return dims


# ---------------------------------------------------------------- space ----

def cmd_space(args: argparse.Namespace) -> int:
    try:
        space = _load_space_arg(args.space)
    except (SpaceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.space_cmd == "size":
        print(space_size(space))
    elif args.space_cmd == "validate":
        print(f"ok: {len(space.domains)} domains, {space_size(space)} configurations")
    else:  # enumerate
        for config in enumerate_space(space):
            print(json.dumps(config.as_dict(), separators=(",", ":")))
    return EXIT_OK


# --------------------------------------------------------------- search ----

def _make_sampler_spec(args: argparse.Namespace) -> SamplerSpec:
    tpe = TpeParams(
        gamma=args.gamma,
        n_startup=args.n_startup,
        n_candidates=args.n_candidates,
        smoothing=args.smoothing,
    )
    smac = SmacParams(
        n_trees=args.n_trees,
        n_startup=args.n_startup,
        n_candidates=args.smac_candidates,
        interleave_every=args.interleave_every,
        bootstrap_fraction=args.bootstrap_fraction,
    )
    return SamplerSpec(name=args.sampler, tpe=tpe, smac=smac)


def _make_evaluator(args: argparse.Namespace, space: SearchSpace):
    if args.evaluator == "synthetic":
        return SyntheticEvaluator(
            space,
            profile_seed=args.profile_seed,
            epoch_duration_s=args.epoch_duration,
            duration_jitter=args.duration_jitter,
        )
    if args.evaluator.startswith("exec:"):
        return ExternalEvaluator(
            args.evaluator[len("exec:"):], epoch_timeout_s=args.epoch_timeout
        )
    raise SpaceError(
        f"evaluator must be 'synthetic' or 'exec:<command>', got {args.evaluator!r}"
    )


def cmd_search(args: argparse.Namespace) -> int:
    try:
        if not args.out:
            raise SpaceError("--out is required (flag or run-config key)")
        space = _load_space_arg(args.space)
        budget = BudgetSpec(
            max_trials=args.max_trials,
            epochs_per_trial=args.epochs,
            wall_clock_s=args.wall_clock,
            clock_mode=args.clock,
        )
        sampler_spec = _make_sampler_spec(args)
    except (SpaceError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        evaluator = _make_evaluator(args, space)
    except SpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProtocolError as exc:
        print(f"evaluator error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR

    try:
        if args.resume:
            result = resume_search(
                args.out, space, sampler_spec, evaluator, budget, args.seed,
                aggregator=args.aggregator,
            )
        else:
            try:
                sink = TrialLogWriter(args.out, force=args.force)
            except FileExistsError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_INPUT
            with sink:
                result = run_search(
                    space, sampler_spec, evaluator, budget, args.seed, sink,
                    aggregator=args.aggregator,
                )
    except ProtocolError as exc:
        print(f"evaluator error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    except (LogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        evaluator.close()

    if result.best is None:
        print("no completed trials", file=sys.stderr)
        return EXIT_EMPTY
    print(
        json.dumps(
            {
                "best_trial": result.best_trial_id,
                "best_config": result.best.as_dict(),
                "best_objective": result.best_objective,
                "trials": len(result.trials),
                "elapsed_s": result.elapsed_s,
            }
        )
    )
    return EXIT_OK


# ----------------------------------------------------------------- cost ----

def cmd_cost(args: argparse.Namespace) -> int:
    try:
        if args.graph:
            report = cost.graph_cost(cost.load_graph(args.graph))
        else:
            if None in (args.res_channels, args.n_res, args.up_channels):
                raise cost.GraphError(
                    "either --graph or all of --res-channels/--n-res/--up-channels"
                )
            report = cost.hofvsr_cost(
                args.res_channels,
                args.n_res,
                args.up_channels,
                scale=args.scale,
                in_shape=_parse_input_shape(args.input),
            )
    except (cost.GraphError, SpaceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(report.to_json())
    return EXIT_OK


# --------------------------------------------------------------- report ----

def _read_logs(paths: list[str]):
    return [read_log(p) for p in paths]


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        logs = _read_logs(args.log)
    except (LogError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        if args.report_cmd == "top-k":
            trials = reporting.top_k(logs[0], args.k)
            _emit(reporting.top_k_csv(trials), args.out)
        elif args.report_cmd == "convergence":
            _emit(reporting.convergence_csv(logs[0]), args.out)
        elif args.report_cmd == "budget":
            _emit(reporting.budget_csv(reporting.budget_table(logs)), args.out)
        elif args.report_cmd == "scatter":
            points = reporting.scatter_points(
                logs, k=args.k, include_all=args.all, scale=args.scale,
                in_shape=_parse_input_shape(args.input),
            )
            _emit(reporting.scatter_csv(points), args.out)
            if args.svg:
                Path(args.svg).write_text(
                    reporting.scatter_svg(points), encoding="utf-8"
                )
        else:  # pareto
            points = reporting.scatter_points(
                logs, include_all=True, scale=args.scale,
                in_shape=_parse_input_shape(args.input),
            )
            front = reporting.pareto_front(points)
            _emit(reporting.scatter_csv(front), args.out)
    except (ValueError, KeyError, cost.GraphError, SpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


# ---------------------------------------------------------------- parser ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hofvsr",
        description="Hyper-parameter search engine for efficient VSR networks.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_space = sub.add_parser("space", help="inspect a search-space file")
    p_space.add_argument("space_cmd", choices=["size", "validate", "enumerate"])
    p_space.add_argument("--space", help="space JSON file (default: shipped space)")
    p_space.set_defaults(func=cmd_space)

    p_search = sub.add_parser("search", help="run a budgeted search")
    p_search.add_argument(
        "--config", help="JSON run-config supplying defaults for any search flag"
    )
    p_search.add_argument("--space", help="space JSON file (default: shipped space)")
    p_search.add_argument(
        "--sampler", choices=["random", "tpe", "smac"], default="tpe"
    )
    p_search.add_argument("--max-trials", type=int, default=40)
    p_search.add_argument("--epochs", type=int, default=20)
    p_search.add_argument(
        "--wall-clock", type=int, default=32 * 3600, help="limit in seconds"
    )
    p_search.add_argument("--seed", type=int, default=0)
    p_search.add_argument(
        "--evaluator", default="synthetic", help="'synthetic' or 'exec:<command>'"
    )
    p_search.add_argument("--out", help="trial log path (JSONL); required here or in --config")
    p_search.add_argument("--force", action="store_true", help="overwrite existing log")
    p_search.add_argument(
        "--resume", action="store_true", help="continue a truncated log at --out"
    )
    p_search.add_argument("--clock", choices=["simulated", "real"], default="simulated")
    p_search.add_argument("--aggregator", choices=["min", "last"], default="min")
    p_search.add_argument("--profile-seed", type=int, default=0)
    p_search.add_argument("--epoch-duration", type=float, default=240.0)
    p_search.add_argument("--duration-jitter", type=float, default=0.0)
    p_search.add_argument("--epoch-timeout", type=float, default=60.0)
    p_search.add_argument("--gamma", type=float, default=0.25)
    p_search.add_argument("--n-startup", type=int, default=8)
    p_search.add_argument("--n-candidates", type=int, default=24)
    p_search.add_argument("--smoothing", type=float, default=1.0)
    p_search.add_argument("--n-trees", type=int, default=10)
    p_search.add_argument("--smac-candidates", type=int, default=100)
    p_search.add_argument("--interleave-every", type=int, default=2)
    p_search.add_argument("--bootstrap-fraction", type=float, default=1.0)
    p_search.set_defaults(func=cmd_search)
    parser.search_parser = p_search  # for run-config defaults injection

    p_cost = sub.add_parser("cost", help="params/FLOPs report for a candidate")
    p_cost.add_argument("--res-channels", type=int)
    p_cost.add_argument("--n-res", type=int)
    p_cost.add_argument("--up-channels", type=int)
    p_cost.add_argument("--scale", type=int, default=4)
    p_cost.add_argument("--input", default="36x36x1x3", help="HxWxCxF")
    p_cost.add_argument("--graph", help="architecture JSON file instead of generator")
    p_cost.set_defaults(func=cmd_cost)

    p_report = sub.add_parser("report", help="derive analysis files from logs")
    p_report.add_argument(
        "report_cmd", choices=["top-k", "pareto", "convergence", "scatter", "budget"]
    )
    p_report.add_argument("--log", nargs="+", required=True)
    p_report.add_argument("--k", type=int, default=5)
    p_report.add_argument("--all", action="store_true", help="all completed trials")
    p_report.add_argument("--out", help="output file (default stdout)")
    p_report.add_argument("--svg", help="also render an SVG scatter")
    p_report.add_argument("--scale", type=int, default=4)
    p_report.add_argument("--input", default="36x36x1x3")
    p_report.set_defaults(func=cmd_report)

    return parser


def _apply_run_config(parser: argparse.ArgumentParser, args, argv) -> argparse.Namespace:
    """Re-parse with file-supplied defaults; explicit flags keep precedence."""
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SpaceError(f"run config {args.config}: {exc}") from None
    if not isinstance(doc, dict):
        raise SpaceError(f"run config {args.config}: must be a JSON object")
    known = set(vars(args)) - {"func", "cmd", "config"}
    unknown = set(doc) - known
    if unknown:
        raise SpaceError(
            f"run config {args.config}: unknown key(s): {sorted(unknown)}"
        )
    parser.search_parser.set_defaults(**doc)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            args = _apply_run_config(parser, args, argv)
        except SpaceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
