"""Command-line entry point: ``simulate``, ``compare`` and ``geometry --selfcheck``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import export, harness, selfcheck
from .metrics import aggregate
from .model import ConfigError, ScenarioConfig
from .tracker import AlgoClass, ClampPolicy, Mode, TrackerConfig

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_SELFCHECK = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subtrace", description="Subspace tracking with a per-step stepsize limiter.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def experiment_args(p):
        p.add_argument("--config", required=True, type=Path, help="scenario file (key = value lines)")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--algo", choices=[a.value for a in AlgoClass], default="oja")
        p.add_argument("--mode", choices=[m.value for m in Mode], default="noise")
        p.add_argument("--beta", type=float, default=0.08)
        p.add_argument("--runs", type=int, default=100)
        p.add_argument("--burn-in", type=int, default=1000, help="steps ignored by spark detection")
        p.add_argument("--window", type=int, default=500, help="trailing median window for sparks")

    sim = sub.add_parser("simulate", help="run one tracker configuration")
    experiment_args(sim)
    sim.add_argument("--clamp", choices=["off", "generic", "class"], default="generic")

    cmp_ = sub.add_parser("compare", help="original vs amended on identical input streams")
    experiment_args(cmp_)

    geo = sub.add_parser("geometry", help="randomized checks of the update geometry")
    geo.add_argument("--selfcheck", action="store_true", required=True)
    geo.add_argument("--seed", type=int, default=0)
    geo.add_argument("-n", type=int, default=10_000, help="instances per check")
    return parser


def _spec(args, clamp: str = "generic") -> harness.ExperimentSpec:
    scenario = ScenarioConfig.from_file(args.config)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    tracker = TrackerConfig(AlgoClass(args.algo), Mode(args.mode), args.beta, ClampPolicy(clamp))
    return harness.ExperimentSpec(
        scenario=scenario, tracker=tracker, n_runs=args.runs,
        burn_in=args.burn_in, spark_window=args.window, output_path=args.out,
    )


def _simulate(args) -> int:
    spec = _spec(args, args.clamp)
    runs = harness.run_arm(spec)
    series = aggregate(runs)
    args.out.mkdir(parents=True, exist_ok=True)
    export.export_csv(series, args.out / "simulate.csv")
    export.export_series_plot(series, args.out / "simulate.svg", spec.scenario.break_step)
    sparks = harness.find_sparks(spec, runs)
    ss = harness.steady_state_db(series, spec.scenario.break_step, spec.spark_window)
    print(f"runs={spec.n_runs} steps={spec.scenario.n_steps} clamp={args.clamp}")
    print(f"sparks={len(sparks)} steady_state_db={ss:.3f}")
    return EXIT_OK


def _compare(args) -> int:
    spec = _spec(args)
    report = harness.run_comparison(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    export.export_csv(report, args.out / "compare.csv")
    export.export_plot(report, args.out / "compare.svg")
    runs_with = lambda ev: len({e.run_index for e in ev})
    print(f"runs={spec.n_runs} steps={spec.scenario.n_steps} algo={args.algo} mode={args.mode} beta={args.beta}")
    for arm, ev in (("original", report.sparks_original), ("amended", report.sparks_amended)):
        print(
            f"{arm:<9} sparks={len(ev):<6} runs_with_sparks={runs_with(ev):<4} "
            f"steady_state_db={report.steady_state_db[arm]:.3f}"
        )
    return EXIT_OK


def _geometry(args) -> int:
    results = selfcheck.run_all(seed=args.seed, n=args.n)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("selfcheck passed" if ok else "selfcheck FAILED")
    return EXIT_OK if ok else EXIT_SELFCHECK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"simulate": _simulate, "compare": _compare, "geometry": _geometry}[args.command]
    try:
        return handler(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        if getattr(args, "config", None) is not None and Path(exc.filename or "") == args.config:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
