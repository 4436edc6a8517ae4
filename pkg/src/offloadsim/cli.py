"""Command-line interface: simulate, traffic, and histograms subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import reports
from .scenario import ScenarioError, load_scenario
from .telemetry import TelemetryError
from .wire import CodecError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="offloadsim",
        description="Deterministic edge/cloud task-offloading simulator and traffic model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="run a scenario and emit response-time reports")
    simulate.add_argument("--scenario", required=True, help="scenario name (fig5) or JSON file path")
    simulate.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    simulate.add_argument("--out", required=True, type=Path, help="output directory")
    simulate.add_argument("--trace", action="store_true", help="also write the full event trace CSV")
    simulate.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    traffic = sub.add_parser("traffic", help="emit the analytic metro/core traffic sweep")
    traffic.add_argument("--scenario", default="fig6", help="scenario supplying traffic parameters")
    traffic.add_argument("--out", required=True, type=Path, help="output directory")
    traffic.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    histograms = sub.add_parser("histograms", help="run a scenario and emit hop-delay histograms")
    histograms.add_argument("--scenario", required=True, help="scenario name (fig5) or JSON file path")
    histograms.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    histograms.add_argument("--out", required=True, type=Path, help="output directory")
    histograms.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            config = load_scenario(args.scenario)
            result, summary = reports.run_fig5(
                config,
                args.seed,
                args.out,
                make_plots=not args.no_plot,
                write_trace=args.trace,
            )
            print(f"simulated {result.tasks_created} tasks, {len(result.records)} records")
            print(f"outputs written to {args.out}")
        elif args.command == "traffic":
            config = load_scenario(args.scenario)
            rows = reports.run_fig6(config, args.out, make_plots=not args.no_plot)
            print(f"traffic sweep: {len(rows)} rows written to {args.out}")
        else:  # histograms
            config = load_scenario(args.scenario)
            rows = reports.run_histograms(config, args.seed, args.out, make_plots=not args.no_plot)
            print(f"histograms: {len(rows)} bins written to {args.out}")
    except (ScenarioError, TelemetryError, CodecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
