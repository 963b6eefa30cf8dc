"""Command-line front end.

Exit codes: 0 success, 1 parse/validation error, 2 golden-trace mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from mgcps.scenario import (
    FIXTURES,
    ParseError,
    TraceMismatch,
    ValidationError,
    load_scenario,
    replay_golden,
    run_scenario,
    serialize_telemetry,
    validate_scenario,
)
from mgcps.topology import adjacency_matrix, build_graph


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgcps",
        description="Deterministic microgrid cyber-physical co-simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario, write telemetry + summary")
    p_run.add_argument("scenario", help="fixture name or path to a scenario file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the seed")

    p_matrix = sub.add_parser("matrix", help="print the adjacency matrix as CSV")
    p_matrix.add_argument("scenario", help="fixture name or path to a scenario file")

    p_replay = sub.add_parser("replay", help="byte-compare a golden telemetry trace")
    p_replay.add_argument("scenario", help="fixture name or path to a scenario file")
    p_replay.add_argument("trace", help="path to the stored telemetry CSV")

    sub.add_parser("list-fixtures", help="print the built-in scenario names")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
        validate_scenario(scenario)
    records, summary = run_scenario(scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    telemetry_path = out_dir / scenario.telemetry_name
    summary_path = out_dir / scenario.summary_name
    telemetry_path.write_text(serialize_telemetry(records))
    summary_path.write_text(summary.to_json())
    fault = summary.first_fault_cycle
    print(f"{scenario.name}: {summary.cycles_executed} cycles")
    print(f"  first fault flag: {fault if fault is not None else 'none'}")
    print(f"  issued-vs-applied mismatches: {summary.mismatch_count}")
    print(f"  telemetry: {telemetry_path}")
    print(f"  summary:   {summary_path}")
    return 0


def _cmd_matrix(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    matrix = adjacency_matrix(build_graph(scenario.topology))
    sys.stdout.write(matrix.to_csv())
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    replay_golden(args.trace, scenario)
    print(f"{args.trace}: matches {scenario.name}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "matrix":
            return _cmd_matrix(args)
        if args.command == "replay":
            return _cmd_replay(args)
        if args.command == "list-fixtures":
            for name in sorted(FIXTURES):
                print(name)
            return 0
    except TraceMismatch as exc:
        print(f"trace mismatch: {exc}", file=sys.stderr)
        return 2
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
