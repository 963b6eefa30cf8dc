#!/usr/bin/env python3
"""Run the three built-in fixtures and print a compact comparison table.

Writes telemetry + summary for each fixture under --out (default ./out) and
prints, per scenario: the first fault-flag cycle, total issued-vs-applied
mismatches, and the max tampered sequence magnitudes per reporting window.
"""

import argparse
from pathlib import Path

from mgcps.scenario import FIXTURES, load_scenario, run_scenario, serialize_telemetry


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override every seed")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for name in sorted(FIXTURES):
        scenario = load_scenario(name)
        if args.seed is not None:
            import dataclasses

            scenario = dataclasses.replace(scenario, seed=args.seed)
        records, summary = run_scenario(scenario)
        (out_dir / f"{name}.csv").write_text(serialize_telemetry(records))
        (out_dir / f"{name}.json").write_text(summary.to_json())

        fault = summary.first_fault_cycle
        print(f"\n=== {name} ({summary.cycles_executed} cycles, seed {scenario.seed})")
        print(f"  first fault flag : {fault if fault is not None else '-'}")
        print(f"  mismatches       : {summary.mismatch_count}")
        for window in summary.sequence_stats:
            print(
                f"  {window['window']:<24} cycles {window['start']:>3}-{window['end']:<3}"
                f"  max|neg| {window['max_negative_seq_current']:.5f}"
                f"  max|zero| {window['max_zero_seq_current']:.5f}"
            )
    print(f"\ntelemetry and summaries written to {out_dir}/")


if __name__ == "__main__":
    main()
