#!/usr/bin/env python3
"""Regenerate the committed golden telemetry traces for the built-in fixtures.

Run only when an intentional behavior change invalidates the old traces; the
diff should then be reviewed like any other behavior change.
"""

from pathlib import Path

from mgcps.scenario import FIXTURES, load_scenario, run_scenario, serialize_telemetry

GOLDEN_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main() -> None:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    for name in sorted(FIXTURES):
        records, summary = run_scenario(load_scenario(name))
        path = GOLDEN_DIR / f"{name}.csv"
        path.write_text(serialize_telemetry(records))
        print(f"{path}  ({summary.cycles_executed} cycles)")


if __name__ == "__main__":
    main()
