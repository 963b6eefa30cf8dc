import csv
import dataclasses
import io
import json

import pytest

from mgcps.cli import main as cli_main
from mgcps.fixtures import SCENARIO1_ONSET, SCENARIO2_ONSET
from mgcps.scenario import (
    FIXTURES,
    ParseError,
    TraceMismatch,
    ValidationError,
    load_scenario,
    recompute_summary,
    replay_golden,
    run_scenario,
    serialize_telemetry,
    validate_scenario,
)


def rows_of(records):
    return list(csv.DictReader(io.StringIO(serialize_telemetry(records))))


def node_rows(rows, node):
    return [r for r in rows if r["node"] == node]


@pytest.fixture(scope="module")
def baseline_run():
    return run_scenario(load_scenario("fig6-baseline"))


@pytest.fixture(scope="module")
def scenario1_run():
    return run_scenario(load_scenario("scenario1-measurement-injection"))


@pytest.fixture(scope="module")
def scenario2_run():
    return run_scenario(load_scenario("scenario2-command-injection"))


def test_fixture_names_resolve():
    assert sorted(FIXTURES) == [
        "fig6-baseline",
        "scenario1-measurement-injection",
        "scenario2-command-injection",
    ]
    for name in FIXTURES:
        scenario = load_scenario(name)
        assert scenario.name == name


def test_scenario1_fixture_shape():
    scenario = load_scenario("scenario1-measurement-injection")
    assert scenario.horizon == 20
    (injection,) = scenario.attacks.measurement_injections
    assert injection.target == "load2"
    assert injection.start_cycle == SCENARIO1_ONSET == 11
    assert injection.end_cycle == 20
    assert sorted(injection.tamper) == list(range(11, 21))


def test_baseline_run_is_quiet(baseline_run):
    records, summary = baseline_run
    assert summary.cycles_executed == 50
    assert summary.first_fault_cycle is None
    assert summary.mismatch_count == 0
    assert all(v == () for v in summary.verdicts)
    # the closed loop stays quiet: not a single command over the horizon
    assert all(r.issued_commands == () for r in records)
    assert all(r.applied_commands == () for r in records)
    # and the plant's true signature never drifts from balanced
    for record in records:
        for seq in record.truth_current_seq.values():
            assert seq.negative.magnitude <= 1e-6
            assert seq.zero.magnitude <= 1e-6
    overall = summary.sequence_stats[0]
    assert overall["window"] == "overall"
    assert overall["max_negative_seq_current"] == 0.0
    assert overall["max_zero_seq_current"] == 0.0


def test_scenario1_first_fault_cycle(scenario1_run):
    _, summary = scenario1_run
    assert summary.first_fault_cycle == 11
    for cycle, verdicts in enumerate(summary.verdicts, start=1):
        assert verdicts == ((("load2",)) if cycle >= 11 else ())
    assert summary.mismatch_count == 0  # the fooled agent issued its own command


def test_scenario2_mismatch_and_shed(scenario2_run):
    records, summary = scenario2_run
    onset = SCENARIO2_ONSET
    for cycle, count in enumerate(summary.per_cycle_mismatches, start=1):
        assert (count > 0) == (cycle >= onset)
    rows = rows_of(records)
    for row in node_rows(rows, "load2"):
        cycle = int(row["cycle"])
        if cycle >= onset + 1:
            assert float(row["i_a_mag"]) == 0.0
        if cycle >= onset:
            assert row["applied"] == "breaker:load2=open"
            assert row["issued"] == ""


def test_summary_recomputable_from_telemetry(baseline_run, scenario1_run, scenario2_run):
    for name, (records, summary) in zip(
        ("fig6-baseline", "scenario1-measurement-injection", "scenario2-command-injection"),
        (baseline_run, scenario1_run, scenario2_run),
    ):
        scenario = load_scenario(name)
        recomputed = recompute_summary(serialize_telemetry(records), scenario)
        assert recomputed == summary


def test_telemetry_is_byte_deterministic():
    scenario = load_scenario("scenario1-measurement-injection")
    first = serialize_telemetry(run_scenario(scenario)[0])
    second = serialize_telemetry(run_scenario(scenario)[0])
    assert first == second


def test_replay_golden_round_trip(tmp_path):
    scenario = load_scenario("fig6-baseline")
    records, _ = run_scenario(scenario)
    trace = tmp_path / "trace.csv"
    trace.write_text(serialize_telemetry(records))
    assert replay_golden(trace, scenario) == ""
    perturbed = dataclasses.replace(scenario, seed=scenario.seed + 1)
    with pytest.raises(TraceMismatch, match="row"):
        replay_golden(trace, perturbed)


def test_validation_errors():
    scenario = load_scenario("fig6-baseline")
    with pytest.raises(ValidationError, match="horizon"):
        validate_scenario(dataclasses.replace(scenario, horizon=0))
    with pytest.raises(ValidationError, match="dt"):
        validate_scenario(dataclasses.replace(scenario, dt=0.0))
    with pytest.raises(ValidationError, match="policy"):
        validate_scenario(dataclasses.replace(scenario, policy_kind="oracle"))


def test_load_scenario_missing_and_malformed(tmp_path):
    with pytest.raises(ParseError):
        load_scenario("no-such-fixture")
    bad = tmp_path / "bad.toml"
    bad.write_text("horizon = [unclosed\n")
    with pytest.raises(ParseError):
        load_scenario(bad)
    invalid = tmp_path / "invalid.toml"
    invalid.write_text(
        """
horizon = 0
[topology]
fixture = "fig6"
"""
    )
    with pytest.raises(ValidationError, match="horizon"):
        load_scenario(invalid)


SCENARIO_TOML = """
name = "mini"
horizon = 12
seed = 3

[topology]
nodes = [
    ["gen", "physical_power"],
    ["town", "physical_load"],
    ["hub", "cyber_transmission"],
    ["agent-gen", "cyber_core"],
    ["agent-town", "cyber_core"],
]
edges = [
    ["gen", "hub"],
    ["town", "hub"],
    ["agent-gen", "agent-town"],
]
coupling = [["gen", "agent-gen"], ["town", "agent-town"]]

[plant]
nominal_voltage = 230.0
nominal_current = 1.5
noise_voltage = 0.001

[policy]
kind = "sequence-threshold"
threshold_pu = 0.002

[latency]
perception_us = 10
per_hop_us = 5
decision_us = 20
conversion_us = 5

[[attacks.measurement]]
target = "town"
start = 4
end = 6
[attacks.measurement.tamper.4]
negative = [0.6, 150.0]
zero = [0.6, -60.0]
[attacks.measurement.tamper.5]
negative = [0.6, 151.0]
zero = [0.6, -61.0]

[[attacks.command]]
target = "town"
start = 9
override = "open"

[output]
telemetry = "mini.csv"
summary = "mini.json"
"""


def test_scenario_file_round_trip(tmp_path):
    path = tmp_path / "mini.toml"
    path.write_text(SCENARIO_TOML)
    scenario = load_scenario(path)
    assert scenario.name == "mini"
    assert scenario.plant.nominal_voltage == 230.0
    assert scenario.latency.per_hop_us == 5
    records, summary = run_scenario(scenario)
    assert summary.cycles_executed == 12
    assert summary.first_fault_cycle == 4
    rows = node_rows(rows_of(records), "town")
    # while the injection is live the attacker's fiction masks the shed load;
    # once it ends (cycle 7+) the visible current drops to the true zero
    assert float(rows[4]["i_neg_mag"]) == 0.6
    assert float(rows[4]["i_a_mag"]) > 0.0
    assert records[4].truth_current_seq["town"].positive.magnitude == 0.0
    assert float(rows[6]["i_a_mag"]) == 0.0
    assert summary.mismatch_count > 0


ROSTER_TOML = """
horizon = 3

[topology]
fixture = "fig6"

[[terminals]]
id = "watch-load2"
role = "perception"
subscriptions = ["load2.current"]

[[terminals]]
id = "mgmt"
role = "coordination"
function = "central coordinator"
subscriptions = ["load2.current"]

[[terminals]]
id = "trip-load2"
role = "control"
actions = ["breaker:load2"]
"""


def test_explicit_terminal_roster(tmp_path):
    path = tmp_path / "roster.toml"
    path.write_text(ROSTER_TOML)
    scenario = load_scenario(path)
    assert scenario.roster is not None
    assert len(scenario.roster) == 3
    records, _ = run_scenario(scenario)
    measures = [t for t in records[0].tasks if t.kind == "measure"]
    assert [t.target for t in measures] == ["watch-load2"]

    bad = tmp_path / "bad-roster.toml"
    bad.write_text(ROSTER_TOML.replace("load2.current", "ghost.current"))
    with pytest.raises(ValidationError, match="ghost"):
        load_scenario(bad)
    no_coord = tmp_path / "no-coord.toml"
    no_coord.write_text(ROSTER_TOML.replace('role = "coordination"', 'role = "perception"'))
    with pytest.raises(ValidationError, match="coordination"):
        load_scenario(no_coord)


def test_cli_run_and_replay(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli_main(["run", "fig6-baseline", "--out", str(out)]) == 0
    telemetry = out / "telemetry.csv"
    summary_file = out / "summary.json"
    assert telemetry.exists() and summary_file.exists()
    summary = json.loads(summary_file.read_text())
    assert summary["cycles_executed"] == 50
    assert summary["first_fault_cycle"] is None
    capsys.readouterr()

    assert cli_main(["replay", "fig6-baseline", str(telemetry)]) == 0
    captured = capsys.readouterr()
    assert "matches" in captured.out

    assert cli_main(["run", "fig6-baseline", "--out", str(out), "--seed", "8"]) == 0
    capsys.readouterr()
    assert cli_main(["replay", "fig6-baseline", str(telemetry)]) == 2
    assert "mismatch" in capsys.readouterr().err


def test_cli_matrix_and_list(capsys):
    assert cli_main(["matrix", "fig6-baseline"]) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert len(lines) == 15
    assert lines[0] == "1,0,0,0,0,0,1,0,0,1,0,0,0,0,0"

    assert cli_main(["list-fixtures"]) == 0
    assert "scenario1-measurement-injection" in capsys.readouterr().out


def test_cli_validation_exit_code(tmp_path, capsys):
    invalid = tmp_path / "broken.toml"
    invalid.write_text("horizon = 0\n[topology]\nfixture = \"fig6\"\n")
    assert cli_main(["run", str(invalid)]) == 1
    assert "error" in capsys.readouterr().err
