"""Scenario loading, execution, telemetry/summary output, and golden replay.

A scenario is a TOML document (or a built-in fixture name) declaring the
topology, plant parameters, policy, latencies, attacks, horizon, and seed.
Running one produces a CycleRecord list, a CSV telemetry stream (one row per
cycle per physical node, all electrical values quantized to 5 decimals), and a
JSON summary recomputable from the telemetry. Same scenario + same seed means
byte-identical telemetry, which golden replay relies on.
"""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

try:
    import tomllib  # type: ignore[import-not-found]
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from mgcps import fixtures
from mgcps.attacks import (
    AttackSpec,
    CommandInjection,
    MeasurementInjection,
    SequenceOverride,
)
from mgcps.errors import MgcpsError
from mgcps.messages import ControlCommand, CycleRecord
from mgcps.phasors import Phasor
from mgcps.pipeline import (
    LatencyConfig,
    LogicalClock,
    SequenceThresholdPolicy,
    World,
    run_cycle,
)
from mgcps.plant import PlantConfig, plant_init, validate_config
from mgcps.terminals import Terminal, TerminalRegistry, TerminalRole, register_terminal
from mgcps.topology import CoupledGraph, NodeKind, TopologySpec, build_graph


class ScenarioError(MgcpsError):
    pass


class ParseError(ScenarioError):
    pass


class ValidationError(ScenarioError):
    pass


class TraceMismatch(ScenarioError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: TopologySpec
    plant: PlantConfig
    horizon: int = 50
    dt: float = 1.0
    seed: int = 7
    policy_kind: str = "sequence-threshold"
    policy_params: Mapping[str, float] = field(default_factory=dict)
    attacks: AttackSpec = AttackSpec()
    latency: LatencyConfig = LatencyConfig()
    roster: Optional[TerminalRegistry] = None  # None = derive from topology
    telemetry_name: str = "telemetry.csv"
    summary_name: str = "summary.json"


@dataclass(frozen=True)
class RunSummary:
    scenario: str
    cycles_executed: int
    verdicts: tuple[tuple[str, ...], ...]
    first_fault_cycle: Optional[int]
    mismatch_count: int
    per_cycle_mismatches: tuple[int, ...]
    attack_windows: tuple[Mapping[str, Any], ...]
    sequence_stats: tuple[Mapping[str, Any], ...]

    def to_json(self) -> str:
        payload = {
            "scenario": self.scenario,
            "cycles_executed": self.cycles_executed,
            "verdicts": [list(v) for v in self.verdicts],
            "first_fault_cycle": self.first_fault_cycle,
            "mismatch_count": self.mismatch_count,
            "per_cycle_mismatches": list(self.per_cycle_mismatches),
            "attack_windows": [dict(w) for w in self.attack_windows],
            "sequence_stats": [dict(s) for s in self.sequence_stats],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


TELEMETRY_COLUMNS = (
    ["cycle", "node"]
    + [f"v_{p}_{q}" for p in "abc" for q in ("mag", "ang")]
    + [f"i_{p}_{q}" for p in "abc" for q in ("mag", "ang")]
    + [f"v_{s}_{q}" for s in ("pos", "neg", "zero") for q in ("mag", "ang")]
    + [f"i_{s}_{q}" for s in ("pos", "neg", "zero") for q in ("mag", "ang")]
    + ["perception_ts", "delivery_ts", "decision_ts", "command_ts"]
    + ["verdict", "issued", "applied"]
)


def build_roster(graph: CoupledGraph) -> TerminalRegistry:
    """The standard terminal roster for a topology.

    One perception terminal per physical unit, one control and one execution
    terminal per breaker-equipped load, and one central coordination terminal
    subscribed to every channel.
    """
    registry = TerminalRegistry()
    channels = []
    for node in graph.physical_nodes():
        subs = (f"{node.name}.voltage", f"{node.name}.current")
        channels.extend(subs)
        registry = register_terminal(
            registry,
            Terminal(
                terminal_id=f"perc-{node.name}",
                role=TerminalRole.PERCEPTION,
                function=f"sample {node.name}",
                subscriptions=subs,
            ),
        )
    for node in graph.load_nodes():
        registry = register_terminal(
            registry,
            Terminal(
                terminal_id=f"ctrl-{node.name}",
                role=TerminalRole.CONTROL,
                function=f"command {node.name} breaker",
                actions=(f"breaker:{node.name}",),
            ),
        )
        registry = register_terminal(
            registry,
            Terminal(
                terminal_id=f"exec-{node.name}",
                role=TerminalRole.EXECUTION,
                function=f"drive {node.name} breaker",
                actions=(f"breaker:{node.name}",),
            ),
        )
    registry = register_terminal(
        registry,
        Terminal(
            terminal_id="coord-mgmt",
            role=TerminalRole.COORDINATION,
            function="management system",
            subscriptions=tuple(channels),
            goals=("keep-grid-stable",),
            strategies=("sequence-threshold",),
        ),
    )
    return registry


def plant_config_for(topology: TopologySpec, plant_table: Mapping[str, Any]) -> PlantConfig:
    """Derive the plant roster from the topology and apply config numbers."""
    generators = tuple(
        name for name, kind in topology.nodes if kind is NodeKind.PHYSICAL_POWER
    )
    loads = tuple(
        name for name, kind in topology.nodes if kind is NodeKind.PHYSICAL_LOAD
    )
    order = tuple(name for name, kind in topology.nodes if kind.is_physical)
    known = {f.name for f in dataclasses.fields(PlantConfig)} - {
        "generators",
        "loads",
        "node_order",
    }
    params: dict[str, Any] = {}
    for key, value in plant_table.items():
        if key not in known:
            raise ValidationError(f"unknown plant parameter {key!r}")
        if key == "shed_weights" or key == "overrides":
            params[key] = dict(value)
        elif key == "transient_cycles":
            params[key] = int(value)
        else:
            params[key] = float(value)
    return PlantConfig(generators=generators, loads=loads, node_order=order, **params)


def _build_policy(scenario: Scenario) -> SequenceThresholdPolicy:
    if scenario.policy_kind != "sequence-threshold":
        raise ValidationError(f"unknown policy kind {scenario.policy_kind!r}")
    params = dict(scenario.policy_params)
    threshold = float(params.pop("threshold_pu", 1e-3))
    if params:
        raise ValidationError(f"unknown policy parameters {sorted(params)}")
    return SequenceThresholdPolicy(
        threshold_pu=threshold,
        base_current=scenario.plant.nominal_current,
        breaker_loads=frozenset(scenario.plant.loads),
    )


def validate_scenario(scenario: Scenario) -> CoupledGraph:
    """Full cross-reference validation; returns the built graph."""
    if scenario.horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {scenario.horizon}")
    if scenario.dt <= 0.0:
        raise ValidationError(f"dt must be > 0, got {scenario.dt}")
    try:
        graph = build_graph(scenario.topology)
    except MgcpsError as exc:
        raise ValidationError(f"topology: {exc}") from exc
    physical = {n.name for n in graph.physical_nodes()}
    loads = {n.name for n in graph.load_nodes()}
    if set(scenario.plant.node_order) != physical:
        raise ValidationError("plant node roster does not match the topology")
    try:
        validate_config(scenario.plant)
    except MgcpsError as exc:
        raise ValidationError(f"plant: {exc}") from exc
    for inj in scenario.attacks.measurement_injections:
        if inj.target not in physical:
            raise ValidationError(f"measurement injection targets unknown node {inj.target!r}")
    for inj in scenario.attacks.command_injections:
        if inj.capability == "breaker" and inj.target not in loads:
            raise ValidationError(f"command injection targets unknown breaker {inj.target!r}")
    _build_policy(scenario)
    for latency in dataclasses.astuple(scenario.latency):
        if latency < 1:
            raise ValidationError("stage latencies must be >= 1 microsecond")
    if scenario.roster is not None:
        _validate_roster(scenario.roster, physical)
    return graph


def _validate_roster(roster: TerminalRegistry, physical: set[str]) -> None:
    if not roster.with_role(TerminalRole.COORDINATION):
        raise ValidationError("terminal roster has no coordination terminal")
    for tid, term in sorted(roster.terminals.items()):
        for channel in term.subscriptions:
            node = channel.split(".", 1)[0]
            if node not in physical:
                raise ValidationError(
                    f"terminal {tid!r} subscribes to unknown node {node!r}"
                )
        for action in term.actions:
            node = action.split(":", 1)[-1]
            if node not in physical:
                raise ValidationError(
                    f"terminal {tid!r} actuates unknown node {node!r}"
                )


def run_scenario(scenario: Scenario) -> tuple[list[CycleRecord], "RunSummary"]:
    """Execute every cycle of the scenario and summarize the run."""
    graph = validate_scenario(scenario)
    registry = scenario.roster if scenario.roster is not None else build_roster(graph)
    world = World(
        graph=graph,
        plant=plant_init(scenario.plant, scenario.seed),
        plant_config=scenario.plant,
        registry=registry,
        policy=_build_policy(scenario),
        attacks=scenario.attacks,
        clock=LogicalClock(),
        latency=scenario.latency,
        dt=scenario.dt,
    )
    records = [run_cycle(world) for _ in range(scenario.horizon)]
    return records, summarize(scenario, records)


def _mismatches(
    issued: Sequence[ControlCommand], applied: Sequence[ControlCommand]
) -> int:
    """Applied commands whose (channel, value) never left a legitimate issuer."""
    legitimate = {(c.channel(), str(c.value)) for c in issued}
    return sum(1 for c in applied if (c.channel(), str(c.value)) not in legitimate)


def _stat_windows(scenario: Scenario) -> list[tuple[str, int, int]]:
    horizon = scenario.horizon
    windows: list[tuple[str, int, int]] = [("overall", 1, horizon)]
    starts = []
    for w in scenario.attacks.windows():
        start = max(1, int(w["start"]))
        end = int(w["end"]) if w["end"] is not None else horizon
        end = min(end, horizon)
        if start > horizon:
            continue
        windows.append((f"{w['kind']}:{w['target']}", start, end))
        starts.append(start)
    if starts and min(starts) > 1:
        windows.insert(1, ("baseline", 1, min(starts) - 1))
    return windows


def summarize(scenario: Scenario, records: Sequence[CycleRecord]) -> RunSummary:
    verdicts: list[tuple[str, ...]] = []
    per_cycle_mismatches: list[int] = []
    first_fault: Optional[int] = None
    for rec in records:
        suspects = tuple(
            sorted(d.verdict.suspected for d in rec.decisions if d.verdict.is_fault)
        )
        verdicts.append(suspects)
        if suspects and first_fault is None:
            first_fault = rec.cycle
        per_cycle_mismatches.append(
            _mismatches(rec.issued_commands, rec.applied_commands)
        )

    stats = []
    for label, start, end in _stat_windows(scenario):
        max_neg = 0.0
        max_zero = 0.0
        for rec in records:
            if not start <= rec.cycle <= end:
                continue
            for m in rec.measurements:
                max_neg = max(max_neg, m.current_seq.negative.magnitude)
                max_zero = max(max_zero, m.current_seq.zero.magnitude)
        stats.append(
            {
                "window": label,
                "start": start,
                "end": end,
                "max_negative_seq_current": max_neg,
                "max_zero_seq_current": max_zero,
            }
        )

    return RunSummary(
        scenario=scenario.name,
        cycles_executed=len(records),
        verdicts=tuple(verdicts),
        first_fault_cycle=first_fault,
        mismatch_count=sum(per_cycle_mismatches),
        per_cycle_mismatches=tuple(per_cycle_mismatches),
        attack_windows=tuple(scenario.attacks.windows()),
        sequence_stats=tuple(stats),
    )


def _fmt(value: float) -> str:
    return f"{value:.5f}"


def serialize_telemetry(records: Sequence[CycleRecord]) -> str:
    """Deterministic CSV rendering of a record stream."""
    buf = io.StringIO()
    buf.write(",".join(TELEMETRY_COLUMNS) + "\n")
    for rec in records:
        verdict_by_source: dict[str, str] = {}
        decision_ts_by_source: dict[str, int] = {}
        decision_by_node = {d.node: d for d in rec.decisions}
        for item in rec.delivered:
            decision = decision_by_node.get(item.destination)
            if decision is not None:
                verdict_by_source[item.payload.source] = str(decision.verdict)
                decision_ts_by_source[item.payload.source] = decision.decision_ts
        delivery_by_source = {d.payload.source: d.delivery_ts for d in rec.delivered}
        for m in rec.measurements:
            issued = sorted(
                c.render() for c in rec.issued_commands if c.target == m.source
            )
            applied = sorted(
                c.render() for c in rec.applied_commands if c.target == m.source
            )
            command_ts = [
                c.issue_ts for c in rec.issued_commands if c.target == m.source
            ]
            row = [str(rec.cycle), m.source]
            for ph in m.voltage.phasors():
                row += [_fmt(ph.magnitude), _fmt(ph.angle_deg)]
            for ph in m.current.phasors():
                row += [_fmt(ph.magnitude), _fmt(ph.angle_deg)]
            for seq in (m.voltage_seq, m.current_seq):
                for ph in (seq.positive, seq.negative, seq.zero):
                    row += [_fmt(ph.magnitude), _fmt(ph.angle_deg)]
            row.append(str(m.perception_ts))
            row.append(str(delivery_by_source.get(m.source, "")))
            row.append(str(decision_ts_by_source.get(m.source, "")))
            row.append(str(min(command_ts)) if command_ts else "")
            row.append(verdict_by_source.get(m.source, ""))
            row.append(";".join(issued))
            row.append(";".join(applied))
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def recompute_summary(csv_text: str, scenario: Scenario) -> RunSummary:
    """Rebuild the summary from telemetry alone (plus the scenario's attack
    declaration, which telemetry does not carry)."""
    lines = csv_text.strip("\n").split("\n")
    header = lines[0].split(",")
    idx = {name: k for k, name in enumerate(header)}
    rows = [line.split(",") for line in lines[1:]]

    by_cycle: dict[int, list[list[str]]] = {}
    for row in rows:
        by_cycle.setdefault(int(row[idx["cycle"]]), []).append(row)
    cycles = sorted(by_cycle)

    verdicts: list[tuple[str, ...]] = []
    per_cycle_mismatches: list[int] = []
    first_fault: Optional[int] = None
    for cycle in cycles:
        suspects = set()
        mismatches = 0
        for row in by_cycle[cycle]:
            verdict = row[idx["verdict"]]
            if verdict.startswith("FaultSuspected("):
                suspects.add(verdict[len("FaultSuspected(") : -1])
            issued = set(filter(None, row[idx["issued"]].split(";")))
            applied = set(filter(None, row[idx["applied"]].split(";")))
            mismatches += len(applied - issued)
        verdicts.append(tuple(sorted(suspects)))
        per_cycle_mismatches.append(mismatches)
        if suspects and first_fault is None:
            first_fault = cycle

    stats = []
    for label, start, end in _stat_windows(scenario):
        max_neg = 0.0
        max_zero = 0.0
        for cycle in cycles:
            if not start <= cycle <= end:
                continue
            for row in by_cycle[cycle]:
                max_neg = max(max_neg, float(row[idx["i_neg_mag"]]))
                max_zero = max(max_zero, float(row[idx["i_zero_mag"]]))
        stats.append(
            {
                "window": label,
                "start": start,
                "end": end,
                "max_negative_seq_current": max_neg,
                "max_zero_seq_current": max_zero,
            }
        )

    return RunSummary(
        scenario=scenario.name,
        cycles_executed=len(cycles),
        verdicts=tuple(verdicts),
        first_fault_cycle=first_fault,
        mismatch_count=sum(per_cycle_mismatches),
        per_cycle_mismatches=tuple(per_cycle_mismatches),
        attack_windows=tuple(scenario.attacks.windows()),
        sequence_stats=tuple(stats),
    )


# ---------------------------------------------------------------------------
# built-in fixtures

def _fixture_plant() -> PlantConfig:
    return plant_config_for(fixtures.fig6_topology(), {})


def fig6_baseline() -> Scenario:
    return Scenario(
        name=fixtures.FIG6_NAME,
        topology=fixtures.fig6_topology(),
        plant=_fixture_plant(),
        horizon=50,
    )


def scenario1_measurement_injection() -> Scenario:
    plant = _fixture_plant()
    return Scenario(
        name=fixtures.SCENARIO1_NAME,
        topology=fixtures.fig6_topology(),
        plant=plant,
        horizon=20,
        attacks=fixtures.scenario1_attack(plant.nominal_current),
    )


def scenario2_command_injection() -> Scenario:
    return Scenario(
        name=fixtures.SCENARIO2_NAME,
        topology=fixtures.fig6_topology(),
        plant=_fixture_plant(),
        horizon=30,
        attacks=fixtures.scenario2_attack(),
    )


FIXTURES = {
    fixtures.FIG6_NAME: fig6_baseline,
    fixtures.SCENARIO1_NAME: scenario1_measurement_injection,
    fixtures.SCENARIO2_NAME: scenario2_command_injection,
}


# ---------------------------------------------------------------------------
# scenario files

_KIND_NAMES = {kind.value: kind for kind in NodeKind}


def _parse_topology(table: Mapping[str, Any]) -> TopologySpec:
    if "fixture" in table:
        name = table["fixture"]
        if name != "fig6":
            raise ValidationError(f"unknown topology fixture {name!r}")
        return fixtures.fig6_topology()
    try:
        nodes = tuple(
            (str(name), _KIND_NAMES[str(kind)]) for name, kind in table["nodes"]
        )
        edges = tuple((str(a), str(b)) for a, b in table.get("edges", []))
        coupling = tuple((str(p), str(c)) for p, c in table.get("coupling", []))
    except KeyError as exc:
        raise ValidationError(f"topology: unknown node kind or missing field {exc}") from exc
    return TopologySpec(nodes=nodes, edges=edges, coupling=coupling)


def _parse_phasor(pair: Sequence[float]) -> Phasor:
    if len(pair) != 2:
        raise ValidationError(f"phasor must be [magnitude, angle], got {pair!r}")
    return Phasor(float(pair[0]), float(pair[1]))


_ROLE_NAMES = {role.value: role for role in TerminalRole}


def _parse_terminals(entries: Sequence[Mapping[str, Any]]) -> Optional[TerminalRegistry]:
    if not entries:
        return None
    registry = TerminalRegistry()
    for entry in entries:
        role_name = str(entry.get("role", ""))
        if role_name not in _ROLE_NAMES:
            raise ValidationError(f"unknown terminal role {role_name!r}")
        try:
            registry = register_terminal(
                registry,
                Terminal(
                    terminal_id=str(entry["id"]),
                    role=_ROLE_NAMES[role_name],
                    function=str(entry.get("function", "")),
                    goals=tuple(entry.get("goals", ())),
                    strategies=tuple(entry.get("strategies", ())),
                    actions=tuple(entry.get("actions", ())),
                    subscriptions=tuple(entry.get("subscriptions", ())),
                ),
            )
        except MgcpsError as exc:
            raise ValidationError(f"terminals: {exc}") from exc
    return registry


def _parse_attacks(table: Mapping[str, Any]) -> AttackSpec:
    measurement = []
    for entry in table.get("measurement", []):
        tamper = {}
        for cycle_str, override in entry.get("tamper", {}).items():
            tamper[int(cycle_str)] = SequenceOverride(
                positive=_parse_phasor(override["positive"]) if "positive" in override else None,
                negative=_parse_phasor(override["negative"]) if "negative" in override else None,
                zero=_parse_phasor(override["zero"]) if "zero" in override else None,
            )
        measurement.append(
            MeasurementInjection(
                target=str(entry["target"]),
                start_cycle=int(entry["start"]),
                end_cycle=int(entry["end"]) if "end" in entry else None,
                tamper=tamper,
                quantity=str(entry.get("quantity", "current")),
            )
        )
    command = []
    for entry in table.get("command", []):
        command.append(
            CommandInjection(
                target=str(entry["target"]),
                start_cycle=int(entry["start"]),
                capability=str(entry.get("capability", "breaker")),
                setpoint_delta=float(entry["delta"]) if "delta" in entry else None,
                override_value=entry.get("override"),
            )
        )
    return AttackSpec(
        measurement_injections=tuple(measurement),
        command_injections=tuple(command),
    )


def load_scenario(path_or_name: str | Path) -> Scenario:
    """Resolve a built-in fixture name, or parse + validate a TOML file."""
    key = str(path_or_name)
    if key in FIXTURES:
        scenario = FIXTURES[key]()
        validate_scenario(scenario)
        return scenario
    path = Path(path_or_name)
    if not path.exists():
        raise ParseError(f"{key!r} is neither a fixture name nor an existing file")
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc

    try:
        topology = _parse_topology(doc.get("topology", {}))
        plant = plant_config_for(topology, doc.get("plant", {}))
        latency_table = doc.get("latency", {})
        latency = LatencyConfig(
            perception_us=int(latency_table.get("perception_us", 100)),
            per_hop_us=int(latency_table.get("per_hop_us", 50)),
            decision_us=int(latency_table.get("decision_us", 200)),
            conversion_us=int(latency_table.get("conversion_us", 50)),
        )
        policy_table = doc.get("policy", {})
        output_table = doc.get("output", {})
        scenario = Scenario(
            name=str(doc.get("name", path.stem)),
            topology=topology,
            plant=plant,
            horizon=int(doc.get("horizon", 50)),
            dt=float(doc.get("dt", 1.0)),
            seed=int(doc.get("seed", 7)),
            policy_kind=str(policy_table.get("kind", "sequence-threshold")),
            policy_params={
                k: v for k, v in policy_table.items() if k != "kind"
            },
            attacks=_parse_attacks(doc.get("attacks", {})),
            latency=latency,
            roster=_parse_terminals(doc.get("terminals", ())),
            telemetry_name=str(output_table.get("telemetry", "telemetry.csv")),
            summary_name=str(output_table.get("summary", "summary.json")),
        )
    except (ParseError, ValidationError):
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"{path}: malformed scenario field: {exc}") from exc
    except MgcpsError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    validate_scenario(scenario)
    return scenario


def replay_golden(trace_path: str | Path, scenario: Scenario) -> str:
    """Regenerate telemetry and byte-compare against a stored trace.

    Returns the empty string on a perfect match; raises TraceMismatch naming
    the first differing row otherwise.
    """
    stored = Path(trace_path).read_text()
    records, _ = run_scenario(scenario)
    fresh = serialize_telemetry(records)
    if fresh == stored:
        return ""
    stored_lines = stored.split("\n")
    fresh_lines = fresh.split("\n")
    for k in range(max(len(stored_lines), len(fresh_lines))):
        old = stored_lines[k] if k < len(stored_lines) else "<missing>"
        new = fresh_lines[k] if k < len(fresh_lines) else "<missing>"
        if old != new:
            raise TraceMismatch(
                f"first difference at row {k}:\n  stored: {old}\n  fresh:  {new}"
            )
    raise TraceMismatch("traces differ in length only")
