"""The closed-loop operating cycle: perceive, communicate, decide, control.

One run_cycle call takes the world through all four stages exactly once.
Stage latencies advance a single global logical clock (microseconds), so every
causal chain is strictly ordered: perception < delivery < decision < command.
Attack hooks sit on the perception output (uplink) and the actuation input
(downlink); agents only ever see the post-hook data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from mgcps.attacks import AttackSpec, inject_phantom_command, tamper_downlink, tamper_uplink
from mgcps.errors import MgcpsError
from mgcps.messages import (
    NO_FAULT,
    CommandProposal,
    ControlCommand,
    CycleRecord,
    DeliveredData,
    Decision,
    Measurement,
    Verdict,
)
from mgcps.phasors import quantize_sequence, quantize_three_phase, to_sequence
from mgcps.plant import (
    BreakerCommand,
    PlantConfig,
    PlantState,
    UnknownActuator,
    plant_advance,
    plant_measure,
)
from mgcps.terminals import (
    CycleState,
    PendingCommand,
    TerminalRegistry,
    apply_assignments,
    coordinate_tasks,
    record_feedback,
)
from mgcps.topology import CoupledGraph, NodeKind, bfs_shortest_path, cyber_subgraph


class PipelineError(MgcpsError):
    pass


class Unreachable(PipelineError):
    pass


class EmptyInputs(PipelineError):
    pass


class StageFailure(PipelineError):
    """A stage error annotated with the stage name and cycle number."""


@dataclass
class LogicalClock:
    now: int = 0

    def advance_to(self, t: int) -> None:
        if t > self.now:
            self.now = t


@dataclass(frozen=True)
class LatencyConfig:
    perception_us: int = 100
    per_hop_us: int = 50
    decision_us: int = 200
    conversion_us: int = 50


class DecisionPolicy(Protocol):
    def evaluate(
        self, inputs: Sequence[DeliveredData]
    ) -> tuple[Verdict, tuple[CommandProposal, ...]]: ...


@dataclass(frozen=True)
class SequenceThresholdPolicy:
    """Reference rule: flag a fault when negative- or zero-sequence current
    magnitude exceeds a per-unit threshold; propose opening the breaker of a
    suspected load."""

    threshold_pu: float = 1e-3
    base_current: float = 0.81
    breaker_loads: frozenset[str] = frozenset()

    def evaluate(
        self, inputs: Sequence[DeliveredData]
    ) -> tuple[Verdict, tuple[CommandProposal, ...]]:
        limit = self.threshold_pu * self.base_current
        for item in sorted(inputs, key=lambda d: d.payload.source):
            seq = item.payload.current_seq
            if seq.negative.magnitude > limit or seq.zero.magnitude > limit:
                suspect = item.payload.source
                proposals: tuple[CommandProposal, ...] = ()
                if suspect in self.breaker_loads:
                    proposals = (CommandProposal(suspect, "breaker", "open"),)
                return Verdict(suspect), proposals
        return NO_FAULT, ()


def perceive(
    plant: PlantState,
    graph: CoupledGraph,
    clock: LogicalClock,
    latency: LatencyConfig = LatencyConfig(),
    decimals: int = 5,
) -> tuple[Measurement, ...]:
    """Sample every physical node into a quantized measurement record."""
    ts = clock.now + latency.perception_us
    cycle = plant.cycle + 1
    out = []
    for node in graph.physical_nodes():
        voltage, current = plant_measure(plant, node.name)
        voltage = quantize_three_phase(voltage, decimals)
        current = quantize_three_phase(current, decimals)
        out.append(
            Measurement(
                source=node.name,
                source_index=node.index,
                cycle=cycle,
                voltage=voltage,
                current=current,
                voltage_seq=quantize_sequence(to_sequence(voltage), decimals),
                current_seq=quantize_sequence(to_sequence(current), decimals),
                perception_ts=ts,
            )
        )
    return tuple(out)


def communicate(
    measurement: Measurement,
    graph: CoupledGraph,
    destination: int,
    latency_per_hop_us: int = 50,
) -> DeliveredData:
    """Route a measurement over the cyber subgraph to a core node.

    The path starts at the source's coupled core node and follows the
    shortest cyber route (ties to the smallest next hop). Delivery time is the
    perception time plus the per-hop latency times the node count of the path,
    so even a self-delivery takes one hop's worth of time.
    """
    dest_node = graph.node(destination)
    if dest_node.kind is not NodeKind.CYBER_CORE:
        raise Unreachable(f"destination {dest_node.name!r} is not a core node")
    entry = graph.coupled_core(measurement.source_index)
    sub = cyber_subgraph(graph)
    path = bfs_shortest_path(sub, entry, destination)
    if path is None:
        raise Unreachable(
            f"no cyber path from {graph.node(entry).name!r} to {dest_node.name!r}"
        )
    return DeliveredData(
        destination=dest_node.name,
        destination_index=destination,
        payload=measurement,
        hop_path=tuple(path),
        delivery_ts=measurement.perception_ts + latency_per_hop_us * len(path),
    )


def decide(
    core_node: str,
    inputs: Sequence[DeliveredData],
    policy: DecisionPolicy,
    decision_latency_us: int = 200,
) -> Decision:
    """Apply the decision policy to everything delivered to one core node."""
    if not inputs:
        raise EmptyInputs(f"core node {core_node!r} has no delivered data")
    for item in inputs:
        if item.destination != core_node:
            raise ValueError(
                f"input for {item.destination!r} handed to {core_node!r}"
            )
    verdict, proposals = policy.evaluate(inputs)
    return Decision(
        node=core_node,
        cycle=inputs[0].payload.cycle,
        verdict=verdict,
        proposals=proposals,
        decision_ts=max(i.delivery_ts for i in inputs) + decision_latency_us,
    )


def control_convert(
    decision: Decision, conversion_latency_us: int = 50
) -> tuple[ControlCommand, ...]:
    """One command per proposal, ordered by target then capability."""
    commands = [
        ControlCommand(
            target=p.target_node,
            capability=p.capability,
            value=p.value,
            cycle=decision.cycle,
            issue_ts=decision.decision_ts + conversion_latency_us,
            issuing_node=decision.node,
        )
        for p in decision.proposals
    ]
    return tuple(sorted(commands, key=lambda c: (c.target, c.capability)))


def actuate(
    commands: Sequence[ControlCommand],
    plant: PlantState,
    config: PlantConfig,
    dt: float = 1.0,
) -> PlantState:
    """Apply commands to the plant; non-breaker capabilities are unknown here."""
    breaker_cmds = []
    for cmd in commands:
        if cmd.capability != "breaker":
            raise UnknownActuator(f"no actuator for capability {cmd.capability!r}")
        breaker_cmds.append(BreakerCommand(cmd.target, str(cmd.value)))
    return plant_advance(plant, breaker_cmds, config, dt)


@dataclass
class World:
    """Everything one run owns. Mutated only by run_cycle."""

    graph: CoupledGraph
    plant: PlantState
    plant_config: PlantConfig
    registry: TerminalRegistry
    policy: DecisionPolicy
    attacks: AttackSpec = AttackSpec()
    clock: LogicalClock = field(default_factory=LogicalClock)
    latency: LatencyConfig = LatencyConfig()
    dt: float = 1.0
    decimals: int = 5

    @property
    def next_cycle(self) -> int:
        return self.plant.cycle + 1


def run_cycle(world: World) -> CycleRecord:
    """Drive the world through one full operating cycle and record it."""
    cycle = world.next_cycle
    stage = "perceive"
    try:
        truth_v = {
            n.name: to_sequence(world.plant.voltages[n.name])
            for n in world.graph.physical_nodes()
        }
        truth_i = {
            n.name: to_sequence(world.plant.currents[n.name])
            for n in world.graph.physical_nodes()
        }
        breakers_before = dict(world.plant.breakers)
        raw = perceive(world.plant, world.graph, world.clock, world.latency, world.decimals)

        stage = "uplink-attack"
        measurements = tuple(
            tamper_uplink(m, world.attacks, cycle, world.decimals) for m in raw
        )

        stage = "communicate"
        delivered = tuple(
            communicate(
                m,
                world.graph,
                world.graph.coupled_core(m.source_index),
                world.latency.per_hop_us,
            )
            for m in measurements
        )

        stage = "decide"
        by_core: dict[str, list[DeliveredData]] = {}
        for item in delivered:
            by_core.setdefault(item.destination, []).append(item)
        decisions = tuple(
            decide(core, tuple(items), world.policy, world.latency.decision_us)
            for core, items in sorted(by_core.items())
        )

        stage = "coordinate"
        pending = tuple(
            PendingCommand(p.target_node, p.capability, p.value, d.node)
            for d in decisions
            for p in d.proposals
        )
        statuses = {
            tid: term.status for tid, term in sorted(world.registry.terminals.items())
        }
        tasks = coordinate_tasks(
            world.registry, CycleState(cycle, statuses, pending)
        )
        world.registry = apply_assignments(world.registry, tasks)

        stage = "control-convert"
        issued = tuple(
            cmd
            for d in decisions
            for cmd in control_convert(d, world.latency.conversion_us)
        )

        stage = "downlink-attack"
        applied = [tamper_downlink(cmd, world.attacks, cycle) for cmd in issued]
        if applied:
            phantom_ts = max(c.issue_ts for c in applied) + 1
        elif decisions:
            phantom_ts = (
                max(d.decision_ts for d in decisions) + world.latency.conversion_us + 1
            )
        else:
            phantom_ts = world.clock.now + 1
        applied += list(
            inject_phantom_command(
                world.attacks,
                cycle,
                covered={c.channel() for c in applied},
                issue_ts=phantom_ts,
            )
        )

        stage = "actuate"
        world.plant = actuate(applied, world.plant, world.plant_config, world.dt)

        stage = "feedback"
        for task in tasks:
            world.registry = record_feedback(
                world.registry, task.target, {"task": task.task_id, "status": "ok"}
            )

        high_water = [m.perception_ts for m in measurements]
        high_water += [d.delivery_ts for d in delivered]
        high_water += [d.decision_ts for d in decisions]
        high_water += [c.issue_ts for c in issued + tuple(applied)]
        world.clock.advance_to(max(high_water, default=world.clock.now))

        return CycleRecord(
            cycle=cycle,
            measurements=measurements,
            delivered=delivered,
            tasks=tasks,
            decisions=decisions,
            issued_commands=issued,
            applied_commands=tuple(applied),
            truth_current_seq=truth_i,
            truth_voltage_seq=truth_v,
            breakers_before=breakers_before,
            breakers_after=dict(world.plant.breakers),
            plant_after=world.plant,
        )
    except MgcpsError as exc:
        raise StageFailure(f"cycle {cycle}, stage {stage}: {exc}") from exc
