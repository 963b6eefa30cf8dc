"""Built-in topologies and scenarios.

The reference microgrid has six physical units (a generator/load pair per
feeder), three meshed routers each serving one feeder pair, and six fully
meshed agent nodes, one coupled to each physical unit. The two attack
scenarios target load2 / its agent: the measurement-injection scenario
overrides the negative- and zero-sequence current of load2's uplink for ten
cycles; the command-injection scenario forces a breaker-open on load2's
downlink from its onset cycle onward.
"""

from __future__ import annotations

from mgcps.attacks import (
    AttackSpec,
    CommandInjection,
    MeasurementInjection,
    SequenceOverride,
)
from mgcps.phasors import Phasor
from mgcps.topology import NodeKind, TopologySpec

FIG6_NAME = "fig6-baseline"
SCENARIO1_NAME = "scenario1-measurement-injection"
SCENARIO2_NAME = "scenario2-command-injection"

# measurement-injection schedule: cycle -> (negative-seq angle, zero-seq angle)
TAMPERED_SEQUENCE_ANGLES: dict[int, tuple[float, float]] = {
    11: (165.00611, -58.24689),
    12: (171.64097, -49.97911),
    13: (172.59208, -50.25413),
    14: (173.92134, -52.28240),
    15: (171.90453, -53.77782),
    16: (171.32011, -52.27094),
    17: (170.54089, -51.25680),
    18: (166.54737, -56.04673),
    19: (169.71583, -50.52342),
    20: (168.32354, -54.87790),
}

SCENARIO1_ONSET = 11
SCENARIO1_END = 20
SCENARIO2_ONSET = 15

# tampered sequence magnitude, in per-unit of nominal current; the tamper
# schedule above pins angles only, so the magnitude is a fixture parameter
TAMPER_MAGNITUDE_PU = 0.4


def fig6_topology() -> TopologySpec:
    """Six physical units, three routers, six agents; 15x15 adjacency."""
    nodes = (
        ("dg1", NodeKind.PHYSICAL_POWER),
        ("load1", NodeKind.PHYSICAL_LOAD),
        ("dg2", NodeKind.PHYSICAL_POWER),
        ("load2", NodeKind.PHYSICAL_LOAD),
        ("dg3", NodeKind.PHYSICAL_POWER),
        ("load3", NodeKind.PHYSICAL_LOAD),
        ("router1", NodeKind.CYBER_TRANSMISSION),
        ("router2", NodeKind.CYBER_TRANSMISSION),
        ("router3", NodeKind.CYBER_TRANSMISSION),
        ("agent1", NodeKind.CYBER_CORE),
        ("agent2", NodeKind.CYBER_CORE),
        ("agent3", NodeKind.CYBER_CORE),
        ("agent4", NodeKind.CYBER_CORE),
        ("agent5", NodeKind.CYBER_CORE),
        ("agent6", NodeKind.CYBER_CORE),
    )
    feeders = (
        ("dg1", "router1"),
        ("load1", "router1"),
        ("dg2", "router2"),
        ("load2", "router2"),
        ("dg3", "router3"),
        ("load3", "router3"),
    )
    router_mesh = (
        ("router1", "router2"),
        ("router1", "router3"),
        ("router2", "router3"),
    )
    agents = [f"agent{k}" for k in range(1, 7)]
    agent_mesh = tuple(
        (agents[i], agents[j]) for i in range(6) for j in range(i + 1, 6)
    )
    physical = ("dg1", "load1", "dg2", "load2", "dg3", "load3")
    coupling = tuple((phys, agents[k]) for k, phys in enumerate(physical))
    return TopologySpec(
        nodes=nodes,
        edges=feeders + router_mesh + agent_mesh,
        coupling=coupling,
    )


def scenario1_attack(nominal_current: float) -> AttackSpec:
    magnitude = TAMPER_MAGNITUDE_PU * nominal_current
    tamper = {
        cycle: SequenceOverride(
            negative=Phasor(magnitude, neg_angle),
            zero=Phasor(magnitude, zero_angle),
        )
        for cycle, (neg_angle, zero_angle) in TAMPERED_SEQUENCE_ANGLES.items()
    }
    return AttackSpec(
        measurement_injections=(
            MeasurementInjection(
                target="load2",
                start_cycle=SCENARIO1_ONSET,
                end_cycle=SCENARIO1_END,
                tamper=tamper,
            ),
        )
    )


def scenario2_attack() -> AttackSpec:
    return AttackSpec(
        command_injections=(
            CommandInjection(
                target="load2",
                start_cycle=SCENARIO2_ONSET,
                override_value="open",
            ),
        )
    )
