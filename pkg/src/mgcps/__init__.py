"""Deterministic microgrid cyber-physical co-simulation.

Couples a quasi-steady-state plant model with a multi-agent cyber layer over
an explicit coupled graph, drives each operating cycle through perception,
communication, decision, and control, and injects measurement- or
command-level false data at the channel boundaries.
"""

from mgcps.attacks import AttackSpec, CommandInjection, MeasurementInjection, SequenceOverride
from mgcps.hybrid import HAState, HybridAutomaton, JumpEdge, Trajectory, flow_step, run, try_jump
from mgcps.phasors import Phasor, SequenceComponents, ThreePhase, from_sequence, to_sequence
from mgcps.pipeline import LatencyConfig, SequenceThresholdPolicy, World, run_cycle
from mgcps.plant import BreakerCommand, PlantConfig, PlantState, plant_advance, plant_init, plant_measure
from mgcps.scenario import (
    FIXTURES,
    RunSummary,
    Scenario,
    load_scenario,
    replay_golden,
    run_scenario,
    serialize_telemetry,
)
from mgcps.terminals import Terminal, TerminalRegistry, TerminalRole, coordinate_tasks, record_feedback, register_terminal
from mgcps.topology import (
    AdjacencyMatrix,
    CoupledGraph,
    NodeKind,
    TopologySpec,
    adjacency_matrix,
    bfs_shortest_path,
    build_graph,
    cyber_subgraph,
)

__version__ = "0.1.0"
