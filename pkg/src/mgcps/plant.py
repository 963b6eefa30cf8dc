"""Quasi-steady-state microgrid signal model with breaker dynamics.

The plant synthesizes balanced three-phase voltage/current phasors per
physical node each cycle. Noise is common-mode across the three phases (one
magnitude factor and one angle offset per node per quantity), so a healthy
node keeps an exactly balanced signature while its magnitudes and angles
wiggle. Breaker events shed the load's current, redistribute it over the
remaining closed loads, and superimpose a decaying alternating-sign transient
on every node for a configured number of cycles.

Internally the breaker/transient dynamics run on a HybridAutomaton whose
discrete states are breaker configurations and whose continuous vector holds
per-node transient countdowns, per-load base currents, and a command-code
slot; breaker commands enter through that slot and the jump reset performs the
shed, redistribution, and countdown reload. This is a signal model, not a
power-flow solver: absolute values are configuration, only signatures are
modeled.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from mgcps.errors import MgcpsError
from mgcps.hybrid import HAState, HybridAutomaton, JumpEdge, flow_step, try_jump
from mgcps.phasors import Phasor, ThreePhase

OPEN = "open"
CLOSED = "closed"


class PlantError(MgcpsError):
    pass


class InvalidConfig(PlantError):
    pass


class UnknownActuator(PlantError):
    pass


class NotAPhysicalNode(PlantError):
    pass


@dataclass(frozen=True)
class NodeNominals:
    """Effective electrical parameters of one node after overrides."""

    voltage: float
    current: float
    voltage_angle_deg: float
    current_angle_deg: float
    noise_voltage: float
    noise_current: float
    noise_angle_deg: float


@dataclass(frozen=True)
class BreakerCommand:
    load: str
    position: str  # OPEN or CLOSED


@dataclass(frozen=True)
class PlantConfig:
    generators: tuple[str, ...] = ("dg1", "dg2", "dg3")
    loads: tuple[str, ...] = ("load1", "load2", "load3")
    node_order: tuple[str, ...] = ()  # defaults to generators + loads
    nominal_voltage: float = 401.0
    nominal_current: float = 0.81
    voltage_angle_deg: float = 0.0
    current_angle_deg: float = 116.3
    noise_voltage: float = 0.002  # relative, common-mode
    noise_current: float = 0.002
    noise_angle_deg: float = 1.2
    shed_weights: Mapping[str, float] = field(default_factory=dict)
    transient_cycles: int = 6
    transient_amplitude: float = 0.06  # relative magnitude swing at the event
    transient_decay: float = 0.75
    overrides: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.node_order:
            object.__setattr__(self, "node_order", self.generators + self.loads)

    def physical_names(self) -> tuple[str, ...]:
        return self.node_order

    def resolve(self, name: str) -> NodeNominals:
        over = self.overrides.get(name, {})
        return NodeNominals(
            voltage=float(over.get("nominal_voltage", self.nominal_voltage)),
            current=float(over.get("nominal_current", self.nominal_current)),
            voltage_angle_deg=float(
                over.get("voltage_angle_deg", self.voltage_angle_deg)
            ),
            current_angle_deg=float(
                over.get("current_angle_deg", self.current_angle_deg)
            ),
            noise_voltage=float(over.get("noise_voltage", self.noise_voltage)),
            noise_current=float(over.get("noise_current", self.noise_current)),
            noise_angle_deg=float(over.get("noise_angle_deg", self.noise_angle_deg)),
        )

    def weight(self, load: str) -> float:
        return float(self.shed_weights.get(load, 1.0))


def validate_config(config: PlantConfig) -> None:
    """Raise InvalidConfig naming the first violated bound."""
    if not config.loads and not config.generators:
        raise InvalidConfig("plant has no physical nodes")
    order = set(config.node_order)
    if order != set(config.generators) | set(config.loads):
        raise InvalidConfig("node_order is not a permutation of generators + loads")
    if len(config.node_order) != len(config.generators) + len(config.loads):
        raise InvalidConfig("node_order repeats a node")
    for name in config.node_order:
        nom = config.resolve(name)
        if nom.voltage <= 0.0:
            raise InvalidConfig(f"nominal voltage of {name!r} must be > 0, got {nom.voltage}")
        if nom.current <= 0.0:
            raise InvalidConfig(f"nominal current of {name!r} must be > 0, got {nom.current}")
        for label, value in (
            ("noise_voltage", nom.noise_voltage),
            ("noise_current", nom.noise_current),
            ("noise_angle_deg", nom.noise_angle_deg),
        ):
            if value < 0.0:
                raise InvalidConfig(f"{label} of {name!r} must be >= 0, got {value}")
    for load in config.loads:
        if config.weight(load) < 0.0:
            raise InvalidConfig(f"shed weight of {load!r} must be >= 0")
    if config.loads and sum(config.weight(l) for l in config.loads) <= 0.0:
        raise InvalidConfig("shed weights must have a positive sum")
    if config.transient_cycles < 0:
        raise InvalidConfig(f"transient_cycles must be >= 0, got {config.transient_cycles}")
    if config.transient_amplitude < 0.0:
        raise InvalidConfig(
            f"transient_amplitude must be >= 0, got {config.transient_amplitude}"
        )
    if not 0.0 < config.transient_decay <= 1.0:
        raise InvalidConfig(
            f"transient_decay must be in (0, 1], got {config.transient_decay}"
        )


@dataclass
class PlantState:
    cycle: int
    breakers: dict[str, str]
    voltages: dict[str, ThreePhase]
    currents: dict[str, ThreePhase]
    transient_countdowns: dict[str, float]
    base_currents: dict[str, float]
    ha_state: HAState
    automaton: HybridAutomaton = field(repr=False, compare=False)
    rng: random.Random = field(repr=False, compare=False)


def _config_label(breakers: Mapping[str, str], loads: tuple[str, ...]) -> str:
    return "".join("1" if breakers[l] == CLOSED else "0" for l in loads)


def _label_to_breakers(label: str, loads: tuple[str, ...]) -> dict[str, str]:
    return {l: CLOSED if bit == "1" else OPEN for l, bit in zip(loads, label)}


def _build_automaton(config: PlantConfig) -> HybridAutomaton:
    loads = config.loads
    order = config.node_order
    n_nodes = len(order)
    n_loads = len(loads)
    cmd_slot = n_nodes + n_loads
    dim = cmd_slot + 1
    labels = tuple(format(i, f"0{n_loads}b") for i in range(2**n_loads)) if n_loads else ("",)
    code_of = {label: i + 1 for i, label in enumerate(labels)}

    def flow(c: np.ndarray, _u: np.ndarray) -> np.ndarray:
        dc = np.zeros_like(c)
        dc[:n_nodes] = np.where(c[:n_nodes] >= 0.5, -1.0, 0.0)
        return dc

    flows = {label: flow for label in labels}

    def make_guard(target_code: int):
        def guard(c: np.ndarray) -> bool:
            return c[cmd_slot] == target_code

        return guard

    def make_reset(source: str, target: str):
        stayed = [j for j in range(n_loads) if source[j] == "1" and target[j] == "1"]
        opened = [j for j in range(n_loads) if source[j] == "1" and target[j] == "0"]
        reclosed = [j for j in range(n_loads) if source[j] == "0" and target[j] == "1"]
        total_w = sum(config.weight(loads[j]) for j in stayed)

        def reset(c: np.ndarray) -> np.ndarray:
            out = c.copy()
            shed = sum(out[n_nodes + j] for j in opened)
            for j in opened:
                out[n_nodes + j] = 0.0
            for j in reclosed:
                out[n_nodes + j] = config.resolve(loads[j]).current
            if shed > 0.0 and stayed and total_w > 0.0:
                for j in stayed:
                    out[n_nodes + j] += shed * config.weight(loads[j]) / total_w
            out[:n_nodes] = float(config.transient_cycles)
            out[cmd_slot] = 0.0
            return out

        return reset

    edges = tuple(
        JumpEdge(
            source=src,
            target=dst,
            guard=make_guard(code_of[dst]),
            reset=make_reset(src, dst),
            label=f"breakers {src}->{dst}",
        )
        for src in labels
        for dst in labels
        if src != dst
    )

    init_vec = np.zeros(dim)
    for j, load in enumerate(loads):
        init_vec[n_nodes + j] = config.resolve(load).current
    all_closed = "1" * n_loads
    return HybridAutomaton(
        discrete_states=labels,
        edges=edges,
        continuous_dim=dim,
        init=(HAState(all_closed, init_vec),),
        flows=flows,
    )


def _synthesize(
    config: PlantConfig,
    cycle: int,
    breakers: Mapping[str, str],
    countdowns: Mapping[str, float],
    base_currents: Mapping[str, float],
    rng: random.Random,
) -> tuple[dict[str, ThreePhase], dict[str, ThreePhase]]:
    voltages: dict[str, ThreePhase] = {}
    currents: dict[str, ThreePhase] = {}
    sign = 1.0 if cycle % 2 == 0 else -1.0
    for name in config.node_order:
        nom = config.resolve(name)
        u_vmag = rng.uniform(-1.0, 1.0)
        u_vang = rng.uniform(-1.0, 1.0)
        u_imag = rng.uniform(-1.0, 1.0)
        u_iang = rng.uniform(-1.0, 1.0)
        countdown = countdowns.get(name, 0.0)
        if countdown >= 0.5:
            age = config.transient_cycles - countdown
            swing = sign * config.transient_amplitude * config.transient_decay**age
        else:
            swing = 0.0
        v_mag = nom.voltage * (1.0 + nom.noise_voltage * u_vmag) * (1.0 + swing)
        v_ang = nom.voltage_angle_deg + nom.noise_angle_deg * u_vang
        voltages[name] = ThreePhase.balanced(v_mag, v_ang)
        if breakers.get(name) == OPEN:
            zero = Phasor(0.0, 0.0)
            currents[name] = ThreePhase(zero, zero, zero)
            continue
        i_base = base_currents.get(name, nom.current)
        i_mag = i_base * (1.0 + nom.noise_current * u_imag) * (1.0 + swing)
        i_ang = nom.current_angle_deg + nom.noise_angle_deg * u_iang
        currents[name] = ThreePhase.balanced(i_mag, i_ang)
    return voltages, currents


def _derive(
    config: PlantConfig, ha_state: HAState
) -> tuple[dict[str, str], dict[str, float], dict[str, float]]:
    n_nodes = len(config.node_order)
    breakers = _label_to_breakers(ha_state.discrete, config.loads)
    countdowns = {
        name: float(ha_state.continuous[k]) for k, name in enumerate(config.node_order)
    }
    base = {
        load: float(ha_state.continuous[n_nodes + j])
        for j, load in enumerate(config.loads)
    }
    return breakers, countdowns, base


def plant_init(config: PlantConfig, seed: int) -> PlantState:
    """All breakers closed, balanced nominal quantities, cycle 0."""
    validate_config(config)
    automaton = _build_automaton(config)
    rng = random.Random(seed)
    ha_state = automaton.init[0]
    breakers, countdowns, base = _derive(config, ha_state)
    voltages, currents = _synthesize(config, 0, breakers, countdowns, base, rng)
    return PlantState(
        cycle=0,
        breakers=breakers,
        voltages=voltages,
        currents=currents,
        transient_countdowns=countdowns,
        base_currents=base,
        ha_state=ha_state,
        automaton=automaton,
        rng=rng,
    )


def plant_advance(
    state: PlantState,
    commands: Iterable[BreakerCommand],
    config: PlantConfig,
    dt: float = 1.0,
) -> PlantState:
    """Apply breaker commands, step the automaton one cycle, resample signals.

    ``dt`` is the integration step handed to the automaton; transient
    countdowns are measured in the same time units and decrement by dt per
    cycle. States form a linear chain: the noise generator is shared along it,
    so a state should be advanced once by the owning driver.
    """
    target = dict(state.breakers)
    for cmd in commands:
        if cmd.load not in config.loads:
            raise UnknownActuator(f"no breaker on {cmd.load!r}")
        if cmd.position not in (OPEN, CLOSED):
            raise ValueError(f"breaker position must be open/closed, got {cmd.position!r}")
        target[cmd.load] = cmd.position

    n_loads = len(config.loads)
    cmd_slot = len(config.node_order) + n_loads
    target_label = _config_label(target, config.loads)
    continuous = state.ha_state.continuous.copy()
    if target_label != state.ha_state.discrete:
        labels = state.automaton.discrete_states
        continuous[cmd_slot] = labels.index(target_label) + 1
    else:
        continuous[cmd_slot] = 0.0

    stepped = flow_step(
        state.automaton, HAState(state.ha_state.discrete, continuous), np.zeros(0), dt
    )
    jumped = try_jump(state.automaton, stepped.state)
    new_ha = jumped if jumped is not None else stepped.state

    breakers, countdowns, base = _derive(config, new_ha)
    cycle = state.cycle + 1
    voltages, currents = _synthesize(config, cycle, breakers, countdowns, base, state.rng)
    return PlantState(
        cycle=cycle,
        breakers=breakers,
        voltages=voltages,
        currents=currents,
        transient_countdowns=countdowns,
        base_currents=base,
        ha_state=new_ha,
        automaton=state.automaton,
        rng=state.rng,
    )


def plant_measure(state: PlantState, node: str) -> tuple[ThreePhase, ThreePhase]:
    """Voltage and current of one physical node, without mutation."""
    if node not in state.voltages:
        raise NotAPhysicalNode(f"{node!r} is not a physical plant node")
    return state.voltages[node], state.currents[node]
