"""Declarative false-data injection applied at the perception/actuation edges.

Uplink injections override sequence components of a node's measurement per
cycle and re-derive the phase quantities through the inverse transform, so the
falsified record is internally consistent. Downlink injections perturb a
setpoint additively or override a discrete command value; an injection whose
actuator received no legitimate command emits a phantom command instead. Both
hooks are identity outside their active windows. Agents never see attack
state; only the run trace distinguishes issued from applied commands.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Optional

from mgcps.errors import MgcpsError
from mgcps.messages import ControlCommand, Measurement
from mgcps.phasors import (
    Phasor,
    SequenceComponents,
    from_sequence,
    quantize_sequence,
    quantize_three_phase,
)

CURRENT = "current"
VOLTAGE = "voltage"


class AttackSpecError(MgcpsError):
    pass


@dataclass(frozen=True)
class SequenceOverride:
    """Per-cycle replacement values; components left None keep the measured value."""

    positive: Optional[Phasor] = None
    negative: Optional[Phasor] = None
    zero: Optional[Phasor] = None

    def apply(self, measured: SequenceComponents) -> SequenceComponents:
        return SequenceComponents(
            positive=self.positive if self.positive is not None else measured.positive,
            negative=self.negative if self.negative is not None else measured.negative,
            zero=self.zero if self.zero is not None else measured.zero,
        )


@dataclass(frozen=True)
class MeasurementInjection:
    target: str
    start_cycle: int
    end_cycle: Optional[int] = None
    tamper: Mapping[int, SequenceOverride] = field(default_factory=dict)
    quantity: str = CURRENT

    def __post_init__(self) -> None:
        if self.end_cycle is not None and self.end_cycle < self.start_cycle:
            raise AttackSpecError(
                f"injection on {self.target!r} ends ({self.end_cycle}) before it starts"
            )
        if self.quantity not in (CURRENT, VOLTAGE):
            raise AttackSpecError(f"unknown quantity {self.quantity!r}")

    def active(self, cycle: int) -> bool:
        return cycle >= self.start_cycle and (
            self.end_cycle is None or cycle <= self.end_cycle
        )


@dataclass(frozen=True)
class CommandInjection:
    target: str
    start_cycle: int
    capability: str = "breaker"
    setpoint_delta: Optional[float] = None
    override_value: Any = None

    def __post_init__(self) -> None:
        if self.setpoint_delta is not None and self.override_value is not None:
            raise AttackSpecError(
                f"injection on {self.target!r} sets both a delta and an override"
            )
        if self.capability == "breaker" and self.setpoint_delta is not None:
            raise AttackSpecError(
                f"injection on {self.target!r}: breaker commands take an override, not a delta"
            )

    def active(self, cycle: int) -> bool:
        return cycle >= self.start_cycle


@dataclass(frozen=True)
class AttackSpec:
    measurement_injections: tuple[MeasurementInjection, ...] = ()
    command_injections: tuple[CommandInjection, ...] = ()

    def __post_init__(self) -> None:
        seen: list[tuple[str, str, int, Optional[int]]] = []
        for inj in self.measurement_injections:
            for other in seen:
                if other[0] == inj.target and other[1] == inj.quantity:
                    starts_before_other_ends = other[3] is None or inj.start_cycle <= other[3]
                    other_starts_before_end = inj.end_cycle is None or other[2] <= inj.end_cycle
                    if starts_before_other_ends and other_starts_before_end:
                        raise AttackSpecError(
                            f"overlapping injections on {inj.target!r} {inj.quantity}"
                        )
            seen.append((inj.target, inj.quantity, inj.start_cycle, inj.end_cycle))
        channels = [
            (inj.target, inj.capability) for inj in self.command_injections
        ]
        if len(channels) != len(set(channels)):
            raise AttackSpecError("two command injections target the same actuator")

    def windows(self) -> list[dict]:
        """Active ranges for reporting: kind, target, start, end (None = open)."""
        out: list[dict] = []
        for inj in self.measurement_injections:
            out.append(
                {
                    "kind": "measurement",
                    "target": inj.target,
                    "quantity": inj.quantity,
                    "start": inj.start_cycle,
                    "end": inj.end_cycle,
                }
            )
        for inj in self.command_injections:
            out.append(
                {
                    "kind": "command",
                    "target": inj.target,
                    "capability": inj.capability,
                    "start": inj.start_cycle,
                    "end": None,
                }
            )
        return out


NO_ATTACK = AttackSpec()


def tamper_uplink(
    measurement: Measurement, spec: AttackSpec, cycle: int, decimals: int = 5
) -> Measurement:
    """Rewrite a measurement in transit if an injection matches, else identity.

    The tampered sequence values are taken verbatim from the tamper map and
    the phase quantities recomputed through the inverse transform, then both
    are re-quantized like a fresh perception record.
    """
    for inj in spec.measurement_injections:
        if inj.target != measurement.source or not inj.active(cycle):
            continue
        override = inj.tamper.get(cycle)
        if override is None:
            continue
        if inj.quantity == CURRENT:
            seq = override.apply(measurement.current_seq)
            return replace(
                measurement,
                current=quantize_three_phase(from_sequence(seq), decimals),
                current_seq=quantize_sequence(seq, decimals),
            )
        seq = override.apply(measurement.voltage_seq)
        return replace(
            measurement,
            voltage=quantize_three_phase(from_sequence(seq), decimals),
            voltage_seq=quantize_sequence(seq, decimals),
        )
    return measurement


def tamper_downlink(
    command: ControlCommand, spec: AttackSpec, cycle: int
) -> ControlCommand:
    """Return the command as the actuator will see it; identity if unattacked."""
    for inj in spec.command_injections:
        if (inj.target, inj.capability) != command.channel() or not inj.active(cycle):
            continue
        if inj.override_value is not None:
            if command.value == inj.override_value:
                return command
            return replace(command, value=inj.override_value)
        if inj.setpoint_delta is not None:
            return replace(command, value=command.value + inj.setpoint_delta)
    return command


def inject_phantom_command(
    spec: AttackSpec,
    cycle: int,
    covered: Iterable[tuple[str, str]] = (),
    issue_ts: int = 0,
) -> tuple[ControlCommand, ...]:
    """Attacker-originated commands for active injections with no legitimate one.

    ``covered`` lists (target, capability) channels that already carry a
    command this cycle. Phantom commands have no issuing node.
    """
    taken = set(covered)
    out: list[ControlCommand] = []
    for inj in spec.command_injections:
        if not inj.active(cycle) or (inj.target, inj.capability) in taken:
            continue
        value: Any
        if inj.override_value is not None:
            value = inj.override_value
        elif inj.setpoint_delta is not None:
            value = inj.setpoint_delta
        else:
            continue
        out.append(
            ControlCommand(
                target=inj.target,
                capability=inj.capability,
                value=value,
                cycle=cycle,
                issue_ts=issue_ts,
                issuing_node=None,
            )
        )
    return tuple(sorted(out, key=lambda c: (c.target, c.capability)))
