"""Record types flowing through one operating cycle.

Timestamps are a simulated logical clock in integer microseconds; every record
produced later in a causal chain carries a strictly larger timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from typing import TYPE_CHECKING

from mgcps.phasors import SequenceComponents, ThreePhase
from mgcps.terminals import TaskAssignment

if TYPE_CHECKING:
    from mgcps.plant import PlantState


@dataclass(frozen=True)
class Measurement:
    source: str
    source_index: int
    cycle: int
    voltage: ThreePhase
    current: ThreePhase
    voltage_seq: SequenceComponents
    current_seq: SequenceComponents
    perception_ts: int


@dataclass(frozen=True)
class DeliveredData:
    destination: str
    destination_index: int
    payload: Measurement
    hop_path: tuple[int, ...]
    delivery_ts: int


@dataclass(frozen=True)
class Verdict:
    suspected: Optional[str] = None

    @property
    def is_fault(self) -> bool:
        return self.suspected is not None

    def __str__(self) -> str:
        if self.suspected is None:
            return "NoFault"
        return f"FaultSuspected({self.suspected})"


NO_FAULT = Verdict()


@dataclass(frozen=True)
class CommandProposal:
    target_node: str
    capability: str
    value: Any


@dataclass(frozen=True)
class Decision:
    node: str
    cycle: int
    verdict: Verdict
    proposals: tuple[CommandProposal, ...]
    decision_ts: int


@dataclass(frozen=True)
class ControlCommand:
    target: str
    capability: str
    value: Any
    cycle: int
    issue_ts: int
    issuing_node: Optional[str]

    def channel(self) -> tuple[str, str]:
        return (self.target, self.capability)

    def render(self) -> str:
        return f"{self.capability}:{self.target}={self.value}"


@dataclass(frozen=True)
class CycleRecord:
    """Everything one cycle produced, plus the plant truth it was taken from.

    ``measurements`` are the agent-visible values (post uplink tampering);
    ``truth_current_seq`` and ``truth_voltage_seq`` are sequence decompositions
    of the unquantized plant signals, which no agent ever sees.
    """

    cycle: int
    measurements: tuple[Measurement, ...]
    delivered: tuple[DeliveredData, ...]
    tasks: tuple[TaskAssignment, ...]
    decisions: tuple[Decision, ...]
    issued_commands: tuple[ControlCommand, ...]
    applied_commands: tuple[ControlCommand, ...]
    truth_current_seq: dict[str, SequenceComponents]
    truth_voltage_seq: dict[str, SequenceComponents]
    breakers_before: dict[str, str]
    breakers_after: dict[str, str]
    plant_after: "PlantState"
