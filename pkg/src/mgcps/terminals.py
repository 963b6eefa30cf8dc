"""Terminal registry and task coordination for the four endpoint roles.

Each terminal is a ten-field record: identity, role + function text, real-time
status, queued tasks, goals, strategies, actuation capabilities, channel
subscriptions, latest environment observations, and execution feedback.
Perception/coordination terminals must subscribe to channels and must not
actuate; control/execution terminals the reverse. A single coordination
terminal assigns measure and actuate tasks deterministically each cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping

from mgcps.errors import MgcpsError


class TerminalError(MgcpsError):
    pass


class DuplicateId(TerminalError):
    pass


class RoleCapabilityMismatch(TerminalError):
    pass


class UnknownTerminal(TerminalError):
    pass


class NoCoordinator(TerminalError):
    pass


class TerminalRole(Enum):
    PERCEPTION = "perception"
    CONTROL = "control"
    COORDINATION = "coordination"
    EXECUTION = "execution"


# roles that must hold actuation capabilities / channel subscriptions
_ACTUATING = (TerminalRole.CONTROL, TerminalRole.EXECUTION)
_SUBSCRIBING = (TerminalRole.PERCEPTION, TerminalRole.COORDINATION)


@dataclass(frozen=True)
class Terminal:
    terminal_id: str
    role: TerminalRole
    function: str = ""
    status: str = "idle"
    tasks: tuple[str, ...] = ()
    goals: tuple[str, ...] = ()
    strategies: tuple[str, ...] = ()
    actions: tuple[str, ...] = ()
    subscriptions: tuple[str, ...] = ()
    observations: Mapping[str, Any] = field(default_factory=dict)
    feedback: tuple[Any, ...] = ()


@dataclass(frozen=True)
class TerminalRegistry:
    terminals: Mapping[str, Terminal] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.terminals)

    def __contains__(self, terminal_id: str) -> bool:
        return terminal_id in self.terminals

    def get(self, terminal_id: str) -> Terminal:
        try:
            return self.terminals[terminal_id]
        except KeyError:
            raise UnknownTerminal(f"no terminal {terminal_id!r}") from None

    def with_role(self, role: TerminalRole) -> tuple[Terminal, ...]:
        return tuple(
            t for _, t in sorted(self.terminals.items()) if t.role is role
        )


@dataclass(frozen=True)
class PendingCommand:
    """A decision outcome awaiting conversion: which actuator, which value."""

    target_node: str
    capability: str
    value: Any
    decided_by: str


@dataclass(frozen=True)
class CycleState:
    """Snapshot handed to the coordinator: statuses plus pending decisions."""

    cycle: int
    statuses: Mapping[str, str] = field(default_factory=dict)
    pending_commands: tuple[PendingCommand, ...] = ()


@dataclass(frozen=True)
class TaskAssignment:
    task_id: str
    issuer: str
    target: str
    kind: str  # "measure" | "actuate"
    payload: Any
    cycle: int


def register_terminal(registry: TerminalRegistry, terminal: Terminal) -> TerminalRegistry:
    """Add a terminal, enforcing id uniqueness and role/capability coherence."""
    if terminal.terminal_id in registry:
        raise DuplicateId(f"terminal id {terminal.terminal_id!r} already registered")
    if terminal.role in _ACTUATING and not terminal.actions:
        raise RoleCapabilityMismatch(
            f"{terminal.role.value} terminal {terminal.terminal_id!r} has no actions"
        )
    if terminal.role not in _ACTUATING and terminal.actions:
        raise RoleCapabilityMismatch(
            f"{terminal.role.value} terminal {terminal.terminal_id!r} must not actuate"
        )
    if terminal.role in _SUBSCRIBING and not terminal.subscriptions:
        raise RoleCapabilityMismatch(
            f"{terminal.role.value} terminal {terminal.terminal_id!r} has no subscriptions"
        )
    if terminal.role not in _SUBSCRIBING and terminal.subscriptions:
        raise RoleCapabilityMismatch(
            f"{terminal.role.value} terminal {terminal.terminal_id!r} must not subscribe"
        )
    updated = dict(registry.terminals)
    updated[terminal.terminal_id] = terminal
    return TerminalRegistry(updated)


def coordinate_tasks(
    registry: TerminalRegistry, cycle_state: CycleState
) -> tuple[TaskAssignment, ...]:
    """Deterministic task allocation for one cycle.

    Every perception terminal with subscriptions gets one measure task; every
    control terminal whose capability matches a pending command gets one
    actuate task. Pure in its inputs: identical snapshots produce identical
    assignments, ordered by (kind, target id).
    """
    coordinators = registry.with_role(TerminalRole.COORDINATION)
    if not coordinators:
        raise NoCoordinator("registry has no coordination terminal")
    issuer = coordinators[0].terminal_id

    assignments: list[tuple[str, str, Any]] = []
    for term in registry.with_role(TerminalRole.PERCEPTION):
        if term.subscriptions:
            assignments.append(("measure", term.terminal_id, term.subscriptions))
    controls = registry.with_role(TerminalRole.CONTROL)
    for pending in sorted(
        cycle_state.pending_commands, key=lambda p: (p.target_node, p.capability)
    ):
        wanted = f"{pending.capability}:{pending.target_node}"
        for term in controls:
            if wanted in term.actions:
                assignments.append(("actuate", term.terminal_id, pending))
                break

    assignments.sort(key=lambda a: (a[0], a[1]))
    return tuple(
        TaskAssignment(
            task_id=f"c{cycle_state.cycle:05d}-{kind}-{seq:03d}",
            issuer=issuer,
            target=target,
            kind=kind,
            payload=payload,
            cycle=cycle_state.cycle,
        )
        for seq, (kind, target, payload) in enumerate(assignments)
    )


def apply_assignments(
    registry: TerminalRegistry, tasks: tuple[TaskAssignment, ...]
) -> TerminalRegistry:
    """Queue each task on its target terminal and mark the terminal busy."""
    updated = dict(registry.terminals)
    for task in tasks:
        term = updated.get(task.target)
        if term is None:
            raise UnknownTerminal(f"task {task.task_id} targets unknown {task.target!r}")
        updated[task.target] = replace(
            term, tasks=term.tasks + (task.task_id,), status="busy"
        )
    return TerminalRegistry(updated)


def record_feedback(
    registry: TerminalRegistry, terminal_id: str, outcome: Any
) -> TerminalRegistry:
    """Append a task outcome to the terminal's feedback and return it to idle."""
    term = registry.get(terminal_id)
    updated = dict(registry.terminals)
    updated[terminal_id] = replace(
        term, feedback=term.feedback + (outcome,), status="idle"
    )
    return TerminalRegistry(updated)
