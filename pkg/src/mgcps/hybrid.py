"""Discrete-continuous state machine with flows, invariants, and guarded jumps.

A definition pairs a finite set of discrete states with continuous dynamics:
each discrete state carries a vector field (integrated by explicit Euler), an
invariant predicate, and an activity residual evaluated as a post-step
diagnostic. Edges carry a guard over the continuous state, a reset map, and an
integer priority; after every flow step the highest-priority enabled edge is
taken (equal priorities raise rather than pick silently).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Sequence

import numpy as np

from mgcps.errors import MgcpsError

FlowFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
GuardFn = Callable[[np.ndarray], bool]
ResetFn = Callable[[np.ndarray], np.ndarray]
InvariantFn = Callable[[np.ndarray], bool]
ActivityFn = Callable[[np.ndarray, np.ndarray, np.ndarray], float]


class HybridError(MgcpsError):
    pass


class DefinitionError(HybridError):
    pass


class NonFiniteState(HybridError):
    pass


class AmbiguousJump(HybridError):
    pass


class ResetViolatesInvariant(HybridError):
    pass


class InvariantViolation(HybridError):
    pass


def total_invariant(_c: np.ndarray) -> bool:
    return True


def zero_activity(_c: np.ndarray, _cdot: np.ndarray, _u: np.ndarray) -> float:
    return 0.0


@dataclass(frozen=True)
class HAState:
    discrete: str
    continuous: np.ndarray

    def __post_init__(self) -> None:
        vec = np.asarray(self.continuous, dtype=float)
        object.__setattr__(self, "continuous", vec)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HAState):
            return NotImplemented
        return self.discrete == other.discrete and np.array_equal(
            self.continuous, other.continuous
        )


@dataclass(frozen=True)
class JumpEdge:
    source: str
    target: str
    guard: GuardFn
    reset: ResetFn
    priority: int = 0
    label: str = ""

    def describe(self) -> str:
        return self.label or f"{self.source}->{self.target}"


@dataclass(frozen=True)
class HybridAutomaton:
    """Seven-part definition: states, edges, dimension, init set, flows,
    invariants, activities.

    ``invariants`` left None means every state is always admissible;
    ``activities`` left None means a zero residual everywhere.
    """

    discrete_states: tuple[str, ...]
    edges: tuple[JumpEdge, ...]
    continuous_dim: int
    init: tuple[HAState, ...]
    flows: Mapping[str, FlowFn]
    invariants: Optional[Mapping[str, InvariantFn]] = None
    activities: Optional[Mapping[str, ActivityFn]] = None
    act_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        states = set(self.discrete_states)
        if len(states) != len(self.discrete_states):
            raise DefinitionError("duplicate discrete states")
        if self.invariants is None:
            object.__setattr__(
                self, "invariants", {d: total_invariant for d in self.discrete_states}
            )
        if self.activities is None:
            object.__setattr__(
                self, "activities", {d: zero_activity for d in self.discrete_states}
            )
        for edge in self.edges:
            if edge.source not in states or edge.target not in states:
                raise DefinitionError(f"edge {edge.describe()} references unknown state")
        for d in self.discrete_states:
            if d not in self.flows:
                raise DefinitionError(f"state {d!r} has no flow")
            if d not in self.invariants:
                raise DefinitionError(f"state {d!r} has no invariant")
            if d not in self.activities:
                raise DefinitionError(f"state {d!r} has no activity relation")
        for st in self.init:
            if st.discrete not in states:
                raise DefinitionError(f"init state {st.discrete!r} not a discrete state")
            if st.continuous.shape != (self.continuous_dim,):
                raise DefinitionError(
                    f"init vector has dim {st.continuous.shape}, expected {self.continuous_dim}"
                )
            if not self.invariants[st.discrete](st.continuous):
                raise DefinitionError(
                    f"init pair in {st.discrete!r} violates its invariant"
                )

    def edges_from(self, d: str) -> tuple[JumpEdge, ...]:
        return tuple(e for e in self.edges if e.source == d)


@dataclass(frozen=True)
class FlowStep:
    """One Euler step: the advanced state plus invariant/activity diagnostics."""

    state: HAState
    left_invariant: bool
    act_residual: float
    act_ok: bool


@dataclass(frozen=True)
class Jump:
    """Record of a taken edge: step index and the pre-reset continuous state."""

    step: int
    edge: JumpEdge
    pre_reset: np.ndarray


@dataclass(frozen=True)
class Trajectory(Sequence[HAState]):
    states: tuple[HAState, ...]
    jumps: tuple[Jump, ...] = ()
    act_violations: tuple[tuple[int, float], ...] = ()

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, idx):  # type: ignore[override]
        return self.states[idx]

    def __iter__(self) -> Iterator[HAState]:
        return iter(self.states)


def flow_step(
    ha: HybridAutomaton, state: HAState, external_input: np.ndarray, dt: float
) -> FlowStep:
    """Advance the continuous part by one explicit-Euler step of the flow.

    The discrete state is unchanged. If the new point leaves the invariant of
    the current discrete state, the result is flagged so the caller attempts a
    jump. The activity residual is evaluated at the new point with the Euler
    difference quotient standing in for the derivative.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.discrete not in ha.flows:
        raise DefinitionError(f"unknown discrete state {state.discrete!r}")
    u = np.asarray(external_input, dtype=float)
    c = state.continuous
    if not ha.invariants[state.discrete](c):
        raise InvariantViolation(
            f"pre-step state violates invariant of {state.discrete!r}"
        )
    derivative = np.asarray(ha.flows[state.discrete](c, u), dtype=float)
    c_new = c + dt * derivative
    if not np.all(np.isfinite(c_new)):
        raise NonFiniteState(f"flow in {state.discrete!r} produced {c_new}")
    cdot = (c_new - c) / dt
    residual = float(np.max(np.abs(ha.activities[state.discrete](c_new, cdot, u))))
    new_state = HAState(state.discrete, c_new)
    return FlowStep(
        state=new_state,
        left_invariant=not ha.invariants[state.discrete](c_new),
        act_residual=residual,
        act_ok=residual <= ha.act_tolerance,
    )


def _select_jump(
    ha: HybridAutomaton, state: HAState
) -> Optional[tuple[HAState, JumpEdge]]:
    c = state.continuous
    enabled = [e for e in ha.edges_from(state.discrete) if e.guard(c)]
    if not enabled:
        return None
    top = max(e.priority for e in enabled)
    winners = [e for e in enabled if e.priority == top]
    if len(winners) > 1:
        names = ", ".join(e.describe() for e in winners)
        raise AmbiguousJump(f"guards of {names} hold at priority {top}")
    edge = winners[0]
    c_target = np.asarray(edge.reset(c), dtype=float)
    if not np.all(np.isfinite(c_target)):
        raise NonFiniteState(f"reset of {edge.describe()} produced {c_target}")
    if not ha.invariants[edge.target](c_target):
        raise ResetViolatesInvariant(
            f"reset of {edge.describe()} lands outside the invariant of {edge.target!r}"
        )
    return HAState(edge.target, c_target), edge


def try_jump(ha: HybridAutomaton, state: HAState) -> Optional[HAState]:
    """Take the enabled edge of highest priority, if any.

    Returns None when no guard holds. Raises AmbiguousJump when several
    guards hold at the same highest priority, and ResetViolatesInvariant when
    the reset image falls outside the target invariant.
    """
    selected = _select_jump(ha, state)
    return None if selected is None else selected[0]


def run(
    ha: HybridAutomaton,
    init: HAState,
    input_trace: Optional[Sequence[np.ndarray]],
    dt: float,
    horizon: int,
) -> Trajectory:
    """Alternate flow steps and jumps for `horizon` steps from an init state.

    A jump is attempted after every flow step, at most one per step. The
    trajectory has horizon+1 entries and every recorded state satisfies the
    invariant of its discrete state; a flow step that exits its invariant with
    no enabled jump raises InvariantViolation. Flow and jump errors are
    re-raised with the step index attached.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    if init not in ha.init:
        raise ValueError("initial state is not a member of the automaton init set")
    if input_trace is None:
        inputs: Sequence[np.ndarray] = [np.zeros(0)] * horizon
    else:
        if len(input_trace) < horizon:
            raise ValueError(
                f"input trace has {len(input_trace)} entries for horizon {horizon}"
            )
        inputs = input_trace

    states = [init]
    jumps: list[Jump] = []
    act_violations: list[tuple[int, float]] = []
    current = init
    for step in range(horizon):
        try:
            fs = flow_step(ha, current, inputs[step], dt)
            if not fs.act_ok:
                act_violations.append((step, fs.act_residual))
            selected = _select_jump(ha, fs.state)
            if selected is not None:
                jumped, edge = selected
                jumps.append(Jump(step, edge, fs.state.continuous))
                current = jumped
            elif fs.left_invariant:
                raise InvariantViolation(
                    f"state left invariant of {current.discrete!r} with no enabled jump"
                )
            else:
                current = fs.state
        except HybridError as exc:
            raise type(exc)(f"step {step}: {exc}") from exc
        states.append(current)
    return Trajectory(tuple(states), tuple(jumps), tuple(act_violations))
