"""Shared fixtures and independent oracles for the test suite.

Everything here is deliberately implemented apart from the library code it
checks: the sequence-transform oracle uses a numpy matrix product, the BFS
oracle is a plain deque search returning distances only, and the golden
adjacency matrix is frozen data.
"""

from __future__ import annotations

import cmath
import math
import random
from collections import deque

import numpy as np

from mgcps.hybrid import HAState, HybridAutomaton, JumpEdge
from mgcps.topology import CoupledGraph, NodeKind, TopologySpec

# Golden 15x15 adjacency of the fig6 fixture (6 physical, 3 routers, 6 agents).
GOLDEN_FIG6_MATRIX = np.array(
    [
        [1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
        [0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 1],
        [1, 1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 1, 1, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        [0, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        [0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        [0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        [0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1],
        [0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1],
    ],
    dtype=np.int64,
)


def sequence_oracle(a: complex, b: complex, c: complex) -> tuple[complex, complex, complex]:
    """Independent sequence decomposition: (positive, negative, zero)."""
    rot = cmath.exp(2j * math.pi / 3.0)
    transform = np.array(
        [
            [1.0, rot, rot * rot],
            [1.0, rot * rot, rot],
            [1.0, 1.0, 1.0],
        ],
        dtype=complex,
    )
    pos, neg, zero = transform @ np.array([a, b, c]) / 3.0
    return complex(pos), complex(neg), complex(zero)


def bfs_distance_oracle(graph: CoupledGraph, source: int, destination: int) -> int | None:
    """Plain FIFO BFS distance in edges; None when unreachable."""
    if source == destination:
        return 0
    seen = {source}
    queue = deque([(source, 0)])
    while queue:
        node, dist = queue.popleft()
        for nxt in graph.neighbors(node):
            if nxt in seen:
                continue
            if nxt == destination:
                return dist + 1
            seen.add(nxt)
            queue.append((nxt, dist + 1))
    return None


def euler_oracle(flow, c0: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Hand-iterated explicit Euler, no jumps."""
    c = np.asarray(c0, dtype=float)
    for _ in range(steps):
        c = c + dt * np.asarray(flow(c), dtype=float)
    return c


def random_topology_spec(rng: random.Random) -> TopologySpec:
    """A random valid topology: paired physical/core nodes, optional routers,
    random extra edges that never repeat a coupling pair."""
    n_phys = rng.randint(0, 4)
    n_trans = rng.randint(0, 3)
    nodes: list[tuple[str, NodeKind]] = []
    for k in range(n_phys):
        kind = NodeKind.PHYSICAL_POWER if rng.random() < 0.5 else NodeKind.PHYSICAL_LOAD
        nodes.append((f"p{k}", kind))
    for k in range(n_trans):
        nodes.append((f"t{k}", NodeKind.CYBER_TRANSMISSION))
    for k in range(n_phys):
        nodes.append((f"c{k}", NodeKind.CYBER_CORE))

    cores = [f"c{k}" for k in range(n_phys)]
    rng.shuffle(cores)
    coupling = tuple((f"p{k}", cores[k]) for k in range(n_phys))

    names = [name for name, _ in nodes]
    forbidden = {tuple(sorted(pair)) for pair in coupling}
    candidates = [
        (a, b)
        for i, a in enumerate(names)
        for b in names[i + 1 :]
        if tuple(sorted((a, b))) not in forbidden
    ]
    rng.shuffle(candidates)
    n_edges = rng.randint(0, len(candidates))
    return TopologySpec(
        nodes=tuple(nodes),
        edges=tuple(candidates[:n_edges]),
        coupling=coupling,
    )


def random_automaton(rng: random.Random) -> tuple[HybridAutomaton, HAState]:
    """A small random automaton with total invariants and affine flows.

    Guards are coordinate thresholds, resets are constant points, priorities
    are unique so jumps are never ambiguous.
    """
    n_states = rng.randint(1, 4)
    dim = rng.randint(1, 2)
    states = tuple(f"q{k}" for k in range(n_states))

    def make_flow():
        a = np.array(
            [[rng.uniform(-1.0, 1.0) for _ in range(dim)] for _ in range(dim)]
        )
        b = np.array([rng.uniform(-0.5, 0.5) for _ in range(dim)])

        def flow(c: np.ndarray, _u: np.ndarray) -> np.ndarray:
            return a @ c + b

        return flow

    flows = {d: make_flow() for d in states}

    def make_guard(axis: int, threshold: float, upward: bool):
        if upward:
            return lambda c: c[axis] >= threshold
        return lambda c: c[axis] <= threshold

    def make_reset(point: np.ndarray):
        return lambda _c: point.copy()

    edges = []
    priority = 0
    for _ in range(rng.randint(0, 2 * n_states)):
        src = rng.choice(states)
        dst = rng.choice(states)
        if src == dst:
            continue
        edges.append(
            JumpEdge(
                source=src,
                target=dst,
                guard=make_guard(rng.randrange(dim), rng.uniform(-1.5, 1.5), rng.random() < 0.5),
                reset=make_reset(np.array([rng.uniform(-1.0, 1.0) for _ in range(dim)])),
                priority=priority,
            )
        )
        priority += 1

    init = HAState(states[0], np.array([rng.uniform(-1.0, 1.0) for _ in range(dim)]))
    automaton = HybridAutomaton(
        discrete_states=states,
        edges=tuple(edges),
        continuous_dim=dim,
        init=(init,),
        flows=flows,
    )
    return automaton, init
