"""Coupled cyber-physical network: graph construction, validation, adjacency view.

A topology is declared as nodes (with kinds), undirected edges, and a coupling
map pairing every physical node with a dedicated cyber core node. Construction
materializes coupling pairs as graph edges and enforces the structural
invariants (bijective coupling, core count = physical count, no self or
duplicate edges). Built graphs are immutable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from mgcps.errors import MgcpsError

NodeId = int


class TopologyError(MgcpsError):
    pass


class UnknownNode(TopologyError):
    pass


class DuplicateNode(TopologyError):
    pass


class SelfEdge(TopologyError):
    pass


class DuplicateEdge(TopologyError):
    pass


class CouplingNotBijective(TopologyError):
    pass


class CoreCountMismatch(TopologyError):
    pass


class NodeKind(Enum):
    PHYSICAL_POWER = "physical_power"
    PHYSICAL_LOAD = "physical_load"
    CYBER_CORE = "cyber_core"
    CYBER_TRANSMISSION = "cyber_transmission"

    @property
    def is_physical(self) -> bool:
        return self in (NodeKind.PHYSICAL_POWER, NodeKind.PHYSICAL_LOAD)

    @property
    def is_cyber(self) -> bool:
        return not self.is_physical


@dataclass(frozen=True)
class Node:
    index: NodeId
    name: str
    kind: NodeKind


@dataclass(frozen=True)
class TopologySpec:
    """Declarative topology: node (name, kind) pairs, edges and coupling by name.

    Node indices are assigned densely 0..n-1 in declaration order.
    """

    nodes: tuple[tuple[str, NodeKind], ...]
    edges: tuple[tuple[str, str], ...] = ()
    coupling: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class CoupledGraph:
    """Undirected coupled graph. Edges are canonical (low, high) index pairs.

    Graphs returned by build_graph have dense indices equal to tuple position;
    subgraphs keep their original indices.
    """

    nodes: tuple[Node, ...]
    edges: frozenset[tuple[NodeId, NodeId]]
    coupling: dict[NodeId, NodeId] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_index", {n.index: n for n in self.nodes})
        object.__setattr__(self, "_by_name", {n.name: n for n in self.nodes})
        adj: dict[NodeId, list[NodeId]] = {n.index: [] for n in self.nodes}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {k: tuple(sorted(v)) for k, v in adj.items()})

    def node(self, index: NodeId) -> Node:
        try:
            return self._by_index[index]
        except KeyError:
            raise UnknownNode(f"no node with index {index}") from None

    def node_by_name(self, name: str) -> Node:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownNode(f"no node named {name!r}") from None

    def neighbors(self, index: NodeId) -> tuple[NodeId, ...]:
        return self._adj[index]

    def has_edge(self, a: NodeId, b: NodeId) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    def physical_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind.is_physical)

    def cyber_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind.is_cyber)

    def core_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.CYBER_CORE)

    def load_nodes(self) -> tuple[Node, ...]:
        return tuple(n for n in self.nodes if n.kind is NodeKind.PHYSICAL_LOAD)

    def coupled_core(self, physical: NodeId) -> NodeId:
        try:
            return self.coupling[physical]
        except KeyError:
            raise UnknownNode(f"node {physical} has no coupled core") from None


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Symmetric 0/1 matrix with unit diagonal; row k maps to graph.nodes[k]."""

    entries: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def to_csv(self) -> str:
        lines = [",".join(str(int(v)) for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    def blocks(self, graph: CoupledGraph) -> dict[str, np.ndarray]:
        """Partition into cyber/physical blocks M_ii, M_ip, M_pi, M_pp."""
        pos = {n.index: k for k, n in enumerate(graph.nodes)}
        cyber = [pos[n.index] for n in graph.cyber_nodes()]
        phys = [pos[n.index] for n in graph.physical_nodes()]
        m = self.entries
        return {
            "ii": m[np.ix_(cyber, cyber)],
            "ip": m[np.ix_(cyber, phys)],
            "pi": m[np.ix_(phys, cyber)],
            "pp": m[np.ix_(phys, phys)],
        }


def _canonical(a: NodeId, b: NodeId) -> tuple[NodeId, NodeId]:
    return (a, b) if a < b else (b, a)


def build_graph(spec: TopologySpec) -> CoupledGraph:
    """Validate a topology spec and construct the coupled graph.

    Coupling pairs are materialized as graph edges. Raises SelfEdge,
    DuplicateEdge, CouplingNotBijective, or CoreCountMismatch naming the
    offending nodes.
    """
    names: dict[str, NodeId] = {}
    nodes: list[Node] = []
    for index, (name, kind) in enumerate(spec.nodes):
        if name in names:
            raise DuplicateNode(f"node name {name!r} declared twice")
        names[name] = index
        nodes.append(Node(index, name, kind))

    def resolve(name: str) -> NodeId:
        if name not in names:
            raise UnknownNode(f"edge or coupling references undeclared node {name!r}")
        return names[name]

    edges: set[tuple[NodeId, NodeId]] = set()
    for name_a, name_b in spec.edges:
        a, b = resolve(name_a), resolve(name_b)
        if a == b:
            raise SelfEdge(f"self-edge on node {name_a!r}")
        key = _canonical(a, b)
        if key in edges:
            raise DuplicateEdge(f"edge ({name_a!r}, {name_b!r}) declared twice")
        edges.add(key)

    coupling: dict[NodeId, NodeId] = {}
    used_cores: dict[NodeId, str] = {}
    for phys_name, core_name in spec.coupling:
        p, c = resolve(phys_name), resolve(core_name)
        if not nodes[p].kind.is_physical:
            raise CouplingNotBijective(
                f"coupling source {phys_name!r} is not a physical node"
            )
        if nodes[c].kind is not NodeKind.CYBER_CORE:
            raise CouplingNotBijective(
                f"coupling target {core_name!r} is not a cyber core node"
            )
        if p in coupling:
            raise CouplingNotBijective(f"physical node {phys_name!r} coupled twice")
        if c in used_cores:
            raise CouplingNotBijective(
                f"core {core_name!r} coupled to both {used_cores[c]!r} and {phys_name!r}"
            )
        coupling[p] = c
        used_cores[c] = phys_name
        key = _canonical(p, c)
        if key in edges:
            raise DuplicateEdge(
                f"coupling ({phys_name!r}, {core_name!r}) duplicates a declared edge"
            )
        edges.add(key)

    physical = [n for n in nodes if n.kind.is_physical]
    cores = [n for n in nodes if n.kind is NodeKind.CYBER_CORE]
    if len(cores) != len(physical):
        raise CoreCountMismatch(
            f"{len(cores)} core nodes for {len(physical)} physical units"
        )
    uncoupled = [n.name for n in physical if n.index not in coupling]
    if uncoupled:
        raise CouplingNotBijective(f"physical nodes without coupling: {uncoupled}")

    return CoupledGraph(tuple(nodes), frozenset(edges), coupling)


def adjacency_matrix(graph: CoupledGraph) -> AdjacencyMatrix:
    """0/1 matrix: entries[a][b] = 1 iff a == b or {a, b} is an edge.

    Rows follow node declaration order; the diagonal encodes node presence.
    """
    n = len(graph.nodes)
    pos = {node.index: k for k, node in enumerate(graph.nodes)}
    m = np.eye(n, dtype=np.int64)
    for a, b in graph.edges:
        i, j = pos[a], pos[b]
        m[i, j] = 1
        m[j, i] = 1
    return AdjacencyMatrix(m)


def cyber_subgraph(graph: CoupledGraph) -> CoupledGraph:
    """Induced subgraph on cyber nodes; original indices are preserved."""
    keep = {n.index for n in graph.cyber_nodes()}
    nodes = tuple(n for n in graph.nodes if n.index in keep)
    edges = frozenset(e for e in graph.edges if e[0] in keep and e[1] in keep)
    return CoupledGraph(nodes, edges, {})


def bfs_shortest_path(
    graph: CoupledGraph, source: NodeId, destination: NodeId
) -> Optional[list[NodeId]]:
    """Shortest node path from source to destination, or None if unreachable.

    Neighbors are explored in ascending index order, so among equal-length
    paths the one with the smallest next hop at each divergence wins. The
    returned path includes both endpoints; a self-path is [source].
    """
    graph.node(source)
    graph.node(destination)
    if source == destination:
        return [source]
    parent: dict[NodeId, NodeId] = {source: source}
    frontier = [source]
    while frontier:
        next_frontier: list[NodeId] = []
        for u in frontier:
            for v in graph.neighbors(u):
                if v not in parent:
                    parent[v] = u
                    next_frontier.append(v)
        if destination in parent:
            break
        frontier = next_frontier
    if destination not in parent:
        return None
    path = [destination]
    while path[-1] != source:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def edge_names(graph: CoupledGraph) -> set[tuple[str, str]]:
    """Edge set as sorted name pairs (test and reporting aid)."""
    out = set()
    for a, b in graph.edges:
        na, nb = graph.node(a).name, graph.node(b).name
        out.add(tuple(sorted((na, nb))))
    return out
