"""Attack graph parsing, validation and partitioning into game states."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, List, Optional, Set, Tuple, Union

import networkx as nx

from .vulnerabilities import VulnerabilityCatalog

logger = logging.getLogger(__name__)

Document = Union[str, bytes, Mapping]


class AttackGraphError(Exception):
    """Raised when an attack-graph document or partition is invalid."""

    def __init__(self, message: str, location: Optional[str] = None) -> None:
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class NodeKind(Enum):
    FACT = "fact"
    EXPLOIT = "exploit"
    PRIVILEGE = "privilege"
    GOAL = "goal"

    @property
    def is_grey(self) -> bool:
        """Fact, privilege and goal nodes are the ones partitioned into states."""
        return self is not NodeKind.EXPLOIT


class EdgeKind(Enum):
    PRE = "pre"
    POST = "post"


_PRE_SOURCES = {NodeKind.FACT, NodeKind.EXPLOIT}
_PRE_TARGETS = {NodeKind.PRIVILEGE, NodeKind.GOAL}


@dataclass(frozen=True, slots=True)
class AGNode:
    id: str
    kind: NodeKind
    label: str
    cve: Optional[str] = None


@dataclass(frozen=True, slots=True)
class AGEdge:
    source: str
    target: str
    kind: EdgeKind

    @property
    def sort_key(self) -> Tuple[str, str, str]:
        return (self.source, self.target, self.kind.value)


@dataclass(frozen=True)
class AttackGraph:
    """Validated attack graph; nodes and edges are kept sorted by id.

    The structure is mirrored into a frozen `networkx.DiGraph` whose nodes carry their
    `AGNode` under `record` and whose edges carry their `EdgeKind` under `kind`.
    """

    nodes: Tuple[AGNode, ...]
    edges: Tuple[AGEdge, ...]
    entry: str
    digraph: nx.DiGraph = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        digraph = nx.DiGraph()
        for node in self.nodes:
            digraph.add_node(node.id, record=node)
        for edge in self.edges:
            digraph.add_edge(edge.source, edge.target, kind=edge.kind)
        object.__setattr__(self, "digraph", nx.freeze(digraph))

    def node(self, node_id: str) -> AGNode:
        return self.digraph.nodes[node_id]["record"]

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.digraph

    @property
    def goal(self) -> AGNode:
        return next(node for node in self.nodes if node.kind is NodeKind.GOAL)

    @property
    def exploits(self) -> Tuple[AGNode, ...]:
        return tuple(node for node in self.nodes if node.kind is NodeKind.EXPLOIT)

    def preconditions(self, exploit_id: str) -> Tuple[str, ...]:
        """Privilege/goal nodes whose `post` edges enable the exploit."""
        return tuple(
            sorted(
                source
                for source in self.digraph.predecessors(exploit_id)
                if self.digraph.edges[source, exploit_id]["kind"] is EdgeKind.POST
            )
        )

    def results(self, exploit_id: str) -> Tuple[str, ...]:
        """Privilege/goal nodes the exploit grants through its `pre` edges."""
        return tuple(
            sorted(
                target
                for target in self.digraph.successors(exploit_id)
                if self.digraph.edges[exploit_id, target]["kind"] is EdgeKind.PRE
            )
        )

    def reaches(self, source: str, target: str) -> bool:
        return nx.has_path(self.digraph, source, target)


@dataclass(frozen=True, slots=True)
class PartitionState:
    state_id: str
    members: FrozenSet[str]
    terminal: bool = False


@dataclass(frozen=True)
class StatePartition:
    """Ordered grouping of grey attack-graph nodes into Markov-game states."""

    states: Tuple[PartitionState, ...]
    goal_state: str

    def state(self, state_id: str) -> PartitionState:
        for candidate in self.states:
            if candidate.state_id == state_id:
                return candidate
        raise KeyError(state_id)

    @property
    def state_ids(self) -> Tuple[str, ...]:
        return tuple(candidate.state_id for candidate in self.states)

    def state_of(self, node_id: str) -> Optional[str]:
        """State holding `node_id`; the first one when the partition is not disjoint."""
        for candidate in self.states:
            if node_id in candidate.members:
                return candidate.state_id
        return None


def _decode(document: Document) -> Mapping:
    if isinstance(document, (str, bytes)):
        try:
            payload = json.loads(document)
        except json.JSONDecodeError as exc:
            raise AttackGraphError(f"Malformed document: {exc.msg}", f"line {exc.lineno}") from exc
    else:
        payload = document
    if not isinstance(payload, Mapping):
        raise AttackGraphError("Attack-graph document must be an object.")
    return payload


def _require_list(payload: Mapping, key: str) -> List[Any]:
    value = payload.get(key)
    if not isinstance(value, list):
        raise AttackGraphError(f"Top-level key '{key}' must be an array.", key)
    return value


def _parse_nodes(raw_nodes: List[Any]) -> Dict[str, AGNode]:
    nodes: Dict[str, AGNode] = {}
    for index, raw in enumerate(raw_nodes):
        location = f"nodes[{index}]"
        if not isinstance(raw, Mapping) or "id" not in raw or "kind" not in raw:
            raise AttackGraphError("Node must be an object with 'id' and 'kind'.", location)
        node_id = str(raw["id"])
        if node_id in nodes:
            raise AttackGraphError(f"Duplicate node id '{node_id}'.", location)
        try:
            kind = NodeKind(str(raw["kind"]).lower())
        except ValueError as exc:
            raise AttackGraphError(f"Unknown node kind {raw['kind']!r}.", location) from exc
        cve = raw.get("cve")
        if kind is NodeKind.EXPLOIT and not cve:
            raise AttackGraphError(f"Exploit node '{node_id}' has no CVE reference.", location)
        nodes[node_id] = AGNode(
            id=node_id,
            kind=kind,
            label=str(raw.get("label", node_id)),
            cve=str(cve) if cve else None,
        )
    return nodes


def _parse_edges(raw_edges: List[Any], nodes: Dict[str, AGNode]) -> List[AGEdge]:
    edges: Dict[Tuple[str, str, str], AGEdge] = {}
    for index, raw in enumerate(raw_edges):
        if not isinstance(raw, Mapping) or not {"from", "to", "kind"} <= raw.keys():
            raise AttackGraphError(
                "Edge must be an object with 'from', 'to' and 'kind'.", f"edges[{index}]"
            )
        source, target = str(raw["from"]), str(raw["to"])
        location = f"edges[{index}] ({source} -> {target})"
        try:
            kind = EdgeKind(str(raw["kind"]).lower())
        except ValueError as exc:
            raise AttackGraphError(f"Unknown edge kind {raw['kind']!r}.", location) from exc
        for endpoint in (source, target):
            if endpoint not in nodes:
                raise AttackGraphError(f"Dangling edge endpoint '{endpoint}'.", location)

        source_kind, target_kind = nodes[source].kind, nodes[target].kind
        if kind is EdgeKind.PRE:
            valid = source_kind in _PRE_SOURCES and target_kind in _PRE_TARGETS
        else:
            valid = source_kind in _PRE_TARGETS and target_kind in _PRE_SOURCES
        if not valid:
            raise AttackGraphError(
                f"edge kind violates bipartite structure ({kind.value}: "
                f"{source_kind.value} -> {target_kind.value}).",
                location,
            )
        edge = AGEdge(source=source, target=target, kind=kind)
        edges[edge.sort_key] = edge
    return [edges[key] for key in sorted(edges)]


def parse_attack_graph(
    document: Document,
    catalog: Optional[VulnerabilityCatalog] = None,
) -> AttackGraph:
    """Parse and validate the `nodes`/`edges`/`entry` part of an attack-graph document.

    When a catalog is supplied every exploit's CVE reference must resolve in it.
    """

    payload = _decode(document)
    nodes = _parse_nodes(_require_list(payload, "nodes"))
    edges = _parse_edges(_require_list(payload, "edges"), nodes)

    goals = [node.id for node in nodes.values() if node.kind is NodeKind.GOAL]
    if not goals and len(nodes) == 1:
        # A lone privilege node is its own goal.
        (only,) = nodes.values()
        if only.kind is NodeKind.PRIVILEGE:
            nodes[only.id] = AGNode(id=only.id, kind=NodeKind.GOAL, label=only.label)
            goals = [only.id]
    if len(goals) != 1:
        raise AttackGraphError(f"Expected exactly one goal node, found {len(goals)}.", "nodes")

    entry = payload.get("entry")
    if entry is None and len(nodes) == 1:
        entry = goals[0]
    if not isinstance(entry, str):
        raise AttackGraphError(f"Entry must be a node id string, got {entry!r}.", "entry")
    if entry not in nodes:
        raise AttackGraphError(f"Entry node {entry!r} is not a node of the graph.", "entry")
    if nodes[entry].kind not in _PRE_TARGETS:
        raise AttackGraphError(f"Entry node '{entry}' must be a privilege node.", "entry")

    graph = AttackGraph(
        nodes=tuple(nodes[node_id] for node_id in sorted(nodes)),
        edges=tuple(edges),
        entry=str(entry),
    )

    for node in graph.exploits:
        location = f"node '{node.id}'"
        if catalog is not None and node.cve not in catalog:
            raise AttackGraphError(f"unresolved CVE {node.cve}.", location)
        if not graph.preconditions(node.id):
            raise AttackGraphError("Exploit has no precondition (incoming post edge).", location)
        if not graph.results(node.id):
            raise AttackGraphError("Exploit grants nothing (no outgoing pre edge).", location)

    if not graph.reaches(graph.entry, goals[0]):
        raise AttackGraphError(
            f"Goal '{goals[0]}' is not reachable from entry '{graph.entry}'.", "entry"
        )

    logger.debug(
        "Parsed attack graph with %d nodes, %d edges, %d exploits",
        len(graph.nodes),
        len(graph.edges),
        len(graph.exploits),
    )
    return graph


def validate_partition(graph: AttackGraph, partition: StatePartition) -> List[str]:
    """List disjointness, coverage and shape problems; an empty list means a valid abstraction."""

    report: List[str] = []
    owners: Dict[str, List[str]] = defaultdict(list)
    seen_states: Set[str] = set()

    for state in partition.states:
        if state.state_id in seen_states:
            report.append(f"duplicate state id '{state.state_id}'")
        seen_states.add(state.state_id)
        for node_id in sorted(state.members):
            if node_id not in graph:
                report.append(f"state '{state.state_id}' references unknown node '{node_id}'")
            elif not graph.node(node_id).kind.is_grey:
                report.append(
                    f"state '{state.state_id}' lists exploit node '{node_id}' as a member"
                )
            else:
                owners[node_id].append(state.state_id)

    for node in graph.nodes:
        if not node.kind.is_grey:
            continue
        holders = owners.get(node.id, [])
        if not holders:
            report.append(f"coverage: node '{node.id}' belongs to no state")
        elif len(holders) > 1:
            report.append(
                f"disjointness: node '{node.id}' belongs to states {', '.join(holders)}"
            )

    goal_id = graph.goal.id
    goal_holders = owners.get(goal_id, [])
    if partition.goal_state not in seen_states:
        report.append(f"goal state '{partition.goal_state}' is not a partition state")
    elif partition.goal_state not in goal_holders:
        report.append(f"goal state '{partition.goal_state}' does not hold goal '{goal_id}'")
    elif len(partition.states) > 1:
        # A single state holding the whole graph is the coarsest valid abstraction.
        goal_state = partition.state(partition.goal_state)
        if goal_state.members != frozenset({goal_id}):
            report.append(f"goal state '{partition.goal_state}' holds nodes besides the goal")
        if not goal_state.terminal:
            report.append(f"goal state '{partition.goal_state}' is not marked terminal")

    return report


def parse_partition(document: Document, graph: AttackGraph) -> StatePartition:
    """Load the `partition` section of an attack-graph document and validate it."""

    payload = _decode(document)
    states: List[PartitionState] = []
    goal_id = graph.goal.id
    goal_state: Optional[str] = None

    for index, raw in enumerate(_require_list(payload, "partition")):
        if not isinstance(raw, Mapping) or "state" not in raw:
            raise AttackGraphError("Partition entry needs 'state'.", f"partition[{index}]")
        members = raw.get("members", [])
        if not isinstance(members, list):
            raise AttackGraphError("'members' must be an array.", f"partition[{index}]")
        member_set = frozenset(str(member) for member in members)
        terminal = bool(raw.get("terminal", False))
        if goal_id in member_set:
            goal_state = str(raw["state"])
            terminal = True
        states.append(PartitionState(str(raw["state"]), member_set, terminal))

    if goal_state is None:
        raise AttackGraphError(f"No state contains goal node '{goal_id}'.", "partition")

    partition = StatePartition(states=tuple(states), goal_state=goal_state)
    report = validate_partition(graph, partition)
    if report:
        raise AttackGraphError("; ".join(report), "partition")
    return partition


def load_attack_graph(
    document: Document,
    catalog: Optional[VulnerabilityCatalog] = None,
) -> Tuple[AttackGraph, StatePartition]:
    """Parse a complete attack-graph document: graph plus its partition."""

    payload = _decode(document)
    graph = parse_attack_graph(payload, catalog)
    return graph, parse_partition(payload, graph)


def serialize_attack_graph(
    graph: AttackGraph, partition: Optional[StatePartition] = None
) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "label": n.label,
                **({"cve": n.cve} if n.cve else {}),
            }
            for n in graph.nodes
        ],
        "edges": [
            {"from": e.source, "to": e.target, "kind": e.kind.value} for e in graph.edges
        ],
        "entry": graph.entry,
    }
    if partition is not None:
        document["partition"] = [
            {"state": s.state_id, "members": sorted(s.members), "terminal": s.terminal}
            for s in partition.states
        ]
    return document


def exploit_source_states(
    graph: AttackGraph, partition: StatePartition, exploit_id: str
) -> Tuple[str, ...]:
    """States holding at least one of the exploit's preconditions, in partition order."""

    holders = {partition.state_of(node_id) for node_id in graph.preconditions(exploit_id)}
    return tuple(state_id for state_id in partition.state_ids if state_id in holders)


def reachable_exploits(
    graph: AttackGraph, partition: StatePartition, state_id: str
) -> List[Tuple[AGNode, str]]:
    """Exploits enabled entirely inside `state_id`, paired with the state they lead to."""

    members = partition.state(state_id).members
    found: List[Tuple[AGNode, str]] = []
    for exploit in graph.exploits:
        preconditions = graph.preconditions(exploit.id)
        if not set(preconditions) <= members:
            continue
        targets = {partition.state_of(node_id) for node_id in graph.results(exploit.id)}
        if None in targets:
            raise AttackGraphError(
                "Exploit post-condition is not in any state.", f"node '{exploit.id}'"
            )
        if len(targets) > 1:
            raise AttackGraphError(
                f"Exploit leads into several states ({', '.join(sorted(targets))}).",
                f"node '{exploit.id}'",
            )
        found.append((exploit, targets.pop()))
    return found


__all__ = [
    "AGEdge",
    "AGNode",
    "AttackGraph",
    "AttackGraphError",
    "EdgeKind",
    "NodeKind",
    "PartitionState",
    "StatePartition",
    "exploit_source_states",
    "load_attack_graph",
    "parse_attack_graph",
    "parse_partition",
    "reachable_exploits",
    "serialize_attack_graph",
    "validate_partition",
]
