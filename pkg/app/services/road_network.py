"""Directed road graph, edge occupancy and shortest-path routing."""

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from app.core.exceptions import NetworkValidationException
from app.core.logging import get_logger

logger = get_logger(__name__)

VEHICLE_SPACING = 7.5

EdgeWeight = Union[str, Callable[["Edge"], float]]


@dataclass(frozen=True)
class Node:
    id: str
    x: float = 0.0
    y: float = 0.0


@dataclass(frozen=True)
class Edge:
    id: str
    from_node: str
    to_node: str
    length: float
    speed: float
    lanes: int = 1

    @property
    def free_flow_time(self) -> float:
        return self.length / self.speed


@dataclass(frozen=True)
class DriverProfile:
    familiarity: float = 0.5
    usual_speed: float = 15.0


class RoadNetwork:
    """
    Immutable directed road graph.

    When `connections` is None every turn at a junction is allowed except the
    immediate U-turn back to the incoming edge's upstream junction.

    Raises:
        NetworkValidationException: On duplicate ids, non-positive length or
            speed, zero lanes, unknown junctions, or connections between edges
            that do not meet at a junction
    """

    def __init__(self, nodes: Iterable[Node], edges: Iterable[Edge],
                 connections: Optional[Iterable[Tuple[str, str]]] = None):
        self.nodes: Dict[str, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise NetworkValidationException(f"Duplicate junction id '{node.id}'")
            self.nodes[node.id] = node

        self.edges: Dict[str, Edge] = {}
        for edge in edges:
            self._validate_edge(edge)
            self.edges[edge.id] = edge

        if connections is None:
            pairs = self._default_connections()
        else:
            pairs = set()
            for from_edge, to_edge in connections:
                self._validate_connection(from_edge, to_edge)
                pairs.add((from_edge, to_edge))
        self.connections: Tuple[Tuple[str, str], ...] = tuple(sorted(pairs))

        successors: Dict[str, List[str]] = {e: [] for e in self.edges}
        predecessors: Dict[str, List[str]] = {e: [] for e in self.edges}
        for from_edge, to_edge in self.connections:
            successors[from_edge].append(to_edge)
            predecessors[to_edge].append(from_edge)
        self.successors: Dict[str, Tuple[str, ...]] = {e: tuple(sorted(s)) for e, s in successors.items()}
        self.predecessors: Dict[str, Tuple[str, ...]] = {e: tuple(sorted(p)) for e, p in predecessors.items()}
        self.max_speed = max((e.speed for e in self.edges.values()), default=1.0)

    def _validate_edge(self, edge: Edge) -> None:
        if edge.id in self.edges:
            raise NetworkValidationException(f"Duplicate edge id '{edge.id}'")
        if not edge.length > 0:
            raise NetworkValidationException(f"Edge '{edge.id}' must have positive length, got {edge.length}")
        if not edge.speed > 0:
            raise NetworkValidationException(f"Edge '{edge.id}' must have positive speed, got {edge.speed}")
        if edge.lanes < 1:
            raise NetworkValidationException(f"Edge '{edge.id}' must have at least one lane, got {edge.lanes}")
        for node_id in (edge.from_node, edge.to_node):
            if node_id not in self.nodes:
                raise NetworkValidationException(f"Edge '{edge.id}' references unknown junction '{node_id}'")

    def _validate_connection(self, from_edge: str, to_edge: str) -> None:
        for edge_id in (from_edge, to_edge):
            if edge_id not in self.edges:
                raise NetworkValidationException(f"Connection {from_edge} -> {to_edge} references unknown edge '{edge_id}'")
        if self.edges[from_edge].to_node != self.edges[to_edge].from_node:
            raise NetworkValidationException(
                f"Connection {from_edge} -> {to_edge} does not share a junction"
            )

    def _default_connections(self) -> set:
        outgoing: Dict[str, List[Edge]] = {}
        for edge in self.edges.values():
            outgoing.setdefault(edge.from_node, []).append(edge)
        pairs = set()
        for edge in self.edges.values():
            for nxt in outgoing.get(edge.to_node, []):
                if nxt.to_node != edge.from_node:
                    pairs.add((edge.id, nxt.id))
        return pairs

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def connection_count(self) -> int:
        return len(self.connections)

    @property
    def lane_count(self) -> int:
        return sum(e.lanes for e in self.edges.values())

    def edge(self, edge_id: str) -> Edge:
        return self.edges[edge_id]

    def capacity(self, edge_id: str, spacing: float = VEHICLE_SPACING) -> int:
        """Storage capacity: ceil(length x lanes / spacing) vehicles."""
        edge = self.edges[edge_id]
        return max(1, math.ceil(edge.length * edge.lanes / spacing))

    def edge_states(self, spacing: float = VEHICLE_SPACING) -> Dict[str, "EdgeState"]:
        return {e: EdgeState(edge, self.capacity(e, spacing)) for e, edge in self.edges.items()}


@dataclass
class EdgeState:
    """
    Occupancy of one edge; density is vehicle_count / length (veh/m).

    `discharge_credit` is the junction outflow allowance: one vehicle may
    leave the edge per whole unit of credit.
    """

    edge: Edge
    capacity: int
    vehicle_count: int = 0
    discharge_credit: float = 0.0

    @property
    def density(self) -> float:
        return self.vehicle_count / self.edge.length

    @property
    def full(self) -> bool:
        return self.vehicle_count >= self.capacity

    @property
    def can_discharge(self) -> bool:
        return self.discharge_credit >= 1.0

    def recharge(self, rate: float) -> None:
        # banked credit never exceeds one step's outflow
        self.discharge_credit = min(self.discharge_credit + rate, max(1.0, rate))

    def enter(self) -> None:
        self.vehicle_count += 1

    def leave(self, discharged: bool = False) -> None:
        self.vehicle_count -= 1
        if discharged:
            self.discharge_credit -= 1.0


@dataclass(frozen=True)
class Route:
    edges: Tuple[str, ...] = ()
    cost: float = math.inf
    reachable: bool = False

    def next_edge(self, current: str) -> Optional[str]:
        try:
            index = self.edges.index(current)
        except ValueError:
            return None
        return self.edges[index + 1] if index + 1 < len(self.edges) else None


UNREACHABLE = Route()


def edge_cost(edge: Edge, weight: EdgeWeight = "time") -> float:
    if callable(weight):
        return float(weight(edge))
    if weight == "time":
        return edge.free_flow_time
    if weight == "length":
        return edge.length
    raise ValueError(f"Unknown edge weight '{weight}'")


def dijkstra_route(net: RoadNetwork, origin: str, dest: str, weight: EdgeWeight = "time") -> Route:
    """
    Cheapest connection-respecting edge sequence from `origin` to `dest`.

    The cost counts every edge of the route, origin and destination included.
    Among equal-cost routes the lexicographically smallest edge-id sequence wins.
    An unreachable destination yields a Route with `reachable == False`.
    """
    for edge_id in (origin, dest):
        if edge_id not in net.edges:
            raise KeyError(f"Unknown edge '{edge_id}'")
    settled = set()
    heap: List[Tuple[float, Tuple[str, ...]]] = [(edge_cost(net.edges[origin], weight), (origin,))]
    while heap:
        cost, path = heapq.heappop(heap)
        current = path[-1]
        if current in settled:
            continue
        if current == dest:
            return Route(path, cost, True)
        settled.add(current)
        for nxt in net.successors[current]:
            if nxt not in settled:
                heapq.heappush(heap, (cost + edge_cost(net.edges[nxt], weight), path + (nxt,)))
    return UNREACHABLE


@dataclass
class RoutingTables:
    """Per-destination cost-to-go tables (reverse Dijkstra), computed on demand."""

    net: RoadNetwork
    weight: EdgeWeight = "time"
    _cost_to_go: Dict[str, Dict[str, float]] = field(default_factory=dict, repr=False)

    def cost_to_go(self, dest: str) -> Dict[str, float]:
        """Cheapest cost from entering each edge to the end of `dest`; unreachable edges are absent."""
        table = self._cost_to_go.get(dest)
        if table is None:
            table = {}
            heap = [(edge_cost(self.net.edges[dest], self.weight), dest)]
            while heap:
                cost, edge_id = heapq.heappop(heap)
                if edge_id in table:
                    continue
                table[edge_id] = cost
                for prev in self.net.predecessors[edge_id]:
                    if prev not in table:
                        heapq.heappush(heap, (cost + edge_cost(self.net.edges[prev], self.weight), prev))
            self._cost_to_go[dest] = table
        return table

    def reachable(self, edge_id: str, dest: str) -> bool:
        return edge_id in self.cost_to_go(dest)

    def remaining_cost(self, edge_id: str, dest: str) -> float:
        return self.cost_to_go(dest).get(edge_id, math.inf)


def candidate_next_edges(net: RoadNetwork, current: str, dest: str,
                         tables: Optional[RoutingTables] = None) -> List[str]:
    """Outgoing edges permitted at the end of `current` from which `dest` stays reachable, by id."""
    tables = tables or RoutingTables(net)
    cost_to_go = tables.cost_to_go(dest)
    return [e for e in net.successors[current] if e in cost_to_go]
