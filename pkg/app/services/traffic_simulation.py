"""Deterministic one-second mesoscopic simulator standing in for a full traffic simulator."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from app.core.logging import get_logger
from app.fuzzy.hierarchy import Hierarchy, degenerate_to_t1
from app.services.pso_tuner import JunctionContext, PsoTuner
from app.services.road_network import (
    DriverProfile,
    EdgeState,
    Route,
    RoutingTables,
    candidate_next_edges,
    dijkstra_route,
)
from app.services.route_assignment import (
    EnvContext,
    RoutingContext,
    Strategy,
    assign_next_edge,
    candidate_features,
    decision_candidates,
)
from app.services.scenario_builder import Demand, Scenario, expand_demand_events

logger = get_logger(__name__)

MIN_SPEED_FACTOR = 0.1
WAITING_SPEED = 0.1

REASON_IN_NETWORK = "in_network"
REASON_STRANDED = "stranded"
REASON_INSERTION_BLOCKED = "insertion_blocked"
REASON_NOT_DEPARTED = "not_departed"


def edge_speed(limit: float, density: float, jam_density: float) -> float:
    """Greenshields speed with a floor at 10% of the limit."""
    return limit * max(MIN_SPEED_FACTOR, 1.0 - density / jam_density)


@dataclass
class Vehicle:
    id: str
    origin: str
    dest: str
    depart: int
    profile: DriverProfile
    planned: Route = field(default_factory=Route)
    edge: Optional[str] = None
    offset: float = 0.0
    route_taken: List[str] = field(default_factory=list)
    visited: Set[str] = field(default_factory=set)
    waiting_steps: int = 0
    next_edge: Optional[str] = None


@dataclass(frozen=True)
class TripRecord:
    vehicle_id: str
    depart: int
    arrival: Optional[int]
    waiting_steps: int
    route_length: float
    edges_count: int
    reason: Optional[str] = None

    @property
    def finished(self) -> bool:
        return self.arrival is not None

    @property
    def duration(self) -> Optional[int]:
        return None if self.arrival is None else self.arrival - self.depart


@dataclass(frozen=True)
class StepStats:
    step: int
    departed: int
    in_network: int
    arrived: int
    stranded: int
    avg_travel_time: Optional[float]


@dataclass
class SimulationResult:
    """
    Outcome of one run. `records` hold every departed vehicle, finished or not;
    vehicles that never entered the network are kept apart in `undeparted`.
    """

    scenario: str
    strategy: Strategy
    seed: int
    horizon: int
    records: List[TripRecord]
    series: List[StepStats]
    planned_routes: Dict[str, Tuple[str, ...]]
    taken_routes: Dict[str, Tuple[str, ...]]
    undeparted: List[TripRecord] = field(default_factory=list)
    pso_calls: int = 0

    @property
    def finished(self) -> List[TripRecord]:
        return [r for r in self.records if r.finished]

    @property
    def unfinished(self) -> List[TripRecord]:
        return [r for r in self.records if not r.finished] + list(self.undeparted)

    @property
    def arrived(self) -> int:
        return len(self.finished)

    def altered_route_fraction(self) -> Optional[float]:
        """Share of routed vehicles whose itinerary leaves their free-flow shortest route."""
        finished = {r.vehicle_id for r in self.finished}
        routed = [v for v, planned in self.planned_routes.items() if planned]
        if not routed:
            return None
        changed = sum(
            route_altered(self.planned_routes[v], self.taken_routes.get(v, ()), v in finished) for v in routed
        )
        return changed / len(routed)


def route_altered(planned: Tuple[str, ...], taken: Tuple[str, ...], finished: bool) -> bool:
    """A finished trip must match its plan exactly; an unfinished one must follow a prefix of it."""
    if finished:
        return tuple(taken) != tuple(planned)
    return tuple(taken) != tuple(planned[:len(taken)])


class Simulation:
    """
    One run of one strategy. Owns every piece of mutable state; `step` advances one second.

    Each step inserts due departures, snapshots densities, moves vehicles
    (front of each edge first), decides and transfers at junctions, and
    records arrivals.
    """

    def __init__(self, scenario: Scenario, strategy: Strategy, seed: int = 1):
        config = scenario.config
        self.scenario = scenario
        self.strategy = Strategy(strategy)
        self.seed = seed
        self.net = scenario.network
        self.routing = config.routing
        self.jam_density = config.jam_density
        self.tables = RoutingTables(self.net, self.routing.weight)
        self.distances = self.tables if self.routing.weight == "length" else RoutingTables(self.net, "length")
        self.edge_states: Dict[str, EdgeState] = self.net.edge_states(self.routing.vehicle_spacing)
        self.weather = [(w.start, w.severity) for w in config.weather]

        hierarchy: Hierarchy = scenario.hierarchy
        if self.strategy.type1:
            hierarchy = degenerate_to_t1(hierarchy)
        self.hierarchy = hierarchy
        self.tuner: Optional[PsoTuner] = None
        if self.strategy.uses_pso:
            pso = config.pso.model_copy(update={"seed": seed})
            self.tuner = PsoTuner(hierarchy, pso, fix_fou=self.strategy.type1)

        demands = list(scenario.demands) + expand_demand_events(scenario.events, self.net, self.tables, seed)
        self.pending: List[Demand] = sorted(demands, key=lambda d: (d.depart, d.vehicle_id))
        self.vehicles: Dict[str, Vehicle] = {}
        self.records: List[TripRecord] = []
        self.planned_routes: Dict[str, Tuple[str, ...]] = {}
        self.taken_routes: Dict[str, Tuple[str, ...]] = {}
        self.series: List[StepStats] = []
        self.clock = 0
        self.departed = 0
        self.arrived = 0
        self.stranded = 0
        self._duration_sum = 0
        self._blocked_logged: Set[str] = set()

    @property
    def in_network(self) -> int:
        return len(self.vehicles)

    @property
    def counts(self) -> Dict[str, int]:
        return {e: s.vehicle_count for e, s in self.edge_states.items()}

    def env(self) -> EnvContext:
        severity = 0.0
        for start, value in self.weather:
            if start <= self.clock:
                severity = value
        return EnvContext(self.clock, severity)

    def routing_context(self, counts: Dict[str, int]) -> RoutingContext:
        return RoutingContext(
            self.net,
            self.tables,
            counts,
            self.scenario.config.start_hour,
            self.routing.detour_tolerance,
            self.routing.familiarity_decay,
            self.distances,
        )

    def _finish(self, vehicle: Vehicle, arrival: Optional[int], reason: Optional[str]) -> None:
        length = sum(self.net.edges[e].length for e in vehicle.route_taken)
        self.records.append(TripRecord(vehicle.id, vehicle.depart, arrival, vehicle.waiting_steps, length,
                                       len(vehicle.route_taken), reason))
        self.taken_routes[vehicle.id] = tuple(vehicle.route_taken)

    def _insert(self) -> None:
        still_pending = []
        for demand in self.pending:
            if demand.depart > self.clock:
                still_pending.append(demand)
                continue
            if self.edge_states[demand.origin].full:
                if demand.vehicle_id not in self._blocked_logged:
                    logger.warning(f"Origin edge '{demand.origin}' full; vehicle '{demand.vehicle_id}' waits to enter")
                    self._blocked_logged.add(demand.vehicle_id)
                still_pending.append(demand)
                continue
            planned = dijkstra_route(self.net, demand.origin, demand.dest, self.routing.weight)
            vehicle = Vehicle(demand.vehicle_id, demand.origin, demand.dest, demand.depart, demand.profile,
                              planned, demand.origin, 0.0, [demand.origin], {demand.origin})
            self.planned_routes[vehicle.id] = planned.edges
            self.departed += 1
            if not planned.reachable:
                logger.warning(f"Vehicle '{vehicle.id}': destination '{vehicle.dest}' unreachable; stranded")
                self.stranded += 1
                self._finish(vehicle, None, REASON_STRANDED)
                continue
            self.edge_states[demand.origin].enter()
            self.vehicles[vehicle.id] = vehicle
        self.pending = still_pending

    def _decide(self, vehicle: Vehicle, snapshot: Dict[str, int]) -> Optional[str]:
        candidates = candidate_next_edges(self.net, vehicle.edge, vehicle.dest, self.tables)
        if not candidates:
            return None
        env = self.env()
        ctx = self.routing_context(snapshot)
        hierarchy = self.hierarchy
        if self.tuner is not None:
            narrowed = decision_candidates(vehicle, candidates, ctx)
            if len(narrowed) > 1:
                junction = JunctionContext(
                    tuple((e, candidate_features(vehicle, e, hierarchy, env, ctx)) for e in narrowed),
                    hierarchy,
                    tuple(ctx.density(e) for e in narrowed),
                )
                hierarchy = self.tuner.tune(junction)
        return assign_next_edge(vehicle, candidates, hierarchy, env, self.strategy, ctx)

    def step(self) -> StepStats:
        self._insert()
        snapshot = self.counts
        for state in self.edge_states.values():
            state.recharge(state.edge.lanes * self.routing.discharge_rate)

        order = sorted(self.vehicles.values(), key=lambda v: (v.edge, -v.offset, v.id))
        for vehicle in order:
            edge = self.net.edges[vehicle.edge]
            # traffic around the vehicle, itself excluded
            density = max(snapshot[edge.id] - 1, 0) / edge.length
            speed = edge_speed(edge.speed, density, self.jam_density * edge.lanes)
            start = vehicle.offset
            vehicle.offset = min(edge.length, start + speed)
            moved = vehicle.offset - start
            transferred = False

            if vehicle.offset >= edge.length:
                if edge.id == vehicle.dest:
                    self.edge_states[edge.id].leave()
                    del self.vehicles[vehicle.id]
                    self.arrived += 1
                    arrival = self.clock + 1
                    self._duration_sum += arrival - vehicle.depart
                    self._finish(vehicle, arrival, None)
                    continue
                if vehicle.next_edge is None:
                    vehicle.next_edge = self._decide(vehicle, snapshot)
                    if vehicle.next_edge is None:
                        logger.warning(f"Vehicle '{vehicle.id}' stranded on '{edge.id}': destination unreachable")
                        self.edge_states[edge.id].leave()
                        del self.vehicles[vehicle.id]
                        self.stranded += 1
                        self._finish(vehicle, None, REASON_STRANDED)
                        continue
                source, target = self.edge_states[edge.id], self.edge_states[vehicle.next_edge]
                if not target.full and source.can_discharge:
                    source.leave(discharged=True)
                    target.enter()
                    vehicle.edge = target.edge.id
                    vehicle.offset = 0.0
                    vehicle.route_taken.append(vehicle.edge)
                    vehicle.visited.add(vehicle.edge)
                    vehicle.next_edge = None
                    transferred = True

            if moved < WAITING_SPEED and not transferred:
                vehicle.waiting_steps += 1

        self.clock += 1
        avg = self._duration_sum / self.arrived if self.arrived else None
        stats = StepStats(self.clock, self.departed, self.in_network, self.arrived, self.stranded, avg)
        self.series.append(stats)
        return stats

    def finalize(self) -> SimulationResult:
        for vehicle in sorted(self.vehicles.values(), key=lambda v: v.id):
            self._finish(vehicle, None, REASON_IN_NETWORK)
        undeparted = [
            TripRecord(d.vehicle_id, d.depart, None, 0, 0.0, 0,
                       REASON_INSERTION_BLOCKED if d.depart < self.clock else REASON_NOT_DEPARTED)
            for d in sorted(self.pending, key=lambda d: d.vehicle_id)
        ]
        return SimulationResult(
            self.scenario.name, self.strategy, self.seed, self.clock,
            sorted(self.records, key=lambda r: r.vehicle_id), self.series,
            dict(self.planned_routes), dict(self.taken_routes), undeparted,
            self.tuner.calls if self.tuner else 0,
        )


def run(scenario: Scenario, strategy: Strategy, horizon: Optional[int] = None, seed: int = 1) -> SimulationResult:
    """Simulate `horizon` seconds (default: the scenario's) and collect trip records and the step series."""
    horizon = scenario.horizon if horizon is None else horizon
    sim = Simulation(scenario, strategy, seed)
    logger.info(f"Running '{scenario.name}' with {sim.strategy.value}, seed {seed}, horizon {horizon}s, "
                f"{len(sim.pending)} trips")
    for _ in range(horizon):
        sim.step()
    result = sim.finalize()
    logger.info(f"{sim.strategy.value}: {result.arrived} arrived, {len(result.unfinished)} unfinished, "
                f"{result.pso_calls} PSO calls")
    return result


def average_travel_time_series(records: List[TripRecord], horizon: int) -> List[Optional[float]]:
    """Running mean duration of trips arrived by each step 0..horizon (None before the first arrival)."""
    arrivals = sorted((r.arrival, r.duration) for r in records if r.finished and r.arrival <= horizon)
    series: List[Optional[float]] = []
    total, count, k = 0, 0, 0
    for step in range(horizon + 1):
        while k < len(arrivals) and arrivals[k][0] <= step:
            total += arrivals[k][1]
            count += 1
            k += 1
        series.append(total / count if count else None)
    return series


def mean_average_travel_time(records: List[TripRecord], horizon: int) -> Optional[float]:
    """
    Mean over steps 0..horizon of the running average trip duration.

    Steps before the first arrival are skipped; None when nothing arrived.
    """
    defined = [v for v in average_travel_time_series(records, horizon) if v is not None]
    if not defined:
        return None
    return math.fsum(defined) / len(defined)
