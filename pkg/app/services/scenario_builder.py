"""Turn validated scenario configs into runtime networks, demands and controllers."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import ScenarioSemanticException
from app.core.logging import get_logger
from app.fuzzy.hierarchy import Hierarchy, HierarchySpec, build_hierarchy, default_hierarchy
from app.fuzzy.inference import FuzzyLogicUnit
from app.fuzzy.sets import IT2FuzzySet, LinguisticVariable, Trapezoid
from app.schemas.scenario import (
    DemandEventModel,
    DemandModel,
    DriverProfileModel,
    EdgeModel,
    FuzzySetModel,
    HierarchyModel,
    NetworkModel,
    NodeModel,
    RoutingModel,
    RuleModel,
    ScenarioConfig,
    UnitModel,
    VariableModel,
    rule_table,
)
from app.services.road_network import DriverProfile, Edge, Node, RoadNetwork, RoutingTables

logger = get_logger(__name__)


@dataclass(frozen=True)
class Demand:
    vehicle_id: str
    origin: str
    dest: str
    depart: int
    profile: DriverProfile = field(default_factory=DriverProfile)


@dataclass(frozen=True)
class DemandEvent:
    """Extra trips starting on `area` edges at uniformly drawn times in [start, end]."""

    id: str
    area: Tuple[str, ...]
    count: int
    start: int
    end: int
    destination: object = "any"


@dataclass
class Scenario:
    """Runtime scenario: everything a simulation run needs, already validated."""

    name: str
    network: RoadNetwork
    demands: List[Demand]
    events: List[DemandEvent]
    hierarchy: Hierarchy
    config: ScenarioConfig

    @property
    def horizon(self) -> int:
        return self.config.horizon


def build_network(model: NetworkModel) -> RoadNetwork:
    """
    Raises:
        NetworkValidationException: If the network violates a structural invariant
    """
    nodes = [Node(n.id, n.x, n.y) for n in model.nodes]
    edges = [Edge(e.id, e.from_node, e.to_node, e.length, e.speed, e.lanes) for e in model.edges]
    connections = None
    if model.connections is not None:
        connections = [(c.from_edge, c.to_edge) for c in model.connections]
    return RoadNetwork(nodes, edges, connections)


def _fuzzy_set(model: FuzzySetModel) -> IT2FuzzySet:
    if model.lmf is None:
        return IT2FuzzySet.from_encoding(model.label, tuple(model.umf), model.h_lmf, model.inset)
    return IT2FuzzySet(model.label, Trapezoid(*model.umf, 1.0), Trapezoid(*model.lmf))


def _variable(model: VariableModel) -> LinguisticVariable:
    return LinguisticVariable(model.name, model.lo, model.hi, tuple(_fuzzy_set(s) for s in model.sets), model.units)


def hierarchy_from_model(model: HierarchyModel) -> Hierarchy:
    """
    Raises:
        InvalidMembershipFunctionException: If a set, variable or unit is invalid
        HierarchyConstructionException: If the wiring is not a single-rooted DAG over the leaves
    """
    units = tuple(
        FuzzyLogicUnit(u.name, _variable(u.input1), _variable(u.input2), _variable(u.output), rule_table(u),
                       model.resolution)
        for u in model.units
    )
    wiring = {u.name: tuple(u.inputs) for u in model.units}
    return build_hierarchy(HierarchySpec(units, wiring, model.root))


def _set_model(s: IT2FuzzySet) -> FuzzySetModel:
    if s.h_lmf is not None and s.inset is not None:
        return FuzzySetModel(label=s.label, umf=list(s.umf.breakpoints), h_lmf=s.h_lmf, inset=s.inset)
    return FuzzySetModel(label=s.label, umf=list(s.umf.breakpoints), lmf=list(s.lmf.breakpoints) + [s.lmf.h])


def _variable_model(v: LinguisticVariable) -> VariableModel:
    return VariableModel(name=v.name, lo=v.lo, hi=v.hi, units=v.units, sets=[_set_model(s) for s in v.sets])


def hierarchy_model(h: Hierarchy) -> HierarchyModel:
    """Serializable form of a hierarchy, e.g. to start a scenario override from the defaults."""
    units = []
    for name in h.units:
        unit = h.units[name]
        units.append(UnitModel(
            name=name,
            inputs=tuple(h.wiring[name]),
            input1=_variable_model(unit.input1),
            input2=_variable_model(unit.input2),
            output=_variable_model(unit.output),
            rules=[RuleModel(if1=a, if2=b, then=out) for (a, b), out in unit.rules.items()],
        ))
    resolution = next(iter(h.units.values())).resolution
    return HierarchyModel(units=units, root=h.root, resolution=resolution)


def event_area(event: DemandEventModel, net: RoadNetwork) -> Tuple[str, ...]:
    """Area edges plus every edge leaving an area junction, sorted by id."""
    area = set(event.edges)
    for node_id in event.nodes:
        area.update(e.id for e in net.edges.values() if e.from_node == node_id)
    return tuple(sorted(area))


def check_references(config: ScenarioConfig, net: RoadNetwork) -> None:
    """
    Raises:
        ScenarioSemanticException: Naming the first missing edge, junction or duplicated vehicle id
    """
    seen = set()
    for demand in config.demands:
        if demand.id in seen:
            raise ScenarioSemanticException(f"Duplicate vehicle id '{demand.id}'", demand.id)
        seen.add(demand.id)
        for edge_id in (demand.origin, demand.dest):
            if edge_id not in net.edges:
                raise ScenarioSemanticException(
                    f"Demand '{demand.id}' references unknown edge '{edge_id}'", edge_id
                )
    for event in config.demand_events:
        for edge_id in event.edges + (event.destination if isinstance(event.destination, list) else []):
            if edge_id not in net.edges:
                raise ScenarioSemanticException(
                    f"Demand event '{event.id}' references unknown edge '{edge_id}'", edge_id
                )
        for node_id in event.nodes:
            if node_id not in net.nodes:
                raise ScenarioSemanticException(
                    f"Demand event '{event.id}' references unknown junction '{node_id}'", node_id
                )
        if event.count and not event_area(event, net):
            raise ScenarioSemanticException(f"Demand event '{event.id}' has an empty area", event.id)


def build_scenario(config: ScenarioConfig) -> Scenario:
    """
    Build the runtime scenario from a config whose network is inline.

    Raises:
        ScenarioSemanticException: If the network is missing or a reference is dangling
        NetworkValidationException: If the network is invalid
    """
    if config.network is None:
        raise ScenarioSemanticException("Scenario network was not resolved", config.network_file)
    net = build_network(config.network)
    check_references(config, net)
    hierarchy = hierarchy_from_model(config.hierarchy) if config.hierarchy else default_hierarchy(settings.km_resolution)
    demands = [
        Demand(d.id, d.origin, d.dest, d.depart, DriverProfile(d.profile.familiarity, d.profile.usual_speed))
        for d in config.demands
    ]
    events = [
        DemandEvent(e.id, event_area(e, net), e.count, e.start, e.end, e.destination)
        for e in config.demand_events
    ]
    return Scenario(config.name, net, demands, events, hierarchy, config)


def _random_profile(rng: np.random.Generator) -> DriverProfile:
    return DriverProfile(round(float(rng.uniform(0.0, 1.0)), 3), round(float(rng.uniform(10.0, 30.0)), 3))


def expand_demand_events(events: List[DemandEvent], net: RoadNetwork, tables: RoutingTables,
                         seed: int) -> List[Demand]:
    """
    Draw the trips of every demand event with a PRNG seeded by `seed`.

    Destinations are drawn among edges reachable from the drawn origin.
    """
    rng = np.random.default_rng(seed)
    all_edges = sorted(net.edges)
    demands = []
    for event in events:
        if isinstance(event.destination, list):
            pool = sorted(event.destination)
        elif event.destination == "area":
            pool = list(event.area)
        else:
            pool = all_edges
        for i in range(event.count):
            origin = event.area[int(rng.integers(len(event.area)))]
            depart = int(rng.integers(event.start, event.end + 1))
            targets = [e for e in pool if e != origin and tables.reachable(origin, e)]
            if not targets:
                logger.warning(f"Demand event '{event.id}': no destination reachable from '{origin}'")
                continue
            dest = targets[int(rng.integers(len(targets)))]
            demands.append(Demand(f"{event.id}_{i}", origin, dest, depart, _random_profile(rng)))
    return demands


def grid_network(rows: int, cols: int, edge_length: float = 200.0, street_speed: float = 20.0,
                 avenue_speed: float = 40.0) -> NetworkModel:
    """
    Two-way grid of rows x cols junctions. East-west streets get `street_speed`,
    north-south avenues `avenue_speed`; with the defaults every monotone path
    between two junctions takes the same free-flow time.
    """
    nodes = [NodeModel(id=f"n{r}_{c}", x=c * edge_length, y=r * edge_length) for r in range(rows) for c in range(cols)]
    edges = []

    def add(r1, c1, r2, c2, speed):
        for (ra, ca), (rb, cb) in (((r1, c1), (r2, c2)), ((r2, c2), (r1, c1))):
            edges.append(EdgeModel(id=f"n{ra}_{ca}-n{rb}_{cb}", from_node=f"n{ra}_{ca}", to_node=f"n{rb}_{cb}",
                                   length=edge_length, speed=speed, lanes=1))

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                add(r, c, r, c + 1, street_speed)
            if r + 1 < rows:
                add(r, c, r + 1, c, avenue_speed)
    return NetworkModel(nodes=nodes, edges=edges)


def build_grid_scenario(rows: int = 8, cols: int = 8, vehicles: int = 500, seed: int = 1,
                        edge_length: float = 200.0, event_count: int = 500,
                        event_window: Tuple[int, int] = (1000, 1500), departure_window: Tuple[int, int] = (0, 1800),
                        horizon: int = 3600, hierarchy: Optional[Hierarchy] = None) -> ScenarioConfig:
    """
    Congestion-injection scenario on a grid: random O/D trips plus a burst of
    `event_count` trips entering four consecutive eastbound edges of the
    southern boundary street, bound for the north-eastern quarter.

    Routing only considers equal-time alternatives (detour tolerance 0). A
    `hierarchy` is embedded as the scenario's controller override.
    """
    if rows < 2 or cols < 5:
        raise ValueError("Grid needs at least 2 rows and 5 columns")
    rng = np.random.default_rng(seed)
    network = grid_network(rows, cols, edge_length)
    edge_ids = sorted(e.id for e in network.edges)

    demands = []
    for i in range(vehicles):
        origin, dest = (edge_ids[k] for k in rng.choice(len(edge_ids), size=2, replace=False))
        depart = int(rng.integers(departure_window[0], departure_window[1] + 1))
        profile = _random_profile(rng)
        demands.append(DemandModel(
            id=f"v{i}", origin=origin, dest=dest, depart=depart,
            profile=DriverProfileModel(familiarity=profile.familiarity, usual_speed=profile.usual_speed),
        ))

    first = max(0, cols // 2 - 3)
    area = [f"n0_{c}-n0_{c + 1}" for c in range(first, first + 4)]
    # edges leaving junctions north-east of the area's end
    targets = sorted(e.id for e in network.edges
                     if _grid_position(e.from_node)[0] >= rows // 2 and _grid_position(e.from_node)[1] >= first + 4)
    event = DemandEventModel(id="area_a", edges=area, count=event_count, start=event_window[0],
                             end=event_window[1], destination=targets)
    logger.info(f"Generated {rows}x{cols} grid scenario with {vehicles} trips and a {event_count}-trip burst")
    return ScenarioConfig(name=f"grid_{rows}x{cols}", network=network, demands=demands,
                          demand_events=[event] if event_count else [], horizon=horizon,
                          routing=RoutingModel(detour_tolerance=0.0),
                          hierarchy=hierarchy_model(hierarchy) if hierarchy is not None else None)


def _grid_position(node_id: str) -> Tuple[int, int]:
    row, col = node_id[1:].split("_")
    return int(row), int(col)
