from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.validators import (
    validate_breakpoints,
    validate_identifier,
    validate_unit_interval,
    validate_universe,
)

JAM_DENSITY_PER_LANE = 1.0 / 7.5


class NodeModel(BaseModel):
    """Junction with planar coordinates in meters."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(..., description="Junction identifier")
    x: float = Field(0.0, description="Easting (m)")
    y: float = Field(0.0, description="Northing (m)")

    @field_validator("id")
    @classmethod
    def validate_id(cls, v):
        return validate_identifier(v, "node id")


class EdgeModel(BaseModel):
    """Directed road segment."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    id: str = Field(..., description="Edge identifier")
    from_node: str = Field(..., alias="from", description="Upstream junction id")
    to_node: str = Field(..., alias="to", description="Downstream junction id")
    length: float = Field(..., gt=0, description="Length (m)")
    speed: float = Field(..., gt=0, description="Speed limit (m/s)")
    lanes: int = Field(1, ge=1, description="Lane count")

    @field_validator("id")
    @classmethod
    def validate_id(cls, v):
        return validate_identifier(v, "edge id")


class ConnectionModel(BaseModel):
    """Allowed turn from an incoming edge to an outgoing edge."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    from_edge: str = Field(..., alias="from")
    to_edge: str = Field(..., alias="to")


class NetworkModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nodes: List[NodeModel] = Field(default_factory=list)
    edges: List[EdgeModel] = Field(default_factory=list)
    connections: Optional[List[ConnectionModel]] = Field(
        None, description="Allowed turns; omitted means every turn except the immediate U-turn"
    )


class DriverProfileModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    familiarity: float = Field(0.5, ge=0.0, le=1.0, description="Familiarity with the habitual route")
    usual_speed: float = Field(15.0, ge=0.0, le=40.0, description="Usual driving speed (m/s)")


class DemandModel(BaseModel):
    """One vehicle trip."""

    model_config = ConfigDict(extra="forbid")

    id: str
    origin: str = Field(..., description="Origin edge id")
    dest: str = Field(..., description="Destination edge id")
    depart: int = Field(..., ge=0, description="Departure time (s)")
    profile: DriverProfileModel = Field(default_factory=DriverProfileModel)

    @field_validator("id")
    @classmethod
    def validate_id(cls, v):
        return validate_identifier(v, "vehicle id")


class DemandEventModel(BaseModel):
    """Burst of extra trips originating in an area during a time window."""

    model_config = ConfigDict(extra="forbid")

    id: str
    edges: List[str] = Field(default_factory=list, description="Area edges")
    nodes: List[str] = Field(default_factory=list, description="Area junctions; their outgoing edges join the area")
    count: int = Field(..., ge=0)
    start: int = Field(..., ge=0)
    end: int = Field(..., ge=0)
    destination: Union[Literal["any", "area"], List[str]] = Field(
        "any", description="'any' edge of the network, an edge of the 'area', or an explicit edge list"
    )

    @model_validator(mode="after")
    def check_window(self):
        if self.start > self.end:
            raise ValueError(f"Demand event '{self.id}': start {self.start} is after end {self.end}")
        if self.count > 0 and not (self.edges or self.nodes):
            raise ValueError(f"Demand event '{self.id}' has no area edges or nodes")
        return self


class PsoConfig(BaseModel):
    """Particle swarm constants and stopping criteria."""

    model_config = ConfigDict(extra="forbid")

    swarm_size: int = Field(30, ge=2, description="Particles per swarm (30 or 80 in the reference setup)")
    iterations_per_call: int = Field(10, ge=1, description="Iterations per routing decision")
    w: float = Field(0.99, gt=0, description="Inertia weight")
    c1: float = Field(2.0, ge=0, description="Cognitive acceleration")
    c2: float = Field(2.0, ge=0, description="Social acceleration")
    vmax_fraction: float = Field(0.2, gt=0, le=1.0, description="Velocity clamp as a fraction of each range")
    seed: int = Field(1, description="PRNG seed")
    stall_patience: int = Field(3, ge=0, description="Stop after this many stalled iterations; 0 disables")
    stall_tolerance: float = Field(1e-6, ge=0, description="Minimum gbest improvement that resets the stall count")
    min_density: float = Field(
        0.02, ge=0, description="Tune only where some candidate carries at least this density (veh/m); 0 tunes everywhere"
    )


class RoutingModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weight: Literal["time", "length"] = Field("time", description="Shortest-path edge cost")
    detour_tolerance: Optional[float] = Field(
        0.3, ge=0, description="Relative cost-to-go slack of the itinerary pre-selection; null disables it"
    )
    familiarity_decay: float = Field(0.5, ge=0, le=1.0, description="Familiarity factor off the habitual route")
    discharge_rate: float = Field(0.5, gt=0, description="Vehicles per second per lane leaving an edge")
    vehicle_spacing: float = Field(7.5, gt=0, description="Effective vehicle length for storage capacity (m)")


class FuzzySetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: str
    umf: List[float] = Field(..., description="Upper trapezoid breakpoints [a, b, c, d]")
    lmf: Optional[List[float]] = Field(None, description="Explicit lower trapezoid [a, b, c, d, h]")
    h_lmf: float = Field(0.9, gt=0, le=1.0)
    inset: float = Field(0.1, ge=0, le=0.5)

    @field_validator("umf")
    @classmethod
    def validate_umf(cls, v):
        return list(validate_breakpoints(v, "umf"))

    @field_validator("lmf")
    @classmethod
    def validate_lmf(cls, v):
        if v is None:
            return v
        if len(v) != 5:
            raise ValueError(f"'lmf' needs [a, b, c, d, h], got {len(v)} values")
        return list(validate_breakpoints(v[:4], "lmf")) + [validate_unit_interval(v[4], "lmf height", open_low=True)]


class VariableModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    lo: float
    hi: float
    units: str = ""
    sets: List[FuzzySetModel] = Field(..., min_length=1)

    @model_validator(mode="after")
    def check_universe(self):
        validate_universe(self.lo, self.hi, self.name)
        return self


class RuleModel(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    if1: str = Field(..., description="Label of the first input")
    if2: str = Field(..., description="Label of the second input")
    then: str = Field(..., description="Consequent label of the output")


class UnitModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    inputs: Tuple[str, str] = Field(..., description="Sources of both input slots: leaf features or unit names")
    input1: VariableModel
    input2: VariableModel
    output: VariableModel
    rules: List[RuleModel]


class HierarchyModel(BaseModel):
    """Override of the preference controller: units in declaration order plus the root name."""

    model_config = ConfigDict(extra="forbid")

    units: List[UnitModel] = Field(..., min_length=1)
    root: Optional[str] = None
    resolution: int = Field(201, ge=2, description="Output grid points used by type reduction")


class WeatherModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    start: int = Field(..., ge=0, description="Simulation second from which the severity holds")
    severity: float = Field(..., ge=0.0, le=1.0)


class ScenarioConfig(BaseModel):
    """Native scenario file."""

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "name": "minimal",
                "network": {
                    "nodes": [{"id": "n0", "x": 0, "y": 0}, {"id": "n1", "x": 100, "y": 0}],
                    "edges": [{"id": "e0", "from": "n0", "to": "n1", "length": 100, "speed": 20, "lanes": 1}],
                },
                "demands": [{"id": "v0", "origin": "e0", "dest": "e0", "depart": 0}],
                "horizon": 60,
            }
        },
    )

    name: str = "scenario"
    network: Optional[NetworkModel] = None
    network_file: Optional[str] = Field(None, description="Path of a .net.xml or .json network, relative to the scenario")
    demands: List[DemandModel] = Field(default_factory=list)
    demand_events: List[DemandEventModel] = Field(default_factory=list)
    hierarchy: Optional[HierarchyModel] = None
    pso: PsoConfig = Field(default_factory=PsoConfig)
    routing: RoutingModel = Field(default_factory=RoutingModel)
    jam_density: float = Field(JAM_DENSITY_PER_LANE, gt=0, description="Jam density per lane (veh/m)")
    horizon: int = Field(3600, ge=0, description="Simulated seconds")
    start_hour: float = Field(8.0, ge=0.0, lt=24.0, description="Hour of day at simulation second 0")
    weather: List[WeatherModel] = Field(default_factory=list, description="Piecewise-constant severity schedule")

    @model_validator(mode="after")
    def check_network_source(self):
        if self.network is None and self.network_file is None:
            raise ValueError("Scenario needs either 'network' or 'network_file'")
        return self

    @field_validator("weather")
    @classmethod
    def sort_weather(cls, v):
        return sorted(v, key=lambda w: w.start)


def rule_table(unit: UnitModel) -> Dict[Tuple[str, str], str]:
    return {(r.if1, r.if2): r.then for r in unit.rules}
