"""Per-junction route assignment: shortest-path baseline and fuzzy preference strategies."""

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

from app.core.logging import get_logger
from app.fuzzy.hierarchy import CandidateFeatures, Hierarchy, evaluate_preference
from app.services.road_network import RoadNetwork, RoutingTables

if TYPE_CHECKING:
    from app.services.traffic_simulation import Vehicle

logger = get_logger(__name__)

# Remaining costs and distances closer than this are treated as equal when breaking ties.
COST_TIE_DIGITS = 9


class Strategy(str, Enum):
    DIJKSTRA = "dijkstra"
    HIT1 = "hit1"
    HIT1_PSO = "hit1-pso"
    HIT2 = "hit2"
    HIT2_PSO = "hit2-pso"

    @property
    def is_fuzzy(self) -> bool:
        return self is not Strategy.DIJKSTRA

    @property
    def uses_pso(self) -> bool:
        return self in (Strategy.HIT1_PSO, Strategy.HIT2_PSO)

    @property
    def type1(self) -> bool:
        return self in (Strategy.HIT1, Strategy.HIT1_PSO)


# Canonical order of comparison outputs.
STRATEGY_ORDER: Tuple[Strategy, ...] = (
    Strategy.DIJKSTRA,
    Strategy.HIT1,
    Strategy.HIT1_PSO,
    Strategy.HIT2,
    Strategy.HIT2_PSO,
)


@dataclass(frozen=True)
class EnvContext:
    clock: int = 0
    weather: float = 0.0


@dataclass
class RoutingContext:
    """Read-only view of the network state a routing decision is taken against."""

    net: RoadNetwork
    tables: RoutingTables
    counts: Dict[str, int]
    start_hour: float = 8.0
    detour_tolerance: Optional[float] = 0.3
    familiarity_decay: float = 0.5
    distances: Optional[RoutingTables] = None

    def density(self, edge_id: str) -> float:
        return self.counts.get(edge_id, 0) / self.net.edges[edge_id].length

    def remaining_distance(self, edge_id: str, dest: str) -> float:
        """Free-flow length from entering `edge_id` to the end of `dest`."""
        if self.distances is None:
            self.distances = self.tables if self.tables.weight == "length" else RoutingTables(self.net, "length")
        return self.distances.remaining_cost(edge_id, dest)


def departure_hour(depart: float, start_hour: float) -> float:
    return (start_hour + depart / 3600.0) % 24.0


def candidate_features(vehicle: "Vehicle", edge_id: str, hierarchy: Hierarchy, env: EnvContext,
                       ctx: RoutingContext) -> CandidateFeatures:
    """Leaf inputs for one candidate, each clamped into the universe of the slot reading it."""
    edge = ctx.net.edges[edge_id]
    familiarity = vehicle.profile.familiarity
    if edge_id not in vehicle.planned.edges:
        familiarity *= ctx.familiarity_decay
    raw = {
        "density": ctx.density(edge_id),
        "max_speed_norm": edge.speed / ctx.net.max_speed,
        "familiarity": familiarity,
        "usual_speed": vehicle.profile.usual_speed,
        "departure_time": departure_hour(vehicle.depart, ctx.start_hour),
        "weather": env.weather,
    }
    return CandidateFeatures(**{name: hierarchy.leaf_variable(name).clamp(value) for name, value in raw.items()})


def decision_candidates(vehicle: "Vehicle", candidates: Sequence[str], ctx: RoutingContext) -> List[str]:
    """
    Narrow the candidates before ranking them.

    Edges already driven are kept only when nothing else is left. Then only
    candidates whose free-flow cost-to-go stays within (1 + detour_tolerance)
    of the best one survive.
    """
    remaining = [e for e in candidates if e not in vehicle.visited] or list(candidates)
    if ctx.detour_tolerance is not None and len(remaining) > 1:
        costs = {e: ctx.tables.remaining_cost(e, vehicle.dest) for e in remaining}
        limit = min(costs.values()) * (1.0 + ctx.detour_tolerance)
        remaining = [e for e in remaining if costs[e] <= limit + 1e-9]
    return remaining


def rank_by_preference(preferences: Dict[str, float], remaining_distances: Dict[str, float]) -> str:
    """Highest preference; ties go to the shorter free-flow remaining distance, then the lower edge id."""
    return min(
        preferences,
        key=lambda e: (-preferences[e], round(remaining_distances[e], COST_TIE_DIGITS), e),
    )


def assign_next_edge(vehicle: "Vehicle", candidates: Sequence[str], hierarchy: Optional[Hierarchy],
                     env: EnvContext, strategy: Strategy, ctx: RoutingContext) -> str:
    """
    Choose the next edge at the end of the vehicle's current edge.

    The baseline follows the planned shortest route; fuzzy strategies take the
    candidate with the highest preference index.
    """
    if not candidates:
        raise ValueError(f"Vehicle '{vehicle.id}' has no candidate edges")
    strategy = Strategy(strategy)
    if not strategy.is_fuzzy:
        planned = vehicle.planned.next_edge(vehicle.edge)
        if planned in candidates:
            return planned
        logger.debug(f"Vehicle '{vehicle.id}' left its planned route; falling back to cost-to-go")
        return min(candidates, key=lambda e: (round(ctx.tables.remaining_cost(e, vehicle.dest), COST_TIE_DIGITS), e))

    remaining = decision_candidates(vehicle, candidates, ctx)
    if len(remaining) == 1:
        return remaining[0]
    preferences = {
        e: evaluate_preference(hierarchy, candidate_features(vehicle, e, hierarchy, env, ctx)) for e in remaining
    }
    distances = {e: ctx.remaining_distance(e, vehicle.dest) for e in remaining}
    choice = rank_by_preference(preferences, distances)
    logger.debug(f"Vehicle '{vehicle.id}' at '{vehicle.edge}': preferences {preferences} -> '{choice}'")
    return choice
