from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.services.route_assignment import Strategy

_SCENARIO_EXAMPLE = {
    "name": "minimal",
    "network": {
        "nodes": [{"id": "n0", "x": 0, "y": 0}, {"id": "n1", "x": 100, "y": 0}],
        "edges": [{"id": "e0", "from": "n0", "to": "n1", "length": 100, "speed": 20, "lanes": 1}],
    },
    "demands": [{"id": "v0", "origin": "e0", "dest": "e0", "depart": 0}],
    "horizon": 60,
}


class SimulationRequest(BaseModel):
    """Request model for simulating one strategy on an inline scenario."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"scenario": _SCENARIO_EXAMPLE, "strategy": "hit2-pso", "seed": 1, "horizon": 60}
        }
    )

    scenario: Dict[str, Any] = Field(..., description="Native scenario document with an inline network")
    strategy: Strategy = Field(Strategy.HIT2_PSO, description="Routing strategy")
    seed: int = Field(1, description="Seed for demand events and the particle swarm")
    horizon: Optional[int] = Field(None, ge=0, description="Seconds to simulate; defaults to the scenario's")


class CompareRequest(BaseModel):
    """Request model for running all five strategies on the same scenario."""

    model_config = ConfigDict(
        json_schema_extra={"example": {"scenario": _SCENARIO_EXAMPLE, "seed": 1, "horizon": 60}}
    )

    scenario: Dict[str, Any] = Field(..., description="Native scenario document with an inline network")
    seed: int = Field(1, description="Seed for demand events and the particle swarm")
    horizon: Optional[int] = Field(None, ge=0, description="Seconds to simulate; defaults to the scenario's")
