from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class HealthResponse(BaseModel):
    """Response model for health check endpoint."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "status": "healthy",
                "version": "1.0.0",
                "strategies": ["dijkstra", "hit1", "hit1-pso", "hit2", "hit2-pso"],
            }
        }
    )

    status: str = Field(..., description="Health status")
    version: str = Field(..., description="API version")
    strategies: List[str] = Field(..., description="Routing strategies accepted by the simulation endpoints")


class SimulationTaskResponse(BaseModel):
    task_id: str
    status: str
    message: str


class SimulationStatusResponse(BaseModel):
    """Progress and, once completed, the run summary or the comparison rows."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "task_id": "6f1c2a9e-1f0b-4c39-9a43-0d4f5b7f0e11",
                "status": "completed",
                "progress": 100,
                "result": {
                    "strategy": "hit2-pso",
                    "mean_avg_travel_time": 5.0,
                    "arrived": 1,
                    "unfinished": 0,
                    "altered_route_fraction": 0.0,
                },
                "error": None,
                "logs": ["[10:00:00] Running hit2-pso", "[10:00:01] Run completed: 1 vehicles arrived"],
            }
        }
    )

    task_id: str
    status: str
    progress: Optional[int] = None
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    logs: List[str] = Field(default_factory=list)
