"""Health check endpoints."""

from fastapi import APIRouter

from app.core.config import settings
from app.schemas.responses import HealthResponse
from app.services.route_assignment import STRATEGY_ORDER

router = APIRouter(tags=["health"])


@router.get("/health", response_model=HealthResponse)
async def health_check():
    """
    Health check endpoint.

    Returns the API status and the routing strategies the simulation endpoints accept.
    """
    return HealthResponse(
        status="healthy",
        version=settings.version,
        strategies=[s.value for s in STRATEGY_ORDER]
    )
