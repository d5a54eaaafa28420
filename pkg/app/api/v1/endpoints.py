"""API v1 endpoints: re-export of the router assembled in `app.api.v1.routers`."""

from app.api.v1.routers import api_router as router

__all__ = ["router"]
