"""API v1 routers."""

from fastapi import APIRouter

from app.api.v1.routers import health, simulations

api_router = APIRouter()

api_router.include_router(health.router)
api_router.include_router(simulations.router)
