import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager

from app.core.config import settings
from app.core.logging import setup_logging, get_logger
from app.api.v1.endpoints import router as api_router
from app.services.background_tasks import task_manager
from app.services.route_assignment import STRATEGY_ORDER


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager."""
    setup_logging()
    logger = get_logger(__name__)
    logger.info(f"Starting {settings.project_name}")
    logger.info(f"Version: {settings.version}")
    await task_manager.start_cleanup_task()

    yield

    logger.info(f"Shutting down {settings.project_name}")


logger = get_logger(__name__)

app = FastAPI(
    lifespan=lifespan,
    title=settings.project_name,
    description="""
# Fuzzy Route Assignment API

Simulates dynamic route assignment on a road network. At every junction a
vehicle picks its next edge with one of five strategies:

- **dijkstra**: follow the free-flow shortest route
- **hit1** / **hit2**: rank candidate edges with a hierarchical type-1 / interval type-2 fuzzy controller
- **hit1-pso** / **hit2-pso**: the same, with the root controller re-tuned by particle swarm optimization at each decision

## Quick Start

1. **Health Check**
   ```
   GET /api/v1/health
   ```

2. **Simulate one strategy**
   ```
   POST /api/v1/simulations
   ```

3. **Compare all strategies**
   ```
   POST /api/v1/simulations/compare
   ```

4. **Poll the task**
   ```
   GET /api/v1/simulations/{task_id}
   ```

## Example Request

```json
{
  "strategy": "hit2-pso",
  "seed": 1,
  "scenario": {
    "name": "minimal",
    "network": {
      "nodes": [{"id": "n0"}, {"id": "n1", "x": 100}],
      "edges": [{"id": "e0", "from": "n0", "to": "n1", "length": 100, "speed": 20}]
    },
    "demands": [{"id": "v0", "origin": "e0", "dest": "e0", "depart": 0}],
    "horizon": 60
  }
}
```

## Configuration

- `LOG_LEVEL`: Logging level (INFO, DEBUG, etc.)
- `LOG_DIR`, `LOG_TO_FILE`: Rotating log file location and toggle
- `DEFAULT_SEED`, `DEFAULT_HORIZON`, `OUTPUT_DIR`: Command-line defaults

## Documentation

- **Swagger UI**: `/docs`
- **ReDoc**: `/redoc`
""",
    version=settings.version,
    license_info={
        "name": "MIT",
        "url": "https://opensource.org/licenses/MIT"
    }
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(api_router, prefix=settings.api_v1_prefix)


@app.get("/")
async def root():
    """Root endpoint with API information."""
    return {
        "message": settings.project_name,
        "version": settings.version,
        "docs": "/docs",
        "health": f"{settings.api_v1_prefix}/health"
    }


@app.get("/info")
async def info():
    """API information endpoint."""
    prefix = settings.api_v1_prefix
    return {
        "name": settings.project_name,
        "version": settings.version,
        "description": settings.description,
        "endpoints": {
            "health": f"{prefix}/health",
            "simulate": f"{prefix}/simulations",
            "compare": f"{prefix}/simulations/compare",
            "upload": f"{prefix}/simulations/upload",
            "status": f"{prefix}/simulations/{{task_id}}"
        },
        "strategies": [s.value for s in STRATEGY_ORDER]
    }


if __name__ == "__main__":
    logger.info(f"Serving on http://{settings.api_host}:{settings.api_port} (docs at /docs)")
    uvicorn.run(
        "main:app",
        host=settings.api_host,
        port=settings.api_port,
        reload=False,
        log_level=settings.log_level.lower()
    )
