"""Simulation endpoints: single-strategy runs, five-strategy comparisons and their status."""

import json
from typing import Any, Dict, Optional

from fastapi import APIRouter, BackgroundTasks, File, Form, HTTPException, UploadFile

from app.core.exceptions import ScenarioParseException, ScenarioSemanticException
from app.core.logging import get_logger
from app.parsers.native_parser import parse_native
from app.schemas.requests import CompareRequest, SimulationRequest
from app.schemas.responses import SimulationStatusResponse, SimulationTaskResponse
from app.schemas.scenario import ScenarioConfig
from app.services.background_tasks import task_manager
from app.services.route_assignment import Strategy

router = APIRouter(prefix="/simulations", tags=["simulations"])
logger = get_logger(__name__)


def _scenario(document: Dict[str, Any]) -> ScenarioConfig:
    """Validate an inline scenario, mapping scenario errors to 400."""
    if document.get("network_file"):
        raise HTTPException(status_code=400, detail="'network_file' is not accepted over HTTP; inline the network")
    return _parse(json.dumps(document))


def _parse(text: str) -> ScenarioConfig:
    try:
        return parse_native(text)
    except (ScenarioParseException, ScenarioSemanticException) as e:
        logger.warning(f"Rejected scenario: {e}")
        raise HTTPException(status_code=400, detail=f"Invalid scenario: {e}")


def _start_run(background_tasks: BackgroundTasks, config: ScenarioConfig, strategy: Strategy, seed: int,
               horizon: Optional[int]) -> SimulationTaskResponse:
    task_id = task_manager.create_task("run", scenario=config.name, strategy=strategy.value, seed=seed)
    background_tasks.add_task(task_manager.run_simulation_task, task_id, config, strategy, seed, horizon)
    return SimulationTaskResponse(
        task_id=task_id,
        status="started",
        message=f"Simulation of '{config.name}' with {strategy.value} started. Use the status endpoint to follow it."
    )


@router.post("", response_model=SimulationTaskResponse)
async def start_simulation(request: SimulationRequest, background_tasks: BackgroundTasks):
    """
    Simulate one routing strategy in the background.

    Returns a task ID immediately; poll `GET /simulations/{task_id}` for the summary.
    """
    config = _scenario(request.scenario)
    logger.info(f"Starting simulation of '{config.name}' with {request.strategy.value}")
    return _start_run(background_tasks, config, request.strategy, request.seed, request.horizon)


@router.post("/compare", response_model=SimulationTaskResponse)
async def start_comparison(request: CompareRequest, background_tasks: BackgroundTasks):
    """
    Run dijkstra, hit1, hit1-pso, hit2 and hit2-pso on identical demand.

    The completed task's result holds one row per strategy in that order.
    """
    config = _scenario(request.scenario)
    task_id = task_manager.create_task("compare", scenario=config.name, seed=request.seed)
    background_tasks.add_task(task_manager.run_compare_task, task_id, config, request.seed, request.horizon)
    logger.info(f"Starting comparison on '{config.name}'")
    return SimulationTaskResponse(
        task_id=task_id,
        status="started",
        message=f"Comparison on '{config.name}' started. Use the status endpoint to follow it."
    )


@router.post("/upload", response_model=SimulationTaskResponse)
async def upload_simulation(
    background_tasks: BackgroundTasks,
    file: UploadFile = File(...),
    strategy: Strategy = Form(Strategy.HIT2_PSO),
    seed: int = Form(1),
    horizon: Optional[int] = Form(None),
):
    """Simulate a scenario uploaded as a native `.json` file."""
    if not file.filename or not file.filename.endswith(".json"):
        raise HTTPException(status_code=400, detail="Only JSON scenario files are supported")
    if horizon is not None and horizon < 0:
        raise HTTPException(status_code=400, detail="horizon must be non-negative")
    content = await file.read()
    try:
        text = content.decode("utf-8")
    except UnicodeDecodeError:
        raise HTTPException(status_code=400, detail="Scenario file must be UTF-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError:
        # let the scenario parser report line and column
        config = _parse(text)
    else:
        config = _scenario(document) if isinstance(document, dict) else _parse(text)
    return _start_run(background_tasks, config, strategy, seed, horizon)


@router.get("/{task_id}", response_model=SimulationStatusResponse)
async def get_simulation_status(task_id: str):
    """Current status, progress and, when completed, the result of a simulation task."""
    status = task_manager.get_task_status(task_id)
    if not status:
        logger.warning(f"Task not found: {task_id}")
        raise HTTPException(status_code=404, detail="Task not found")
    return status
