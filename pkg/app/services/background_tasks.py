import asyncio
import uuid
from dataclasses import asdict
from datetime import datetime, timedelta
from typing import Any, Dict, Optional

from app.core.logging import get_logger
from app.schemas.responses import SimulationStatusResponse
from app.schemas.scenario import ScenarioConfig
from app.services.experiment_service import compare, comparison_rows, run_strategy, run_summary
from app.services.route_assignment import STRATEGY_ORDER, Strategy

logger = get_logger(__name__)


class BackgroundTaskManager:
    def __init__(self):
        self.tasks: Dict[str, Dict[str, Any]] = {}
        self._cleanup_task = None

    async def start_cleanup_task(self):
        """Start background cleanup task"""
        if self._cleanup_task is None:
            self._cleanup_task = asyncio.create_task(self._cleanup_old_tasks())

    async def _cleanup_old_tasks(self):
        """Drop finished tasks older than one hour, every five minutes"""
        while True:
            try:
                cutoff = datetime.now() - timedelta(hours=1)
                stale = [
                    task_id for task_id, info in self.tasks.items()
                    if info['status'] in ('completed', 'failed') and info['created_at'] < cutoff
                ]
                for task_id in stale:
                    del self.tasks[task_id]
                    logger.info(f"Cleaned up old task: {task_id}")
                await asyncio.sleep(300)
            except Exception as e:
                logger.error(f"Error in cleanup task: {e}")
                await asyncio.sleep(60)

    def create_task(self, task_type: str, **kwargs) -> str:
        """Create a new background task"""
        task_id = str(uuid.uuid4())
        self.tasks[task_id] = {
            'id': task_id,
            'type': task_type,
            'status': 'pending',
            'progress': 0,
            'created_at': datetime.now(),
            'kwargs': kwargs,
            'result': None,
            'error': None,
            'logs': []
        }
        logger.info(f"Created background task: {task_id} ({task_type})")
        return task_id

    def update_task_status(self, task_id: str, status: str, progress: Optional[int] = None,
                           result: Optional[Dict[str, Any]] = None, error: Optional[str] = None,
                           log: Optional[str] = None):
        if task_id not in self.tasks:
            logger.warning(f"Task not found: {task_id}")
            return

        task = self.tasks[task_id]
        task['status'] = status
        if progress is not None:
            task['progress'] = progress
        if result is not None:
            task['result'] = result
        if error is not None:
            task['error'] = error
        if log is not None:
            task['logs'].append(f"[{datetime.now().strftime('%H:%M:%S')}] {log}")
        logger.info(f"Updated task {task_id}: {status} (progress: {task['progress']}%)")

    def get_task_status(self, task_id: str) -> Optional[SimulationStatusResponse]:
        if task_id not in self.tasks:
            return None
        task = self.tasks[task_id]
        return SimulationStatusResponse(
            task_id=task_id,
            status=task['status'],
            progress=task.get('progress'),
            result=task.get('result'),
            error=task.get('error'),
            logs=task.get('logs', [])
        )

    async def run_simulation_task(self, task_id: str, config: ScenarioConfig, strategy: Strategy,
                                  seed: int, horizon: Optional[int]):
        """Simulate one strategy in a worker thread so the event loop stays responsive"""
        try:
            self.update_task_status(task_id, 'running', 1, log=f"Running {Strategy(strategy).value}")
            result = await asyncio.to_thread(run_strategy, config, strategy, seed, horizon)
            summary = run_summary(result)
            self.update_task_status(task_id, 'completed', 100, result=summary,
                                    log=f"Run completed: {result.arrived} vehicles arrived")
        except Exception as e:
            logger.error(f"Error in background simulation task {task_id}: {e}")
            self.update_task_status(task_id, 'failed', error=str(e), log=f"Run failed: {e}")

    async def run_compare_task(self, task_id: str, config: ScenarioConfig, seed: int, horizon: Optional[int]):
        """Run all five strategies, reporting progress after each one"""
        done = []

        def on_result(strategy, result):
            done.append(strategy)
            self.update_task_status(task_id, 'running', int(100 * len(done) / len(STRATEGY_ORDER)),
                                    log=f"{strategy.value}: {result.arrived} arrived")

        try:
            self.update_task_status(task_id, 'running', 1, log="Comparison started")
            results = await asyncio.to_thread(compare, config, seed, horizon, 1, STRATEGY_ORDER, on_result)
            rows = [asdict(row) for row in comparison_rows(results)]
            self.update_task_status(task_id, 'completed', 100, result={'rows': rows},
                                    log="Comparison completed")
        except Exception as e:
            logger.error(f"Error in background compare task {task_id}: {e}")
            self.update_task_status(task_id, 'failed', error=str(e), log=f"Comparison failed: {e}")


# Global task manager instance
task_manager = BackgroundTaskManager()
