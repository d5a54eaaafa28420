"""Run one strategy or all five on the same scenario and summarize the outcomes."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

from app.core.logging import get_logger
from app.schemas.scenario import ScenarioConfig
from app.services.route_assignment import STRATEGY_ORDER, Strategy
from app.services.scenario_builder import build_scenario
from app.services.traffic_simulation import SimulationResult, mean_average_travel_time, run

logger = get_logger(__name__)

ProgressCallback = Callable[[Strategy, SimulationResult], None]


@dataclass(frozen=True)
class ComparisonRow:
    strategy: str
    mean_avg_travel_time: Optional[float]
    arrived: int
    unfinished: int
    altered_route_fraction: Optional[float]


def summarize(result: SimulationResult) -> ComparisonRow:
    return ComparisonRow(
        strategy=result.strategy.value,
        mean_avg_travel_time=mean_average_travel_time(result.records, result.horizon),
        arrived=result.arrived,
        unfinished=len(result.unfinished),
        altered_route_fraction=result.altered_route_fraction(),
    )


def run_summary(result: SimulationResult) -> Dict[str, Any]:
    """JSON-ready summary of one run."""
    summary = asdict(summarize(result))
    summary.update(
        scenario=result.scenario,
        seed=result.seed,
        horizon=result.horizon,
        departed=result.series[-1].departed if result.series else 0,
        stranded=result.series[-1].stranded if result.series else 0,
        pso_calls=result.pso_calls,
    )
    return summary


def run_strategy(config: ScenarioConfig, strategy: Strategy, seed: int = 1,
                 horizon: Optional[int] = None) -> SimulationResult:
    """Build a fresh runtime scenario and simulate it; each call owns all of its state."""
    return run(build_scenario(config), Strategy(strategy), horizon, seed)


def compare(config: ScenarioConfig, seed: int = 1, horizon: Optional[int] = None, workers: int = 1,
            strategies: Sequence[Strategy] = STRATEGY_ORDER,
            on_result: Optional[ProgressCallback] = None) -> List[SimulationResult]:
    """
    Run every strategy on identical demand.

    Results come back in canonical strategy order whatever the worker count.
    """
    ordered = [s for s in STRATEGY_ORDER if s in set(map(Strategy, strategies))]
    results: Dict[Strategy, SimulationResult] = {}
    if workers > 1 and len(ordered) > 1:
        logger.info(f"Comparing {len(ordered)} strategies on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=min(workers, len(ordered))) as pool:
            futures = {s: pool.submit(run_strategy, config, s, seed, horizon) for s in ordered}
            for strategy in ordered:
                results[strategy] = futures[strategy].result()
                if on_result:
                    on_result(strategy, results[strategy])
    else:
        for strategy in ordered:
            results[strategy] = run_strategy(config, strategy, seed, horizon)
            if on_result:
                on_result(strategy, results[strategy])
    return [results[s] for s in ordered]


def comparison_rows(results: Sequence[SimulationResult]) -> List[ComparisonRow]:
    return [summarize(r) for r in results]
