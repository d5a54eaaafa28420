"""Command-line entry point: run, compare, import and grid."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import settings
from app.core.exceptions import NetworkValidationException, ScenarioParseException, ScenarioSemanticException
from app.core.logging import get_logger, setup_logging
from app.fuzzy.hierarchy import default_hierarchy
from app.parsers.csv_writer import write_comparison, write_run_outputs
from app.parsers.native_parser import load_scenario, serialize_native
from app.parsers.sumo_parser import import_sumo_routes, parse_sumo_net
from app.schemas.scenario import ScenarioConfig
from app.services.experiment_service import compare, comparison_rows, run_strategy
from app.services.route_assignment import STRATEGY_ORDER, Strategy
from app.services.scenario_builder import build_grid_scenario
from app.services.traffic_simulation import mean_average_travel_time

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2

INPUT_ERRORS = (ScenarioParseException, ScenarioSemanticException, NetworkValidationException, OSError)


class CliParser(argparse.ArgumentParser):
    """Usage errors exit with status 1; status 2 is reserved for bad input files."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> CliParser:
    parser = CliParser(prog="python -m app", description=settings.description)
    parser.add_argument("--log-level", default=None, help="Override LOG_LEVEL for this invocation")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Simulate one strategy")
    run.add_argument("--scenario", required=True, type=Path)
    run.add_argument("--strategy", required=True, choices=[s.value for s in STRATEGY_ORDER])
    run.add_argument("--seed", type=int, default=settings.default_seed)
    run.add_argument("--horizon", type=int, default=None, help="Seconds to simulate (default: the scenario's)")
    run.add_argument("--out", type=Path, default=Path(settings.output_dir))

    cmp = commands.add_parser("compare", help="Simulate all five strategies on identical demand")
    cmp.add_argument("--scenario", required=True, type=Path)
    cmp.add_argument("--seed", type=int, default=settings.default_seed)
    cmp.add_argument("--horizon", type=int, default=None)
    cmp.add_argument("--out", type=Path, default=Path(settings.output_dir))
    cmp.add_argument("--workers", type=int, default=1, help="Worker processes; 1 runs sequentially")

    imp = commands.add_parser("import", help="Convert SUMO network and route files into a native scenario")
    imp.add_argument("--net", required=True, type=Path)
    imp.add_argument("--routes", type=Path, default=None)
    imp.add_argument("--out", required=True, type=Path)

    grid = commands.add_parser("grid", help="Write the grid congestion-injection scenario")
    grid.add_argument("--out", required=True, type=Path)
    grid.add_argument("--rows", type=int, default=8)
    grid.add_argument("--cols", type=int, default=8)
    grid.add_argument("--vehicles", type=int, default=500)
    grid.add_argument("--seed", type=int, default=settings.default_seed)
    grid.add_argument("--horizon", type=int, default=settings.default_horizon)
    grid.add_argument("--event-count", type=int, default=500, help="Trips in the congestion burst")
    grid.add_argument("--with-hierarchy", action="store_true",
                      help="Embed the default controller as an editable hierarchy override")
    return parser


def _format_mean(value: Optional[float]) -> str:
    return "NA" if value is None else f"{value:.4f}"


def _check_horizon(horizon: Optional[int]) -> None:
    if horizon is not None and horizon < 0:
        raise ValueError(f"--horizon must be non-negative, got {horizon}")


def cmd_run(args) -> int:
    _check_horizon(args.horizon)
    config = load_scenario(args.scenario)
    result = run_strategy(config, Strategy(args.strategy), args.seed, args.horizon)
    mean = mean_average_travel_time(result.records, result.horizon)
    write_run_outputs(result, args.out, mean)
    print(_format_mean(mean))
    return EXIT_OK


def cmd_compare(args) -> int:
    _check_horizon(args.horizon)
    config = load_scenario(args.scenario)

    def on_result(strategy, result):
        mean = mean_average_travel_time(result.records, result.horizon)
        write_run_outputs(result, args.out / strategy.value, mean)
        logger.info(f"{strategy.value}: mean of average travel time {_format_mean(mean)}, "
                    f"{result.arrived} arrived")

    results = compare(config, args.seed, args.horizon, max(1, args.workers), STRATEGY_ORDER, on_result)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "comparison.csv"
    path.write_text(write_comparison(comparison_rows(results)), encoding="utf-8", newline="")
    logger.info(f"Wrote {path}")
    return EXIT_OK


def cmd_import(args) -> int:
    network = parse_sumo_net(args.net.read_text(encoding="utf-8"))
    demands = import_sumo_routes(args.routes.read_text(encoding="utf-8")) if args.routes else []
    name = args.net.name.split(".")[0] or "imported"
    config = ScenarioConfig(name=name, network=network, demands=demands)
    text = serialize_native(config)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(text, encoding="utf-8", newline="")
    # Re-read so dangling demand references fail here, not at run time.
    load_scenario(args.out)
    logger.info(f"Imported {len(network.edges)} edges and {len(demands)} demands into {args.out}")
    return EXIT_OK


def cmd_grid(args) -> int:
    hierarchy = default_hierarchy(settings.km_resolution) if args.with_hierarchy else None
    config = build_grid_scenario(args.rows, args.cols, args.vehicles, args.seed, event_count=args.event_count,
                                 horizon=args.horizon, hierarchy=hierarchy)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(serialize_native(config), encoding="utf-8", newline="")
    logger.info(f"Wrote grid scenario {config.name} to {args.out}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "import": cmd_import, "grid": cmd_grid}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except INPUT_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
