"""CSV outputs of a simulation run: trip records, step series, itineraries and strategy comparisons."""

import csv
import io
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from app.core.logging import get_logger
from app.services.experiment_service import ComparisonRow
from app.services.traffic_simulation import SimulationResult, StepStats, TripRecord, route_altered

logger = get_logger(__name__)

TRIPINFO_HEADER = ["vehicle_id", "depart", "arrival", "duration", "waiting_steps", "route_length", "edges_count"]
METRICS_HEADER = ["step", "in_network", "arrived", "avg_travel_time"]
COMPARISON_HEADER = ["strategy", "mean_avg_travel_time", "arrived", "unfinished", "altered_route_fraction"]
ROUTES_HEADER = ["vehicle_id", "planned_route", "taken_route", "altered"]

UNDEFINED = "NA"


def _mean(value: Optional[float]) -> str:
    return UNDEFINED if value is None else f"{value:.4f}"


def _render(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_tripinfo(records: Iterable[TripRecord]) -> str:
    """One row per record ordered by vehicle id; unfinished trips leave arrival and duration empty."""
    rows = []
    for r in sorted(records, key=lambda r: r.vehicle_id):
        rows.append([
            r.vehicle_id,
            r.depart,
            "" if r.arrival is None else r.arrival,
            "" if r.duration is None else r.duration,
            r.waiting_steps,
            f"{r.route_length:.2f}",
            r.edges_count,
        ])
    return _render(TRIPINFO_HEADER, rows)


def read_tripinfo(text: str) -> List[TripRecord]:
    records = []
    for row in csv.DictReader(io.StringIO(text)):
        arrival = int(row["arrival"]) if row["arrival"] else None
        records.append(TripRecord(
            vehicle_id=row["vehicle_id"],
            depart=int(row["depart"]),
            arrival=arrival,
            waiting_steps=int(row["waiting_steps"]),
            route_length=float(row["route_length"]),
            edges_count=int(row["edges_count"]),
        ))
    return records


def write_metrics(series: Sequence[StepStats], summary: Optional[float], arrived: Optional[int] = None) -> str:
    """Per-step rows, then a `summary` footer carrying the final arrived count and the mean."""
    rows = [[s.step, s.in_network, s.arrived, _mean(s.avg_travel_time)] for s in series]
    if arrived is None:
        arrived = series[-1].arrived if series else 0
    rows.append(["summary", "", arrived, _mean(summary)])
    return _render(METRICS_HEADER, rows)


def write_comparison(rows: Sequence[ComparisonRow]) -> str:
    return _render(COMPARISON_HEADER, [
        [r.strategy, _mean(r.mean_avg_travel_time), r.arrived, r.unfinished, _mean(r.altered_route_fraction)]
        for r in rows
    ])


def write_routes(result: SimulationResult) -> str:
    """Planned (free-flow shortest) and taken itineraries, edges separated by spaces."""
    finished = {r.vehicle_id for r in result.finished}
    rows = []
    for vehicle_id in sorted(result.planned_routes):
        planned = result.planned_routes[vehicle_id]
        taken = result.taken_routes.get(vehicle_id, ())
        altered = bool(planned) and route_altered(planned, taken, vehicle_id in finished)
        rows.append([vehicle_id, " ".join(planned), " ".join(taken), int(altered)])
    return _render(ROUTES_HEADER, rows)


def write_run_outputs(result: SimulationResult, out_dir: Path, summary: Optional[float]) -> List[Path]:
    """Write tripinfo.csv, metrics.csv and routes.csv into `out_dir`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "tripinfo.csv": write_tripinfo(result.records),
        "metrics.csv": write_metrics(result.series, summary, result.arrived),
        "routes.csv": write_routes(result),
    }
    paths = []
    for name, text in outputs.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8", newline="")
        paths.append(path)
    logger.info(f"Wrote {', '.join(outputs)} to {out_dir}")
    return paths
