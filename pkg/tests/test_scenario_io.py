import json
import shutil

import numpy as np
import pytest
from pydantic import ValidationError

from app.core.exceptions import ScenarioParseException, ScenarioSemanticException
from app.fuzzy.hierarchy import CandidateFeatures, default_hierarchy, evaluate_preference
from app.parsers.csv_writer import (
    read_tripinfo,
    write_comparison,
    write_metrics,
    write_routes,
    write_tripinfo,
)
from app.parsers.native_parser import load_scenario, parse_native, serialize_native
from app.parsers.sumo_parser import import_sumo_net, import_sumo_routes, parse_sumo_net
from app.schemas.scenario import FuzzySetModel, PsoConfig, WeatherModel
from app.services.experiment_service import ComparisonRow
from app.services.route_assignment import Strategy
from app.services.scenario_builder import build_grid_scenario, build_scenario, grid_network, hierarchy_model
from app.services.traffic_simulation import StepStats, TripRecord, run
from tests.conftest import make_scenario


class TestNativeParser:
    """Native JSON scenarios."""

    def test_minimal_scenario(self, minimal_scenario):
        config = parse_native(json.dumps(minimal_scenario))
        assert config.name == "minimal"
        assert [e.id for e in config.network.edges] == ["e0"]
        assert config.horizon == 60

    def test_syntax_error_reports_position(self):
        with pytest.raises(ScenarioParseException) as exc:
            parse_native('{"name": "broken",\n  "network": }')
        assert exc.value.line == 2
        assert exc.value.column is not None

    def test_unknown_edge_reference(self, minimal_scenario):
        minimal_scenario["demands"][0]["dest"] = "zz"
        with pytest.raises(ScenarioSemanticException) as exc:
            parse_native(json.dumps(minimal_scenario))
        assert exc.value.reference == "zz"

    def test_duplicate_vehicle_id(self, minimal_scenario):
        minimal_scenario["demands"].append(dict(minimal_scenario["demands"][0]))
        with pytest.raises(ScenarioSemanticException):
            parse_native(json.dumps(minimal_scenario))

    def test_schema_violation_is_semantic(self, minimal_scenario):
        minimal_scenario["network"]["edges"][0]["length"] = -1
        with pytest.raises(ScenarioSemanticException):
            parse_native(json.dumps(minimal_scenario))

    def test_missing_network(self):
        with pytest.raises(ScenarioSemanticException):
            parse_native(json.dumps({"name": "empty"}))

    def test_canonical_form_is_stable(self, minimal_scenario):
        text = serialize_native(parse_native(json.dumps(minimal_scenario)))
        assert serialize_native(parse_native(text)) == text
        assert text.endswith("\n")

    def test_network_file_is_inlined(self, tmp_path, fixtures_dir):
        shutil.copy(fixtures_dir / "ring.net.xml", tmp_path / "ring.net.xml")
        scenario = tmp_path / "ring.json"
        scenario.write_text(json.dumps({
            "name": "ring",
            "network_file": "ring.net.xml",
            "demands": [{"id": "v0", "origin": "e0", "dest": "e2", "depart": 0}],
        }))
        config = load_scenario(scenario)
        assert config.network_file is None
        assert len(config.network.edges) == 4

    def test_missing_network_file(self, tmp_path):
        with pytest.raises(OSError):
            parse_native(json.dumps({"name": "x", "network_file": "absent.net.xml"}), tmp_path)


class TestSumoParser:
    """SUMO network and route imports."""

    def test_ring_network(self, fixtures_dir):
        net = import_sumo_net((fixtures_dir / "ring.net.xml").read_text())
        assert (net.node_count, net.edge_count, net.connection_count, net.lane_count) == (4, 4, 4, 5)
        assert net.edge("e1").lanes == 2
        assert net.edge("e1").speed == 20.0
        assert net.successors["e1"] == ("e2",)

    def test_missing_attribute_names_the_element(self):
        text = '<net><junction id="A" x="0" y="0"/><edge id="e" from="A"><lane length="10" speed="5"/></edge></net>'
        with pytest.raises(ScenarioParseException) as exc:
            parse_sumo_net(text)
        assert exc.value.path == "net/edge[2]"

    def test_malformed_xml(self):
        with pytest.raises(ScenarioParseException) as exc:
            parse_sumo_net("<net><edge></net>")
        assert exc.value.line == 1

    def test_connection_to_unknown_edge(self):
        text = (
            '<net><junction id="A"/><junction id="B"/>'
            '<edge id="e" from="A" to="B"><lane length="10" speed="5"/></edge>'
            '<connection from="e" to="nope"/></net>'
        )
        with pytest.raises(ScenarioSemanticException) as exc:
            parse_sumo_net(text)
        assert exc.value.reference == "nope"

    def test_routes(self, fixtures_dir):
        demands = import_sumo_routes((fixtures_dir / "ring.rou.xml").read_text())
        assert [(d.id, d.origin, d.dest, d.depart) for d in demands] == [
            ("v0", "e0", "e2", 0),
            ("v1", "e1", "e3", 5),
            ("t0", "e2", "e0", 30),
        ]

    def test_duplicate_vehicle_in_routes(self):
        text = '<routes><trip id="a" depart="0" from="x" to="y"/><trip id="a" depart="1" from="x" to="y"/></routes>'
        with pytest.raises(ScenarioSemanticException):
            import_sumo_routes(text)

    def test_undefined_route(self):
        with pytest.raises(ScenarioSemanticException):
            import_sumo_routes('<routes><vehicle id="v" depart="0" route="missing"/></routes>')


class TestCsvWriter:
    """Result files."""

    def test_tripinfo_rows(self):
        records = [TripRecord("v2", 4, None, 7, 100.0, 1, "in_network"), TripRecord("v1", 0, 12, 3, 240.0, 2)]
        lines = write_tripinfo(records).splitlines()
        assert lines[0] == "vehicle_id,depart,arrival,duration,waiting_steps,route_length,edges_count"
        assert lines[1] == "v1,0,12,12,3,240.00,2"
        assert lines[2] == "v2,4,,,7,100.00,1"

    def test_tripinfo_read_back(self):
        records = [TripRecord("v1", 0, 12, 3, 240.0, 2)]
        assert read_tripinfo(write_tripinfo(records)) == records

    def test_metrics_footer(self):
        series = [StepStats(1, 1, 1, 0, 0, None), StepStats(2, 1, 0, 1, 0, 2.0)]
        assert write_metrics(series, 2.0).splitlines() == [
            "step,in_network,arrived,avg_travel_time",
            "1,1,0,NA",
            "2,0,1,2.0000",
            "summary,,1,2.0000",
        ]

    def test_comparison_marks_undefined_values(self):
        rows = [ComparisonRow("dijkstra", None, 0, 1, None), ComparisonRow("hit2", 12.5, 3, 0, 0.25)]
        assert write_comparison(rows).splitlines()[1:] == ["dijkstra,NA,0,1,NA", "hit2,12.5000,3,0,0.2500"]

    def test_routes_file(self, diamond_scenario):
        result = run(make_scenario(diamond_scenario), Strategy.DIJKSTRA)
        lines = write_routes(result).splitlines()
        assert lines[0] == "vehicle_id,planned_route,taken_route,altered"
        vehicle, planned, taken, altered = lines[1].split(",")
        assert planned == taken and altered == "0"
        assert planned.split() == ["s", "d1", "d2", "t"]


class TestScenarioRoundTrip:
    """Generated scenarios survive serialize -> parse unchanged."""

    def test_generated_scenarios(self):
        rng = np.random.default_rng(11)
        override = hierarchy_model(default_hierarchy())
        for i in range(50):
            config = build_grid_scenario(
                int(rng.integers(2, 5)), int(rng.integers(5, 8)), int(rng.integers(0, 25)), seed=i,
                event_count=int(rng.integers(0, 30)), event_window=(10, 90), departure_window=(0, 120),
                horizon=int(rng.integers(60, 900)),
            )
            update = {
                "weather": [WeatherModel(start=0, severity=round(float(rng.uniform()), 3)),
                            WeatherModel(start=int(rng.integers(1, 600)), severity=round(float(rng.uniform()), 3))],
                "start_hour": round(float(rng.uniform(0, 24)), 2) % 24.0,
                "pso": PsoConfig(seed=i, swarm_size=int(rng.integers(2, 40))),
            }
            if i % 5 == 0:
                update["hierarchy"] = override
            config = config.model_copy(update=update)
            text = serialize_native(config)
            parsed = parse_native(text)
            assert parsed.model_dump() == config.model_dump()
            assert serialize_native(parsed) == text


class TestGridGenerator:
    """Grid congestion-injection scenarios."""

    def test_streets_and_avenues(self):
        network = grid_network(2, 5)
        speeds = {e.id: e.speed for e in network.edges}
        assert speeds["n0_0-n0_1"] == speeds["n1_4-n1_3"] == 20.0
        assert speeds["n0_0-n1_0"] == speeds["n1_2-n0_2"] == 40.0
        assert len(network.edges) == 2 * (2 * 4 + 5)

    def test_burst_enters_southern_street(self):
        config = build_grid_scenario(8, 8, 10, seed=1)
        (event,) = config.demand_events
        assert event.edges == ["n0_1-n0_2", "n0_2-n0_3", "n0_3-n0_4", "n0_4-n0_5"]
        assert event.count == 500
        assert event.destination and all(e.startswith(("n4_", "n5_", "n6_", "n7_")) for e in event.destination)
        assert all(int(e.split("-")[0].split("_")[1]) >= 5 for e in event.destination)
        assert config.routing.detour_tolerance == 0.0

    def test_smallest_grid_has_destinations(self):
        (event,) = build_grid_scenario(2, 5, 0, seed=1, event_count=5).demand_events
        assert event.destination == ["n1_4-n0_4", "n1_4-n1_3"]

    def test_embedded_hierarchy(self, hierarchy):
        config = build_grid_scenario(2, 5, 0, seed=1, event_count=0, hierarchy=hierarchy)
        assert config.demand_events == []
        rebuilt = build_scenario(config).hierarchy
        features = CandidateFeatures(0.03, 0.5, 0.4, 15.0, 8.0, 0.2)
        assert evaluate_preference(rebuilt, features) == evaluate_preference(hierarchy, features)


class TestFuzzySetSchema:
    """Explicit lower membership functions."""

    def test_lower_height_must_be_a_membership_grade(self):
        with pytest.raises(ValidationError):
            FuzzySetModel(label="x", umf=[0, 1, 2, 3], lmf=[0.5, 1, 2, 2.5, 1.5])
        with pytest.raises(ValidationError):
            FuzzySetModel(label="x", umf=[0, 1, 2, 3], lmf=[0.5, 1, 2, 2.5, 0.0])
        assert FuzzySetModel(label="x", umf=[0, 1, 2, 3], lmf=[0.5, 1, 2, 2.5, 1]).lmf[4] == 1.0
