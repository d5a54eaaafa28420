import copy
from pathlib import Path

import pytest

from app.core.config import settings
from app.fuzzy.hierarchy import default_hierarchy
from app.schemas.scenario import ScenarioConfig
from app.services.road_network import Edge, Node, RoadNetwork
from app.services.scenario_builder import build_scenario

FIXTURES_DIR = Path(__file__).parent / "fixtures"

MINIMAL_SCENARIO = {
    "name": "minimal",
    "network": {
        "nodes": [{"id": "n0", "x": 0, "y": 0}, {"id": "n1", "x": 100, "y": 0}],
        "edges": [{"id": "e0", "from": "n0", "to": "n1", "length": 100, "speed": 20}],
    },
    "demands": [{"id": "v0", "origin": "e0", "dest": "e0", "depart": 0}],
    "horizon": 60,
}

# s -> (u1, u2 | d1, d2) -> t, every edge 100 m at 20 m/s
DIAMOND_NETWORK = {
    "nodes": [{"id": f"n{i}"} for i in range(6)],
    "edges": [
        {"id": "s", "from": "n0", "to": "n1", "length": 100, "speed": 20},
        {"id": "u1", "from": "n1", "to": "n2", "length": 100, "speed": 20},
        {"id": "u2", "from": "n2", "to": "n4", "length": 100, "speed": 20},
        {"id": "d1", "from": "n1", "to": "n3", "length": 100, "speed": 20},
        {"id": "d2", "from": "n3", "to": "n4", "length": 100, "speed": 20},
        {"id": "t", "from": "n4", "to": "n5", "length": 100, "speed": 20},
    ],
}


@pytest.fixture(autouse=True)
def no_log_files(monkeypatch):
    """Keep test runs from writing rotating log files into the working directory."""
    monkeypatch.setattr(settings, "log_to_file", False)


@pytest.fixture(scope="session")
def hierarchy():
    return default_hierarchy()


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR


@pytest.fixture
def minimal_scenario():
    return copy.deepcopy(MINIMAL_SCENARIO)


@pytest.fixture
def diamond_scenario():
    return {
        "name": "diamond",
        "network": copy.deepcopy(DIAMOND_NETWORK),
        "demands": [{"id": "v0", "origin": "s", "dest": "t", "depart": 0}],
        "horizon": 60,
    }


def make_scenario(document):
    return build_scenario(ScenarioConfig.model_validate(document))


@pytest.fixture
def line_network():
    """a -> b -> c along three junction-to-junction edges."""
    nodes = [Node(f"n{i}") for i in range(4)]
    edges = [
        Edge("a", "n0", "n1", 100.0, 20.0),
        Edge("b", "n1", "n2", 200.0, 20.0),
        Edge("c", "n2", "n3", 50.0, 10.0),
    ]
    return RoadNetwork(nodes, edges)
