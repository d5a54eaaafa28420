"""
Importer for the subset of SUMO files this simulator understands.

Networks (.net.xml): junction, edge (with lane children) and connection
elements. Demand (.rou.xml): route, vehicle and trip elements. Internal
elements (ids starting with ':') are skipped; any other element is ignored
and counted in a warning.
"""

import xml.etree.ElementTree as ET
from collections import Counter
from typing import Dict, List, Optional

from pydantic import ValidationError

from app.core.exceptions import NetworkValidationException, ScenarioParseException, ScenarioSemanticException
from app.core.logging import get_logger
from app.schemas.scenario import ConnectionModel, DemandModel, EdgeModel, NetworkModel, NodeModel
from app.services.road_network import RoadNetwork
from app.services.scenario_builder import build_network

logger = get_logger(__name__)


def _root(text: str, expected: str) -> ET.Element:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        line, column = e.position
        raise ScenarioParseException(f"Malformed XML: {e}", line, column) from e
    if root.tag != expected:
        raise ScenarioParseException(f"Expected <{expected}> root element, got <{root.tag}>", path=root.tag)
    return root


def _required(elem: ET.Element, attr: str, path: str) -> str:
    value = elem.get(attr)
    if value is None or value == "":
        raise ScenarioParseException(f"Missing required attribute '{attr}'", path=path)
    return value


def _number(elem: ET.Element, attr: str, path: str) -> float:
    raw = _required(elem, attr, path)
    try:
        return float(raw)
    except ValueError as e:
        raise ScenarioParseException(f"Attribute '{attr}' is not a number: '{raw}'", path=path) from e


def _model(cls, fields: dict, path: str):
    try:
        return cls(**fields)
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioParseException(f"Invalid {first['loc'][0]}: {first['msg']}", path=path) from e


def _internal(identifier: Optional[str]) -> bool:
    return bool(identifier) and identifier.startswith(":")


def _warn_ignored(ignored: Counter, source: str) -> None:
    if ignored:
        summary = ", ".join(f"{tag} x{count}" for tag, count in sorted(ignored.items()))
        logger.warning(f"Ignored {sum(ignored.values())} unsupported {source} elements: {summary}")


def parse_sumo_net(text: str) -> NetworkModel:
    """
    Raises:
        ScenarioParseException: Malformed XML or a missing/invalid attribute, with the element path
        ScenarioSemanticException: An edge or connection naming an unknown junction or edge
    """
    root = _root(text, "net")
    nodes: List[NodeModel] = []
    edges: List[EdgeModel] = []
    connections: Dict[tuple, ConnectionModel] = {}
    ignored: Counter = Counter()

    for index, elem in enumerate(root, start=1):
        path = f"net/{elem.tag}[{index}]"
        if elem.tag == "junction":
            node_id = _required(elem, "id", path)
            if _internal(node_id) or elem.get("type") == "internal":
                continue
            x = _number(elem, "x", path) if elem.get("x") else 0.0
            y = _number(elem, "y", path) if elem.get("y") else 0.0
            nodes.append(_model(NodeModel, dict(id=node_id, x=x, y=y), path))
        elif elem.tag == "edge":
            edge_id = _required(elem, "id", path)
            if _internal(edge_id) or elem.get("function") == "internal":
                continue
            lanes = elem.findall("lane")
            if not lanes:
                raise ScenarioParseException(f"Edge '{edge_id}' has no lane children", path=path)
            first = f"{path}/lane[1]"
            fields = dict(
                id=edge_id,
                from_node=_required(elem, "from", path),
                to_node=_required(elem, "to", path),
                length=_number(lanes[0], "length", first),
                speed=_number(lanes[0], "speed", first),
                lanes=len(lanes),
            )
            edges.append(_model(EdgeModel, fields, path))
        elif elem.tag == "connection":
            from_edge = _required(elem, "from", path)
            to_edge = _required(elem, "to", path)
            if _internal(from_edge) or _internal(to_edge):
                continue
            connections.setdefault((from_edge, to_edge), ConnectionModel(from_edge=from_edge, to_edge=to_edge))
        else:
            ignored[elem.tag] += 1
    _warn_ignored(ignored, "network")

    node_ids = {n.id for n in nodes}
    edge_ids = {e.id for e in edges}
    for edge in edges:
        for node_id in (edge.from_node, edge.to_node):
            if node_id not in node_ids:
                raise ScenarioSemanticException(f"Edge '{edge.id}' references unknown junction '{node_id}'", node_id)
    for from_edge, to_edge in connections:
        for edge_id in (from_edge, to_edge):
            if edge_id not in edge_ids:
                raise ScenarioSemanticException(
                    f"Connection {from_edge} -> {to_edge} references unknown edge '{edge_id}'", edge_id
                )

    logger.info(f"Parsed SUMO network: {len(nodes)} junctions, {len(edges)} edges, {len(connections)} connections")
    return NetworkModel(nodes=nodes, edges=edges, connections=list(connections.values()) if connections else None)


def import_sumo_net(text: str) -> RoadNetwork:
    """
    Raises:
        ScenarioParseException: See `parse_sumo_net`
        ScenarioSemanticException: Dangling references or a network violating its invariants
    """
    model = parse_sumo_net(text)
    try:
        return build_network(model)
    except NetworkValidationException as e:
        raise ScenarioSemanticException(str(e)) from e


def _depart(elem: ET.Element, path: str) -> int:
    value = _number(elem, "depart", path)
    if value < 0:
        raise ScenarioParseException(f"Negative departure time {value}", path=path)
    return int(round(value))


def import_sumo_routes(text: str) -> List[DemandModel]:
    """
    One demand per vehicle or trip: first and last edge of its route, departure as given.

    Raises:
        ScenarioParseException: Malformed XML, missing attributes, or a vehicle without a route
        ScenarioSemanticException: Duplicate vehicle ids or a reference to an undefined route
    """
    root = _root(text, "routes")
    routes: Dict[str, List[str]] = {}
    demands: List[DemandModel] = []
    seen = set()
    ignored: Counter = Counter()

    for index, elem in enumerate(root, start=1):
        path = f"routes/{elem.tag}[{index}]"
        if elem.tag == "route":
            routes[_required(elem, "id", path)] = _required(elem, "edges", path).split()
            continue
        if elem.tag not in ("vehicle", "trip"):
            ignored[elem.tag] += 1
            continue

        vehicle_id = _required(elem, "id", path)
        if vehicle_id in seen:
            raise ScenarioSemanticException(f"Duplicate vehicle id '{vehicle_id}'", vehicle_id)
        seen.add(vehicle_id)
        depart = _depart(elem, path)

        if elem.tag == "trip" or (elem.get("from") and elem.get("to")):
            origin, dest = _required(elem, "from", path), _required(elem, "to", path)
        else:
            nested = elem.find("route")
            if nested is not None:
                edges = _required(nested, "edges", f"{path}/route").split()
            elif elem.get("route"):
                if elem.get("route") not in routes:
                    raise ScenarioSemanticException(
                        f"Vehicle '{vehicle_id}' references undefined route '{elem.get('route')}'", elem.get("route")
                    )
                edges = routes[elem.get("route")]
            else:
                raise ScenarioParseException(f"Vehicle '{vehicle_id}' has no route", path=path)
            if not edges:
                raise ScenarioParseException(f"Vehicle '{vehicle_id}' has an empty route", path=path)
            origin, dest = edges[0], edges[-1]
        demands.append(_model(DemandModel, dict(id=vehicle_id, origin=origin, dest=dest, depart=depart), path))
    _warn_ignored(ignored, "route")

    logger.info(f"Parsed SUMO demand: {len(demands)} vehicles")
    return demands
