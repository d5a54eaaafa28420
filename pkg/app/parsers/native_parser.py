"""Native JSON scenario files: parse, validate, resolve the network reference, serialize."""

import json
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from app.core.exceptions import (
    HierarchyConstructionException,
    InvalidMembershipFunctionException,
    NetworkValidationException,
    ScenarioParseException,
    ScenarioSemanticException,
)
from app.core.logging import get_logger
from app.parsers.sumo_parser import parse_sumo_net
from app.schemas.scenario import NetworkModel, ScenarioConfig
from app.services.scenario_builder import Scenario, build_scenario

logger = get_logger(__name__)


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "scenario"
    return f"{location}: {first['msg']}"


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseException(f"Invalid JSON: {e.msg}", e.lineno, e.colno) from e


def resolve_network(config: ScenarioConfig, base_dir: Optional[Path] = None) -> ScenarioConfig:
    """
    Inline the network a scenario references by `network_file`.

    The returned config carries the network itself and no file reference,
    so its canonical serialization is self-contained.
    """
    if config.network is not None or config.network_file is None:
        return config
    path = Path(config.network_file)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    text = path.read_text(encoding="utf-8")
    if path.name.endswith(".xml"):
        network = parse_sumo_net(text)
    else:
        try:
            network = NetworkModel.model_validate(_load_json(text))
        except ValidationError as e:
            raise ScenarioSemanticException(f"{path.name}: {_validation_message(e)}", str(path)) from e
    logger.info(f"Resolved network file {path}: {len(network.edges)} edges")
    return config.model_copy(update={"network": network, "network_file": None})


def check_semantics(config: ScenarioConfig) -> Scenario:
    """
    Build the runtime scenario, reporting any invalid reference as a semantic error.

    Raises:
        ScenarioSemanticException: Dangling or duplicated references, invalid network or controller
    """
    try:
        return build_scenario(config)
    except ScenarioSemanticException:
        raise
    except (NetworkValidationException, InvalidMembershipFunctionException, HierarchyConstructionException) as e:
        raise ScenarioSemanticException(str(e)) from e


def parse_native(text: str, base_dir: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """
    Parse and fully validate a native scenario.

    Raises:
        ScenarioParseException: JSON syntax error, with line and column
        ScenarioSemanticException: Schema violation or a reference that does not resolve
        OSError: If a referenced network file cannot be read
    """
    data = _load_json(text)
    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ScenarioSemanticException(_validation_message(e)) from e
    config = resolve_network(config, Path(base_dir) if base_dir is not None else None)
    check_semantics(config)
    return config


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    path = Path(path)
    return parse_native(path.read_text(encoding="utf-8"), path.parent)


def serialize_native(config: ScenarioConfig) -> str:
    """Canonical form: sorted keys, two-space indent, trailing newline."""
    return json.dumps(config.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True) + "\n"
