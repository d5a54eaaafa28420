"""Hierarchical composition of fuzzy logic units and its PSO parameter encoding."""

from dataclasses import dataclass, field, fields
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import (
    HierarchyConstructionException,
    InvalidMembershipFunctionException,
    NoRuleFiredException,
    ParameterVectorException,
)
from app.core.logging import get_logger
from app.fuzzy.defaults import DEFAULT_WIRING, LEAF_FEATURES, default_units
from app.fuzzy.inference import FuzzyLogicUnit, evaluate_unit, km_enumerate
from app.fuzzy.sets import IT2FuzzySet, LinguisticVariable, trapezoid_grades

logger = get_logger(__name__)

PARAMS_PER_SET = 6
H_LMF_BOUNDS = (0.5, 1.0)
INSET_BOUNDS = (0.0, 0.25)
NO_RULE_FALLBACK = 0.5
BOUNDS_EPS = 1e-12


@dataclass(frozen=True)
class CandidateFeatures:
    """The six crisp leaf inputs describing one candidate road for one driver."""

    density: float
    max_speed_norm: float
    familiarity: float
    usual_speed: float
    departure_time: float
    weather: float

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class HierarchySpec:
    """Named units plus the source (leaf feature or unit name) feeding each input slot."""

    units: Tuple[FuzzyLogicUnit, ...]
    wiring: Mapping[str, Tuple[str, str]]
    root: Optional[str] = None
    leaves: Tuple[str, ...] = LEAF_FEATURES


@dataclass(frozen=True)
class Hierarchy:
    """Validated, immutable controller with a fixed topological evaluation order."""

    units: Mapping[str, FuzzyLogicUnit]
    wiring: Mapping[str, Tuple[str, str]]
    order: Tuple[str, ...]
    root: str
    leaves: Tuple[str, ...] = LEAF_FEATURES

    def unit(self, name: str) -> FuzzyLogicUnit:
        return self.units[name]

    def leaf_variable(self, leaf: str) -> LinguisticVariable:
        """Variable of the slot that consumes a leaf feature."""
        for name, sources in self.wiring.items():
            for slot, source in enumerate(sources):
                if source == leaf:
                    unit = self.units[name]
                    return unit.input1 if slot == 0 else unit.input2
        raise KeyError(f"Leaf '{leaf}' is not consumed by any unit")

    def replace_units(self, replacements: Mapping[str, FuzzyLogicUnit]) -> "Hierarchy":
        units = {name: replacements.get(name, unit) for name, unit in self.units.items()}
        return Hierarchy(units, self.wiring, self.order, self.root, self.leaves)

    def evaluate_units(self, features: CandidateFeatures, stop_before: Optional[str] = None) -> Dict[str, float]:
        """
        Crisp output of every unit in evaluation order.

        Raises:
            FuzzyDomainException: If a leaf feature is outside its universe
        """
        values: Dict[str, float] = features.as_dict()
        for name in self.order:
            if name == stop_before:
                break
            unit = self.units[name]
            x1, x2 = (values[source] for source in self.wiring[name])
            try:
                values[name] = evaluate_unit(unit, x1, x2)
            except NoRuleFiredException:
                logger.debug(f"Unit '{name}' fired no rule at ({x1}, {x2}); using {NO_RULE_FALLBACK}")
                values[name] = NO_RULE_FALLBACK
        return values

    def root_inputs(self, features: CandidateFeatures) -> Tuple[float, float]:
        """Crisp inputs reaching the root unit; independent of the root's own sets."""
        values = self.evaluate_units(features, stop_before=self.root)
        s1, s2 = self.wiring[self.root]
        return values[s1], values[s2]


def build_hierarchy(spec: HierarchySpec) -> Hierarchy:
    """
    Validate the wiring and fix a deterministic topological order.

    Raises:
        HierarchyConstructionException: On a duplicate unit, dangling reference,
            cycle, unused or repeated leaf, universe mismatch or missing single root
    """
    units: Dict[str, FuzzyLogicUnit] = {}
    for unit in spec.units:
        if unit.name in units:
            raise HierarchyConstructionException(f"Duplicate unit name '{unit.name}'")
        units[unit.name] = unit

    for name in units:
        if name not in spec.wiring:
            raise HierarchyConstructionException(f"Unit '{name}' has no wiring")
        if name in spec.leaves:
            raise HierarchyConstructionException(f"Unit name '{name}' collides with a leaf feature")
    for name, sources in spec.wiring.items():
        if name not in units:
            raise HierarchyConstructionException(f"Wiring names unknown unit '{name}'")
        if len(sources) != 2:
            raise HierarchyConstructionException(f"Unit '{name}' must have exactly 2 inputs, got {len(sources)}")
        for source in sources:
            if source not in units and source not in spec.leaves:
                raise HierarchyConstructionException(
                    f"Unit '{name}' input '{source}' is a dangling reference (neither a unit nor a leaf)"
                )

    order: List[str] = []
    remaining = list(units)
    while remaining:
        ready = next(
            (n for n in remaining if all(s in spec.leaves or s in order for s in spec.wiring[n])),
            None,
        )
        if ready is None:
            raise HierarchyConstructionException(f"Wiring contains a cycle through units {remaining}")
        order.append(ready)
        remaining.remove(ready)

    consumed = [s for n in order for s in spec.wiring[n]]
    for leaf in spec.leaves:
        uses = consumed.count(leaf)
        if uses == 0:
            raise HierarchyConstructionException(f"Leaf feature '{leaf}' is never consumed")
        if uses > 1:
            raise HierarchyConstructionException(f"Leaf feature '{leaf}' is consumed {uses} times")

    roots = [n for n in order if n not in consumed]
    if len(roots) != 1:
        raise HierarchyConstructionException(f"Hierarchy must have a single root, found {roots}")
    if spec.root is not None and spec.root != roots[0]:
        raise HierarchyConstructionException(f"Declared root '{spec.root}' differs from wired root '{roots[0]}'")

    for name in order:
        unit = units[name]
        for source, variable in zip(spec.wiring[name], (unit.input1, unit.input2)):
            if source in units and (variable.lo, variable.hi) != (0.0, 1.0):
                raise HierarchyConstructionException(
                    f"Unit '{name}' reads unit '{source}' through '{variable.name}' whose universe "
                    f"is not [0, 1]"
                )

    for name in order:
        for variable in units[name].variables:
            gaps = variable.coverage_gaps()
            if gaps:
                raise HierarchyConstructionException(
                    f"Variable '{variable.name}' of unit '{name}' leaves dead zones {list(gaps)}"
                )

    logger.debug(f"Built hierarchy with evaluation order {order}, root '{roots[0]}'")
    return Hierarchy(units, dict(spec.wiring), tuple(order), roots[0], tuple(spec.leaves))


def default_hierarchy(resolution: int = 201) -> Hierarchy:
    """The five-unit controller: Path, Driver and Environment feed PD, which feeds PDE."""
    return build_hierarchy(HierarchySpec(tuple(default_units(resolution)), dict(DEFAULT_WIRING), "PDE"))


def evaluate_preference(h: Hierarchy, f: CandidateFeatures) -> float:
    """
    Preference index of a candidate: the root unit's crisp output.

    Raises:
        FuzzyDomainException: If a feature is outside its universe
    """
    return h.evaluate_units(f)[h.root]


@dataclass(frozen=True)
class SetSlot:
    """Position of one fuzzy set inside a flattened parameter vector."""

    unit: str
    role: str  # input1, input2 or output
    label: str


@dataclass
class ParameterVector:
    """Flattened (a, b, c, d, h_lmf, inset) blocks with per-dimension bounds."""

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    layout: Tuple[SetSlot, ...] = field(default_factory=tuple)

    @property
    def scope(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys(slot.unit for slot in self.layout))

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values: np.ndarray) -> "ParameterVector":
        return ParameterVector(np.asarray(values, dtype=float).copy(), self.lower, self.upper, self.layout)


def _unit_variable(unit: FuzzyLogicUnit, role: str) -> LinguisticVariable:
    return {"input1": unit.input1, "input2": unit.input2, "output": unit.output}[role]


def flatten_parameters(h: Hierarchy, scope: Optional[Sequence[str]] = None,
                       fix_fou: bool = False) -> ParameterVector:
    """
    Encode the membership functions of the scoped units (default: the root only).

    With `fix_fou` the height and inset dimensions get degenerate bounds
    [1, 1] and [0, 0], which confines a search to type-1 sets.

    Raises:
        ParameterVectorException: If a scope entry is not a unit of the hierarchy
    """
    scope = tuple(scope) if scope else (h.root,)
    unknown = [name for name in scope if name not in h.units]
    if unknown:
        raise ParameterVectorException("Unknown unit in parameter scope", [f"'{n}'" for n in unknown])

    values, lower, upper, layout = [], [], [], []
    for name in h.order:
        if name not in scope:
            continue
        unit = h.units[name]
        for role in ("input1", "input2", "output"):
            variable = _unit_variable(unit, role)
            for fuzzy_set in variable.sets:
                a, b, c, d, h_lmf, inset = fuzzy_set.encoding()
                if fix_fou:
                    h_lmf, inset = 1.0, 0.0
                    h_bounds, inset_bounds = (1.0, 1.0), (0.0, 0.0)
                else:
                    h_bounds = (min(H_LMF_BOUNDS[0], h_lmf), H_LMF_BOUNDS[1])
                    inset_bounds = (INSET_BOUNDS[0], max(INSET_BOUNDS[1], inset))
                values.extend((a, b, c, d, h_lmf, inset))
                lower.extend((variable.lo,) * 4 + (h_bounds[0], inset_bounds[0]))
                upper.extend((variable.hi,) * 4 + (h_bounds[1], inset_bounds[1]))
                layout.append(SetSlot(name, role, fuzzy_set.label))
    return ParameterVector(np.array(values, dtype=float), np.array(lower), np.array(upper), tuple(layout))


def repair_positions(values: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """
    Clamp every dimension into its bounds, then sort each (a, b, c, d) block.

    Works on a single vector or a (particles, dimension) matrix.
    """
    repaired = np.clip(values, lower, upper)
    blocks = repaired.reshape(repaired.shape[:-1] + (-1, PARAMS_PER_SET))
    blocks[..., :4] = np.sort(blocks[..., :4], axis=-1)
    return blocks.reshape(repaired.shape)


def bounds_report(p: ParameterVector) -> List[str]:
    report = []
    for k, (v, lo, hi) in enumerate(zip(p.values, p.lower, p.upper)):
        slot = p.layout[k // PARAMS_PER_SET] if p.layout else None
        where = f"{slot.unit}.{slot.role}.{slot.label}" if slot else "?"
        if not np.isfinite(v):
            report.append(f"dimension {k} ({where}) is not finite")
        elif v < lo - BOUNDS_EPS or v > hi + BOUNDS_EPS:
            report.append(f"dimension {k} ({where}) = {v} outside [{lo}, {hi}]")
    return report


def apply_parameters(h: Hierarchy, p: ParameterVector) -> Hierarchy:
    """
    Rebuild the scoped units' sets from a parameter vector; other units are reused as-is.

    Raises:
        ParameterVectorException: If the vector does not match its layout, leaves
            its bounds, or decodes to sets that cannot be constructed
    """
    if p.values.shape != (len(p.layout) * PARAMS_PER_SET,):
        raise ParameterVectorException(
            "Parameter vector does not match its layout",
            [f"{p.values.shape[0]} values for {len(p.layout)} sets"],
        )
    report = bounds_report(p)
    if report:
        raise ParameterVectorException("Parameter vector out of bounds", report)

    repaired = repair_positions(p.values, p.lower, p.upper)
    sorted_blocks = int(np.sum(np.any(repaired != p.values, axis=-1)))
    if sorted_blocks:
        logger.debug(f"Repaired {sorted_blocks} parameter vector(s) before decoding")

    blocks = repaired.reshape(-1, PARAMS_PER_SET)
    new_sets: Dict[Tuple[str, str], List[IT2FuzzySet]] = {}
    errors = []
    for slot, block in zip(p.layout, blocks):
        a, b, c, d, h_lmf, inset = (float(v) for v in block)
        try:
            fuzzy_set = IT2FuzzySet.from_encoding(slot.label, (a, b, c, d), h_lmf, inset)
        except InvalidMembershipFunctionException as e:
            errors.append(f"{slot.unit}.{slot.role}.{slot.label}: {e}")
            continue
        new_sets.setdefault((slot.unit, slot.role), []).append(fuzzy_set)
    if errors:
        raise ParameterVectorException("Decoded sets are invalid", errors)

    replacements = {}
    for name in p.scope:
        unit = h.units[name]
        variables = {}
        for role in ("input1", "input2", "output"):
            sets = new_sets.get((name, role))
            if sets is not None:
                variables[role] = _unit_variable(unit, role).with_sets(sets)
        replacements[name] = unit.with_variables(**variables)
    return h.replace_units(replacements)


def degenerate_to_t1(h: Hierarchy) -> Hierarchy:
    """Collapse every lower membership function onto its upper one."""
    replacements = {}
    for name, unit in h.units.items():
        replacements[name] = unit.with_variables(
            *(v.with_sets(s.degenerate() for s in v.sets) for v in unit.variables)
        )
    return h.replace_units(replacements)


def _decode_blocks(blocks: np.ndarray):
    """Vectorised from_encoding: returns (umf, lmf) parameter tuples of shape (..., sets)."""
    a, b, c, d, h_lmf, inset = (blocks[..., k] for k in range(PARAMS_PER_SET))
    width = d - a
    la = np.minimum(a + inset * width, c)
    ld = np.maximum(d - inset * width, b)
    umf = (a, b, c, d, np.ones_like(a))
    lmf = (la, np.maximum(b, la), np.minimum(c, ld), ld, h_lmf)
    return umf, lmf


def _grades(params, x: np.ndarray) -> np.ndarray:
    """Grades of x (points,) under sets (..., sets) -> (..., sets, points)."""
    return trapezoid_grades(x, *(p[..., None] for p in params))


def evaluate_root_batch(h: Hierarchy, p: ParameterVector, positions: np.ndarray,
                        x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """
    Root-unit output for many parameter vectors and many input pairs at once.

    `positions` is (particles, dimension) over a root-only layout; `x1`/`x2`
    hold the root's crisp inputs per candidate. Returns (particles, candidates).
    Matches decoding with apply_parameters then evaluate_unit up to rounding.
    """
    if p.scope != (h.root,):
        raise ParameterVectorException("Batch evaluation requires a root-only parameter scope", list(p.scope))
    unit = h.units[h.root]
    n1, n2 = len(unit.input1.sets), len(unit.input2.sets)
    blocks = np.asarray(positions, dtype=float).reshape(positions.shape[0], -1, PARAMS_PER_SET)
    umf, lmf = _decode_blocks(blocks)

    def split(params, start, stop):
        return tuple(v[:, start:stop] for v in params)

    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    u1 = _grades(split(umf, 0, n1), x1)
    l1 = np.minimum(_grades(split(lmf, 0, n1), x1), u1)
    u2 = _grades(split(umf, n1, n1 + n2), x2)
    l2 = np.minimum(_grades(split(lmf, n1, n1 + n2), x2), u2)

    out_labels = unit.output.labels
    n_out = len(out_labels)
    particles, candidates = blocks.shape[0], x1.shape[0]
    fire_lo = np.zeros((particles, n_out, candidates))
    fire_hi = np.zeros((particles, n_out, candidates))
    labels1, labels2 = unit.input1.labels, unit.input2.labels
    for (lab1, lab2), consequent in unit.rules.items():
        i, j, k = labels1.index(lab1), labels2.index(lab2), out_labels.index(consequent)
        fire_lo[:, k] = np.maximum(fire_lo[:, k], np.minimum(l1[:, i], l2[:, j]))
        fire_hi[:, k] = np.maximum(fire_hi[:, k], np.minimum(u1[:, i], u2[:, j]))

    ys = unit.output_grid
    out_umf = _grades(split(umf, n1 + n2, n1 + n2 + n_out), ys)
    out_lmf = np.minimum(_grades(split(lmf, n1 + n2, n1 + n2 + n_out), ys), out_umf)
    # (particles, sets, candidates, points)
    upper = np.max(np.minimum(fire_hi[..., None], out_umf[:, :, None, :]), axis=1)
    lower = np.max(np.minimum(fire_lo[..., None], out_lmf[:, :, None, :]), axis=1)
    lower = np.minimum(lower, upper)

    yl, yr = km_enumerate(ys, lower, upper)
    crisp = (yl + yr) / 2.0
    crisp = np.where(np.isnan(crisp), NO_RULE_FALLBACK, crisp)
    return np.clip(crisp, unit.output.lo, unit.output.hi)
