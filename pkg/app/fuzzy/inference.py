"""Single-unit Mamdani inference for interval type-2 fuzzy logic units."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.core.exceptions import InvalidMembershipFunctionException, NoRuleFiredException
from app.core.logging import get_logger
from app.fuzzy.sets import FiringInterval, IT2FuzzySet, LinguisticVariable

logger = get_logger(__name__)

DEFAULT_RESOLUTION = 201
MAX_KM_ITERATIONS = 100
ORDER_EPS = 1e-9


def fire_rule(g1: FiringInterval, g2: FiringInterval) -> FiringInterval:
    """Meet of two antecedent grades (Mamdani min t-norm on both bounds)."""
    return FiringInterval(min(g1.lo, g2.lo), min(g1.hi, g2.hi))


@dataclass(frozen=True)
class FuzzyLogicUnit:
    """
    Two-input, one-output IT2 Mamdani controller.

    `rules` maps every (input1 label, input2 label) pair to exactly one label
    of the output variable, whose universe must be [0, 1].
    """

    name: str
    input1: LinguisticVariable
    input2: LinguisticVariable
    output: LinguisticVariable
    rules: Dict[Tuple[str, str], str] = field(default_factory=dict)
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if (self.output.lo, self.output.hi) != (0.0, 1.0):
            raise InvalidMembershipFunctionException(
                f"Unit '{self.name}': output universe must be [0, 1], got [{self.output.lo}, {self.output.hi}]"
            )
        if self.resolution < 2:
            raise InvalidMembershipFunctionException(f"Unit '{self.name}': resolution must be >= 2")
        expected = {(l1, l2) for l1 in self.input1.labels for l2 in self.input2.labels}
        missing = sorted(expected - set(self.rules))
        extra = sorted(set(self.rules) - expected)
        if missing or extra:
            raise InvalidMembershipFunctionException(
                f"Unit '{self.name}': rule table is not total (missing {missing}, unknown {extra})"
            )
        unknown = sorted({out for out in self.rules.values() if out not in self.output.labels})
        if unknown:
            raise InvalidMembershipFunctionException(
                f"Unit '{self.name}': consequents {unknown} are not labels of '{self.output.name}'"
            )

    @property
    def variables(self) -> Tuple[LinguisticVariable, LinguisticVariable, LinguisticVariable]:
        return self.input1, self.input2, self.output

    @cached_property
    def output_grid(self) -> np.ndarray:
        return np.linspace(self.output.lo, self.output.hi, self.resolution)

    @cached_property
    def sampled_output(self) -> Tuple[np.ndarray, np.ndarray]:
        """Upper and lower output memberships on the grid, one row per output set."""
        upper = np.stack([s.umf.sample(self.output_grid) for s in self.output.sets])
        lower = np.stack([s.lmf.sample(self.output_grid) for s in self.output.sets])
        return upper, np.minimum(lower, upper)

    def with_variables(self, input1=None, input2=None, output=None) -> "FuzzyLogicUnit":
        return FuzzyLogicUnit(
            self.name,
            input1 or self.input1,
            input2 or self.input2,
            output or self.output,
            dict(self.rules),
            self.resolution,
        )


def infer(unit: FuzzyLogicUnit, x1: float, x2: float) -> List[Tuple[str, FiringInterval]]:
    """
    Fire every rule and aggregate same-consequent firings by elementwise max.

    Returns one entry per output label, in the output variable's set order;
    labels whose rules all missed carry [0, 0].

    Raises:
        FuzzyDomainException: If an input is outside its universe
    """
    grades1 = unit.input1.fuzzify(x1)
    grades2 = unit.input2.fuzzify(x2)
    lo = {label: 0.0 for label in unit.output.labels}
    hi = dict(lo)
    for (l1, l2), consequent in unit.rules.items():
        firing = fire_rule(grades1[l1], grades2[l2])
        lo[consequent] = max(lo[consequent], firing.lo)
        hi[consequent] = max(hi[consequent], firing.hi)
    return [(label, FiringInterval(lo[label], hi[label])) for label in unit.output.labels]


def aggregate_fou(upper_rows: np.ndarray, lower_rows: np.ndarray,
                  firing_lo: np.ndarray, firing_hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Clip each consequent FOU by its firing interval and take the union (max).

    Shapes broadcast as (..., sets, points) against (..., sets).
    """
    upper = np.max(np.minimum(firing_hi[..., None], upper_rows), axis=-2)
    lower = np.max(np.minimum(firing_lo[..., None], lower_rows), axis=-2)
    return upper, np.minimum(lower, upper)


def _km_endpoint(ys: np.ndarray, lower: np.ndarray, upper: np.ndarray, left: bool) -> float:
    theta = (lower + upper) / 2.0
    y = float(ys @ theta / theta.sum())
    n = len(ys)
    switch = None
    for _ in range(MAX_KM_ITERATIONS):
        new_switch = int(np.clip(np.searchsorted(ys, y, side="right") - 1, 0, n - 2))
        if new_switch == switch:
            break
        switch = new_switch
        if left:
            weights = np.concatenate([upper[:switch + 1], lower[switch + 1:]])
        else:
            weights = np.concatenate([lower[:switch + 1], upper[switch + 1:]])
        den = weights.sum()
        if den == 0.0:
            break
        y = float(ys @ weights / den)
    else:
        logger.debug(f"Karnik-Mendel iteration hit the {MAX_KM_ITERATIONS}-step cap")
    return y


def km_centroid(ys: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> Tuple[float, float]:
    """
    Karnik-Mendel centroid [yl, yr] of a sampled FOU.

    Raises:
        NoRuleFiredException: If the upper membership is zero everywhere
    """
    if not np.any(upper > 0.0):
        raise NoRuleFiredException("No rule fired: aggregated upper membership is zero everywhere")
    yl = _km_endpoint(ys, lower, upper, left=True)
    yr = _km_endpoint(ys, lower, upper, left=False)
    return yl, max(yl, yr)


def km_enumerate(ys: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exhaustive switch-point centroid over the last axis, batched over the others.

    Every switch k in [-1, n-1] is tried; yl is the smallest and yr the largest
    centroid. Rows whose upper membership is zero everywhere yield NaN.
    """
    ys = np.asarray(ys, dtype=float)
    zero = np.zeros(lower.shape[:-1] + (1,))
    cum_u = np.concatenate([zero, np.cumsum(upper, axis=-1)], axis=-1)
    cum_l = np.concatenate([zero, np.cumsum(lower, axis=-1)], axis=-1)
    cum_yu = np.concatenate([zero, np.cumsum(ys * upper, axis=-1)], axis=-1)
    cum_yl = np.concatenate([zero, np.cumsum(ys * lower, axis=-1)], axis=-1)
    tot_u, tot_l = cum_u[..., -1:], cum_l[..., -1:]
    tot_yu, tot_yl = cum_yu[..., -1:], cum_yl[..., -1:]

    with np.errstate(divide="ignore", invalid="ignore"):
        den_left = cum_u + (tot_l - cum_l)
        left = np.where(den_left > 0, (cum_yu + (tot_yl - cum_yl)) / den_left, np.nan)
        den_right = cum_l + (tot_u - cum_u)
        right = np.where(den_right > 0, (cum_yl + (tot_yu - cum_yu)) / den_right, np.nan)

    dead = ~np.any(upper > 0.0, axis=-1)
    left[dead] = 0.0
    right[dead] = 0.0
    yl = np.nanmin(left, axis=-1)
    yr = np.nanmax(right, axis=-1)
    yl = np.where(dead, np.nan, yl)
    yr = np.where(dead, np.nan, np.maximum(yl, yr))
    return yl, yr


def km_type_reduce(fired: Sequence[Tuple[IT2FuzzySet, FiringInterval]], resolution: int = DEFAULT_RESOLUTION,
                   universe: Tuple[float, float] = (0.0, 1.0)) -> Tuple[float, float]:
    """
    Type-reduce fired consequents to the interval centroid [yl, yr].

    The aggregated FOU is sampled at `resolution` evenly spaced points of the
    output universe before the Karnik-Mendel iterations.

    Raises:
        NoRuleFiredException: If every firing interval is zero
    """
    if resolution < 2:
        raise ValueError(f"Type-reduction resolution must be >= 2, got {resolution}")
    if not fired:
        raise NoRuleFiredException("No rule fired: empty consequent list")
    ys = np.linspace(universe[0], universe[1], resolution)
    upper_rows = np.stack([s.umf.sample(ys) for s, _ in fired])
    lower_rows = np.minimum(np.stack([s.lmf.sample(ys) for s, _ in fired]), upper_rows)
    lo = np.array([g.lo for _, g in fired])
    hi = np.array([g.hi for _, g in fired])
    upper, lower = aggregate_fou(upper_rows, lower_rows, lo, hi)
    return km_centroid(ys, lower, upper)


def defuzzify(yl: float, yr: float) -> float:
    if yl > yr + ORDER_EPS:
        raise ValueError(f"Type-reduced interval is inverted: [{yl}, {yr}]")
    return (yl + yr) / 2.0


def evaluate_unit(unit: FuzzyLogicUnit, x1: float, x2: float) -> float:
    """
    Crisp output of a unit: infer, type-reduce on the unit's cached output grid, defuzzify.

    Raises:
        FuzzyDomainException: If an input is outside its universe
        NoRuleFiredException: If no rule fires for (x1, x2)
    """
    fired = infer(unit, x1, x2)
    upper_rows, lower_rows = unit.sampled_output
    lo = np.array([g.lo for _, g in fired])
    hi = np.array([g.hi for _, g in fired])
    upper, lower = aggregate_fou(upper_rows, lower_rows, lo, hi)
    try:
        yl, yr = km_centroid(unit.output_grid, lower, upper)
    except NoRuleFiredException as e:
        raise NoRuleFiredException(f"Unit '{unit.name}' at ({x1}, {x2}): {e}") from e
    return min(max(defuzzify(yl, yr), unit.output.lo), unit.output.hi)
