import math
import re
from typing import Sequence, Tuple

_IDENTIFIER = re.compile(r"^[^\s,]+$")


def validate_universe(lo: float, hi: float, name: str = "universe") -> Tuple[float, float]:
    """
    Validate a closed real interval used as a universe of discourse.

    Raises:
        ValueError: If a bound is not finite or lo >= hi
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"Universe of '{name}' must have finite bounds, got [{lo}, {hi}]")
    if lo >= hi:
        raise ValueError(f"Universe of '{name}' must satisfy lo < hi, got [{lo}, {hi}]")
    return float(lo), float(hi)


def validate_breakpoints(values: Sequence[float], name: str = "trapezoid") -> Tuple[float, float, float, float]:
    """
    Validate trapezoid breakpoints a <= b <= c <= d.

    Raises:
        ValueError: If there are not four finite, non-decreasing values
    """
    if len(values) != 4:
        raise ValueError(f"'{name}' needs exactly 4 breakpoints, got {len(values)}")
    a, b, c, d = (float(v) for v in values)
    if not all(math.isfinite(v) for v in (a, b, c, d)):
        raise ValueError(f"'{name}' breakpoints must be finite, got {(a, b, c, d)}")
    if not (a <= b <= c <= d):
        raise ValueError(f"'{name}' breakpoints must satisfy a <= b <= c <= d, got {(a, b, c, d)}")
    return a, b, c, d


def validate_unit_interval(value: float, name: str, *, open_low: bool = False) -> float:
    """
    Validate that a value lies in [0, 1] (or (0, 1] when open_low).

    Raises:
        ValueError: If the value is outside the interval
    """
    value = float(value)
    low_ok = value > 0.0 if open_low else value >= 0.0
    if not (low_ok and value <= 1.0):
        bracket = "(0, 1]" if open_low else "[0, 1]"
        raise ValueError(f"'{name}' must lie in {bracket}, got {value}")
    return value


def validate_identifier(value: str, kind: str = "id") -> str:
    """
    Validate an element identifier (non-empty, no whitespace or commas).

    Commas are reserved because identifiers are written to CSV route columns.
    """
    if not value or not _IDENTIFIER.match(value):
        raise ValueError(f"Invalid {kind} '{value}': must be non-empty without whitespace or commas")
    return value
