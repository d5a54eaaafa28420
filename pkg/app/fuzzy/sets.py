"""Interval type-2 fuzzy set algebra with trapezoidal footprints of uncertainty."""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from app.core.exceptions import FuzzyDomainException, InvalidMembershipFunctionException
from app.core.validators import validate_breakpoints, validate_universe

# Tolerance used when comparing membership grades that come from different trapezoids.
GRADE_EPS = 1e-12


@dataclass(frozen=True)
class Trapezoid:
    """Trapezoidal membership function: 0 outside [a, d], h on [b, c], linear in between."""

    a: float
    b: float
    c: float
    d: float
    h: float = 1.0

    def __post_init__(self):
        try:
            validate_breakpoints((self.a, self.b, self.c, self.d))
        except ValueError as e:
            raise InvalidMembershipFunctionException(str(e)) from e
        if not (0.0 < self.h <= 1.0):
            raise InvalidMembershipFunctionException(f"Trapezoid height must lie in (0, 1], got {self.h}")

    @property
    def breakpoints(self) -> Tuple[float, float, float, float]:
        return self.a, self.b, self.c, self.d

    def __call__(self, x: float) -> float:
        if self.b <= x <= self.c:
            return self.h
        if self.a < x < self.b:
            return self.h * (x - self.a) / (self.b - self.a)
        if self.c < x < self.d:
            return self.h * (self.d - x) / (self.d - self.c)
        return 0.0

    def sample(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised evaluation; agrees bit-for-bit with the scalar call."""
        return trapezoid_grades(np.asarray(xs, dtype=float), self.a, self.b, self.c, self.d, self.h)


def trapezoid_grades(x, a, b, c, d, h) -> np.ndarray:
    """
    Broadcasting trapezoid evaluation over arrays of inputs and/or parameters.

    Uses the same arithmetic as Trapezoid.__call__ so batched and scalar
    evaluations of the same set are identical.
    """
    x, a, b, c, d, h = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, a, b, c, d, h)))
    out = np.zeros(x.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        rising = (x > a) & (x < b)
        falling = (x > c) & (x < d)
        out = np.where(rising, h * (x - a) / (b - a), out)
        out = np.where(falling, h * (d - x) / (d - c), out)
    out = np.where((x >= b) & (x <= c), h, out)
    return out


def derive_lower(upper: Trapezoid, h_lmf: float, inset: float) -> Trapezoid:
    """
    Build a lower membership function nested inside `upper`.

    The support is shrunk by `inset` x (d - a) on both sides (never past the
    upper plateau) and the height lowered to `h_lmf`. The lower plateau stays
    inside the upper one, which keeps lmf(x) <= umf(x) everywhere.
    """
    if not (0.0 <= inset <= 0.5):
        raise InvalidMembershipFunctionException(f"Support inset must lie in [0, 0.5], got {inset}")
    a, b, c, d = upper.breakpoints
    width = d - a
    la = min(a + inset * width, c)
    ld = max(d - inset * width, b)
    return Trapezoid(la, max(b, la), min(c, ld), ld, h_lmf)


@dataclass(frozen=True)
class FiringInterval:
    """Interval of membership or firing degrees [lo, hi] within [0, 1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise InvalidMembershipFunctionException(
                f"Firing interval must satisfy 0 <= lo <= hi <= 1, got [{self.lo}, {self.hi}]"
            )

    @property
    def is_zero(self) -> bool:
        return self.hi == 0.0


ZERO_INTERVAL = FiringInterval(0.0, 0.0)


@dataclass(frozen=True)
class IT2FuzzySet:
    """
    Labeled footprint of uncertainty bounded by an upper and a lower trapezoid.

    `h_lmf` and `inset` record how the lower function was derived from the
    upper one when the set was built with `from_encoding`; they are None for a
    hand-specified lower function.
    """

    label: str
    umf: Trapezoid
    lmf: Trapezoid
    h_lmf: Optional[float] = None
    inset: Optional[float] = None

    def __post_init__(self):
        if self.umf.h != 1.0:
            raise InvalidMembershipFunctionException(f"Set '{self.label}': upper function must have height 1")
        if self.lmf.h > self.umf.h:
            raise InvalidMembershipFunctionException(f"Set '{self.label}': lower height exceeds upper height")
        if self.lmf.a < self.umf.a - GRADE_EPS or self.lmf.d > self.umf.d + GRADE_EPS:
            raise InvalidMembershipFunctionException(
                f"Set '{self.label}': lower support [{self.lmf.a}, {self.lmf.d}] leaves upper support "
                f"[{self.umf.a}, {self.umf.d}]"
            )
        # Both functions are piecewise linear, so containment at every breakpoint
        # of either one implies containment everywhere.
        for x in self.umf.breakpoints + self.lmf.breakpoints:
            if self.lmf(x) > self.umf(x) + GRADE_EPS:
                raise InvalidMembershipFunctionException(
                    f"Set '{self.label}': lower function exceeds upper function at x={x}"
                )

    @classmethod
    def from_encoding(cls, label: str, breakpoints, h_lmf: float = 0.9, inset: float = 0.1) -> "IT2FuzzySet":
        """Build a set from its UMF breakpoints and the (height, inset) of its LMF."""
        umf = Trapezoid(*breakpoints, 1.0)
        return cls(label, umf, derive_lower(umf, h_lmf, inset), float(h_lmf), float(inset))

    def encoding(self) -> Tuple[float, float, float, float, float, float]:
        """(a, b, c, d, h_lmf, inset); hand-specified lower functions are approximated."""
        a, b, c, d = self.umf.breakpoints
        if self.h_lmf is not None and self.inset is not None:
            return a, b, c, d, self.h_lmf, self.inset
        width = d - a
        inset = 0.0 if width == 0 else max(self.lmf.a - a, d - self.lmf.d, 0.0) / width
        return a, b, c, d, self.lmf.h, min(inset, 0.5)

    def degenerate(self) -> "IT2FuzzySet":
        """Type-1 version of the set: the lower function collapses onto the upper one."""
        return IT2FuzzySet(self.label, self.umf, self.umf, 1.0, 0.0)


def membership_interval(fuzzy_set: IT2FuzzySet, x: float,
                        variable: Optional["LinguisticVariable"] = None) -> FiringInterval:
    """
    Membership interval [lmf(x), umf(x)] of a crisp value.

    Raises:
        FuzzyDomainException: If `variable` is given and x is outside its universe
    """
    if variable is not None:
        variable.check(x)
    upper = fuzzy_set.umf(x)
    lower = min(fuzzy_set.lmf(x), upper)
    return FiringInterval(lower, upper)


@dataclass(frozen=True)
class LinguisticVariable:
    """Named closed universe [lo, hi] partitioned by an ordered tuple of IT2 sets."""

    name: str
    lo: float
    hi: float
    sets: Tuple[IT2FuzzySet, ...]
    units: str = ""

    def __post_init__(self):
        try:
            validate_universe(self.lo, self.hi, self.name)
        except ValueError as e:
            raise InvalidMembershipFunctionException(str(e)) from e
        if not self.sets:
            raise InvalidMembershipFunctionException(f"Variable '{self.name}' has no fuzzy sets")
        labels = [s.label for s in self.sets]
        if len(set(labels)) != len(labels):
            raise InvalidMembershipFunctionException(f"Variable '{self.name}' has duplicate labels {labels}")
        for s in self.sets:
            if s.umf.a < self.lo - GRADE_EPS or s.umf.d > self.hi + GRADE_EPS:
                raise InvalidMembershipFunctionException(
                    f"Set '{s.label}' of '{self.name}' leaves the universe [{self.lo}, {self.hi}]"
                )

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(s.label for s in self.sets)

    def get(self, label: str) -> IT2FuzzySet:
        for s in self.sets:
            if s.label == label:
                return s
        raise KeyError(f"Variable '{self.name}' has no set '{label}'")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def check(self, x: float) -> None:
        if not self.contains(x):
            raise FuzzyDomainException(self.name, x, (self.lo, self.hi))

    def clamp(self, x: float) -> float:
        return min(max(float(x), self.lo), self.hi)

    def fuzzify(self, x: float) -> Dict[str, FiringInterval]:
        """Membership interval of x in every set of the variable."""
        self.check(x)
        return {s.label: membership_interval(s, x) for s in self.sets}

    def coverage_gaps(self) -> Tuple[Tuple[float, float], ...]:
        """Sub-intervals of the universe left outside every upper support [a, d]."""
        gaps = []
        cursor = self.lo
        for a, d in sorted((s.umf.a, s.umf.d) for s in self.sets):
            if a > cursor:
                gaps.append((cursor, a))
            cursor = max(cursor, d)
        if cursor < self.hi:
            gaps.append((cursor, self.hi))
        return tuple(gaps)

    def with_sets(self, sets) -> "LinguisticVariable":
        return LinguisticVariable(self.name, self.lo, self.hi, tuple(sets), self.units)
