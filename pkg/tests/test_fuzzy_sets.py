import numpy as np
import pytest

from app.core.exceptions import FuzzyDomainException, InvalidMembershipFunctionException
from app.fuzzy.sets import (
    FiringInterval,
    IT2FuzzySet,
    LinguisticVariable,
    Trapezoid,
    derive_lower,
    membership_interval,
)
from app.fuzzy.inference import fire_rule

FREE = IT2FuzzySet("Free", Trapezoid(0.0, 0.0, 0.25, 0.45), Trapezoid(0.02, 0.04, 0.21, 0.41, 0.9))


class TestTrapezoid:
    """Trapezoid construction and evaluation."""

    def test_plateau_and_slopes(self):
        t = Trapezoid(0.25, 0.45, 0.55, 0.75)
        assert t(0.5) == 1.0
        assert t(0.35) == pytest.approx(0.5)
        assert t(0.65) == pytest.approx(0.5)
        assert t(0.25) == 0.0
        assert t(0.8) == 0.0

    def test_shoulder_is_full_at_its_edge(self):
        assert Trapezoid(0.0, 0.0, 0.25, 0.45)(0.0) == 1.0
        assert Trapezoid(0.55, 0.75, 1.0, 1.0)(1.0) == 1.0

    def test_rejects_unordered_breakpoints(self):
        with pytest.raises(InvalidMembershipFunctionException):
            Trapezoid(0.5, 0.4, 0.6, 0.7)

    def test_rejects_bad_height(self):
        with pytest.raises(InvalidMembershipFunctionException):
            Trapezoid(0.0, 0.1, 0.2, 0.3, 0.0)

    def test_sample_matches_scalar_call(self):
        t = Trapezoid(0.1, 0.3, 0.4, 0.9, 0.8)
        xs = np.linspace(-0.1, 1.1, 97)
        assert list(t.sample(xs)) == [t(x) for x in xs]


class TestIT2FuzzySet:
    """Footprint invariants and membership intervals."""

    def test_membership_inside_lower_plateau(self):
        grade = membership_interval(FREE, 0.1)
        assert (grade.lo, grade.hi) == pytest.approx((0.9, 1.0))

    def test_membership_outside_support(self):
        grade = membership_interval(FREE, 0.45)
        assert (grade.lo, grade.hi) == (0.0, 0.0)

    def test_membership_on_falling_edges(self):
        grade = membership_interval(FREE, 0.35)
        assert grade.hi == pytest.approx(0.5)
        assert grade.lo == pytest.approx(0.27)

    def test_lower_never_exceeds_upper(self):
        for x in np.linspace(0.0, 0.5, 201):
            grade = membership_interval(FREE, float(x))
            assert 0.0 <= grade.lo <= grade.hi <= 1.0

    def test_rejects_lower_above_upper(self):
        with pytest.raises(InvalidMembershipFunctionException):
            IT2FuzzySet("Bad", Trapezoid(0.2, 0.3, 0.4, 0.5), Trapezoid(0.1, 0.3, 0.4, 0.5, 0.9))

    def test_rejects_upper_below_full_height(self):
        with pytest.raises(InvalidMembershipFunctionException):
            IT2FuzzySet("Bad", Trapezoid(0.2, 0.3, 0.4, 0.5, 0.8), Trapezoid(0.3, 0.3, 0.4, 0.4, 0.5))

    def test_from_encoding_derives_nested_lower(self):
        s = IT2FuzzySet.from_encoding("Medium", (0.25, 0.45, 0.55, 0.75), 0.9, 0.1)
        assert s.lmf.breakpoints == pytest.approx((0.3, 0.45, 0.55, 0.7))
        assert s.lmf.h == 0.9
        assert s.encoding() == pytest.approx((0.25, 0.45, 0.55, 0.75, 0.9, 0.1))

    def test_derive_lower_keeps_plateau_inside(self):
        lower = derive_lower(Trapezoid(0.0, 0.5, 0.5, 1.0), 0.8, 0.5)
        assert lower.breakpoints == pytest.approx((0.5, 0.5, 0.5, 0.5))

    def test_degenerate_collapses_lower(self):
        s = IT2FuzzySet.from_encoding("Medium", (0.25, 0.45, 0.55, 0.75)).degenerate()
        assert s.lmf == s.umf
        grade = membership_interval(s, 0.3)
        assert grade.lo == grade.hi


class TestLinguisticVariable:
    """Universe checks and fuzzification."""

    def test_out_of_universe_raises(self):
        var = LinguisticVariable("density", 0.0, 1.0, (FREE,))
        with pytest.raises(FuzzyDomainException) as exc:
            var.fuzzify(1.5)
        assert exc.value.variable == "density"

    def test_empty_universe_rejected(self):
        with pytest.raises(InvalidMembershipFunctionException):
            LinguisticVariable("x", 1.0, 1.0, (FREE,))

    def test_duplicate_labels_rejected(self):
        with pytest.raises(InvalidMembershipFunctionException):
            LinguisticVariable("x", 0.0, 1.0, (FREE, FREE))

    def test_coverage_gaps(self):
        low = IT2FuzzySet.from_encoding("Low", (0.0, 0.0, 0.2, 0.3))
        high = IT2FuzzySet.from_encoding("High", (0.6, 0.8, 1.0, 1.0))
        var = LinguisticVariable("x", 0.0, 1.0, (low, high))
        assert var.coverage_gaps() == ((0.3, 0.6),)


class TestFireRule:
    """Min t-norm on both bounds."""

    def test_min_of_both_bounds(self):
        assert fire_rule(FiringInterval(0.9, 1.0), FiringInterval(0.9, 1.0)) == FiringInterval(0.9, 1.0)
        assert fire_rule(FiringInterval(0.2, 0.5), FiringInterval(0.4, 0.6)) == FiringInterval(0.2, 0.5)

    def test_zero_dominates(self):
        assert fire_rule(FiringInterval(0.0, 0.0), FiringInterval(0.8, 1.0)).is_zero

    def test_invalid_interval_rejected(self):
        with pytest.raises(InvalidMembershipFunctionException):
            FiringInterval(0.6, 0.4)
