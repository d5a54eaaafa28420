import numpy as np
import pytest

from app.core.exceptions import HierarchyConstructionException, ParameterVectorException
from app.fuzzy.defaults import (
    DEFAULT_WIRING,
    FAVORABILITY,
    PREFERENCE_LABELS,
    default_units,
    leading_rules,
    monotone_rules,
)
from app.fuzzy.hierarchy import (
    CandidateFeatures,
    HierarchySpec,
    apply_parameters,
    build_hierarchy,
    degenerate_to_t1,
    evaluate_preference,
    evaluate_root_batch,
    flatten_parameters,
    repair_positions,
)
from app.fuzzy.inference import evaluate_unit
from app.fuzzy.sets import trapezoid_grades

FAVORABLE = CandidateFeatures(
    density=0.0, max_speed_norm=1.0, familiarity=1.0, usual_speed=35.0, departure_time=2.0, weather=0.0
)


def _spec(**wiring_overrides):
    wiring = dict(DEFAULT_WIRING)
    wiring.update(wiring_overrides)
    return HierarchySpec(tuple(default_units(51)), wiring)


def _random_features(rng):
    return CandidateFeatures(
        density=float(rng.uniform(0.0, 0.15)),
        max_speed_norm=float(rng.uniform(0.0, 1.0)),
        familiarity=float(rng.uniform(0.0, 1.0)),
        usual_speed=float(rng.uniform(0.0, 40.0)),
        departure_time=float(rng.uniform(0.0, 24.0)),
        weather=float(rng.uniform(0.0, 1.0)),
    )


class TestBuildHierarchy:
    """Wiring validation and evaluation order."""

    def test_default_order_and_root(self, hierarchy):
        assert hierarchy.order == ("Path", "Driver", "Environment", "PD", "PDE")
        assert hierarchy.root == "PDE"

    def test_cycle_rejected(self):
        with pytest.raises(HierarchyConstructionException, match="cycle"):
            build_hierarchy(_spec(PD=("PD", "Driver")))

    def test_dangling_reference_rejected(self):
        with pytest.raises(HierarchyConstructionException, match="dangling"):
            build_hierarchy(_spec(PD=("Path", "Nope")))

    def test_unused_leaf_rejected(self):
        with pytest.raises(HierarchyConstructionException):
            build_hierarchy(_spec(Environment=("departure_time", "density")))

    def test_second_root_rejected(self):
        with pytest.raises(HierarchyConstructionException):
            build_hierarchy(_spec(PDE=("Path", "Environment")))

    def test_declared_root_must_match(self):
        spec = HierarchySpec(tuple(default_units(51)), dict(DEFAULT_WIRING), root="PD")
        with pytest.raises(HierarchyConstructionException):
            build_hierarchy(spec)

    def test_leaf_variable_lookup(self, hierarchy):
        assert hierarchy.leaf_variable("density").hi == pytest.approx(0.15)
        assert hierarchy.leaf_variable("usual_speed").hi == 40.0


class TestEvaluatePreference:
    """End-to-end preference index."""

    def test_favorable_candidate_is_preferred(self, hierarchy):
        assert evaluate_preference(hierarchy, FAVORABLE) > 0.5

    def test_jammed_candidate_scores_lower(self, hierarchy):
        jammed = CandidateFeatures(**{**FAVORABLE.as_dict(), "density": 0.14})
        assert evaluate_preference(hierarchy, jammed) < evaluate_preference(hierarchy, FAVORABLE)

    def test_preference_in_unit_interval(self, hierarchy):
        rng = np.random.default_rng(5)
        for _ in range(50):
            assert 0.0 <= evaluate_preference(hierarchy, _random_features(rng)) <= 1.0

    def test_root_inputs_feed_the_root_unit(self, hierarchy):
        x1, x2 = hierarchy.root_inputs(FAVORABLE)
        assert evaluate_unit(hierarchy.unit("PDE"), x1, x2) == evaluate_preference(hierarchy, FAVORABLE)


class TestParameterVector:
    """Flattening, bounds and decoding."""

    def test_root_only_dimension(self, hierarchy):
        assert flatten_parameters(hierarchy).dimension == 54

    def test_all_units_dimension(self, hierarchy):
        assert flatten_parameters(hierarchy, scope=hierarchy.order).dimension == 270

    def test_unknown_scope_rejected(self, hierarchy):
        with pytest.raises(ParameterVectorException):
            flatten_parameters(hierarchy, scope=["Nope"])

    def test_values_within_bounds(self, hierarchy):
        p = flatten_parameters(hierarchy, scope=hierarchy.order)
        assert np.all(p.lower <= p.values) and np.all(p.values <= p.upper)

    def test_apply_unchanged_vector_preserves_preferences(self, hierarchy):
        rebuilt = apply_parameters(hierarchy, flatten_parameters(hierarchy))
        rng = np.random.default_rng(9)
        for _ in range(20):
            f = _random_features(rng)
            assert evaluate_preference(rebuilt, f) == evaluate_preference(hierarchy, f)

    def test_out_of_bounds_reported(self, hierarchy):
        p = flatten_parameters(hierarchy)
        values = p.values.copy()
        values[0] = -5.0
        with pytest.raises(ParameterVectorException) as exc:
            apply_parameters(hierarchy, p.with_values(values))
        assert exc.value.report
        assert "PDE.input1" in exc.value.report[0]

    def test_wrong_length_rejected(self, hierarchy):
        p = flatten_parameters(hierarchy)
        with pytest.raises(ParameterVectorException):
            apply_parameters(hierarchy, p.with_values(p.values[:-1]))

    def test_fixed_fou_bounds(self, hierarchy):
        p = flatten_parameters(hierarchy, fix_fou=True)
        blocks = p.values.reshape(-1, 6)
        assert np.all(blocks[:, 4] == 1.0) and np.all(blocks[:, 5] == 0.0)
        assert np.all(p.lower.reshape(-1, 6)[:, 4] == p.upper.reshape(-1, 6)[:, 4])

    def test_degenerate_hierarchy_has_zero_footprint(self, hierarchy):
        t1 = degenerate_to_t1(hierarchy)
        for unit in t1.units.values():
            for variable in unit.variables:
                assert all(s.lmf == s.umf for s in variable.sets)

    def test_random_vectors_decode_to_nested_footprints(self, hierarchy):
        rng = np.random.default_rng(2024)
        template = flatten_parameters(hierarchy)
        positions = repair_positions(
            rng.uniform(template.lower, template.upper, size=(10_000, template.dimension)),
            template.lower, template.upper,
        )
        root = hierarchy.unit(hierarchy.root)
        universes = np.array([(v.lo, v.hi) for v in root.variables for _ in v.sets])
        grid = universes[:, :1] + np.linspace(0.0, 1.0, 401) * (universes[:, 1:] - universes[:, :1])
        params = []
        for position in positions:
            tuned = apply_parameters(hierarchy, template.with_values(position)).unit(hierarchy.root)
            params.append([[*s.umf.breakpoints, s.umf.h, *s.lmf.breakpoints, s.lmf.h]
                           for v in tuned.variables for s in v.sets])
        params = np.array(params)
        assert params.shape == (10_000, template.dimension // 6, 10)
        for chunk in np.array_split(params, 20):
            upper = trapezoid_grades(grid, *(chunk[..., k, None] for k in range(5)))
            lower = trapezoid_grades(grid, *(chunk[..., k, None] for k in range(5, 10)))
            assert np.all(lower >= 0.0) and np.all(upper <= 1.0)
            assert np.all(lower <= upper + 1e-12)


class TestBatchEvaluation:
    """Vectorised root evaluation against the scalar decode-and-evaluate path."""

    def test_batch_matches_scalar(self, hierarchy):
        rng = np.random.default_rng(21)
        template = flatten_parameters(hierarchy)
        positions = repair_positions(
            rng.uniform(template.lower, template.upper, size=(8, template.dimension)),
            template.lower, template.upper,
        )
        positions[0] = template.values
        features = [_random_features(rng) for _ in range(4)]
        inputs = np.array([hierarchy.root_inputs(f) for f in features])
        batch = evaluate_root_batch(hierarchy, template, positions, inputs[:, 0], inputs[:, 1])
        assert batch.shape == (8, 4)
        for i, position in enumerate(positions):
            tuned = apply_parameters(hierarchy, template.with_values(position))
            for j, f in enumerate(features):
                assert batch[i, j] == pytest.approx(evaluate_preference(tuned, f), abs=1e-9)

    def test_batch_requires_root_scope(self, hierarchy):
        template = flatten_parameters(hierarchy, scope=hierarchy.order)
        with pytest.raises(ParameterVectorException):
            evaluate_root_batch(hierarchy, template, template.values[None, :], np.zeros(1), np.zeros(1))


class TestDefaultRules:
    """Default rule tables of the units without a published rule base."""

    def test_monotone_rules_extremes(self):
        ranks = FAVORABILITY["preference"]
        rules = monotone_rules(PREFERENCE_LABELS, ranks, PREFERENCE_LABELS, ranks)
        assert rules[("Strong", "Strong")] == "Strong"
        assert rules[("Weak", "Weak")] == "Weak"
        assert rules[("Weak", "Strong")] == rules[("Strong", "Weak")] == "Medium"

    def test_leading_rules_follow_first_input(self):
        ranks = FAVORABILITY["preference"]
        rules = leading_rules(PREFERENCE_LABELS, ranks, PREFERENCE_LABELS, ranks)
        assert rules[("Strong", "Strong")] == "Strong"
        assert rules[("Weak", "Weak")] == "Weak"
        assert rules[("Weak", "Strong")] == rules[("Strong", "Weak")] == "Medium"
        assert rules[("Medium", "Strong")] == "Medium"
        assert rules[("Strong", "Medium")] == "Strong"

    def test_root_rules_are_monotone(self, hierarchy):
        ranks = FAVORABILITY["preference"]
        rules = hierarchy.unit("PDE").rules
        for (l1, l2), out in rules.items():
            for (m1, m2), other in rules.items():
                if ranks[m1] >= ranks[l1] and ranks[m2] >= ranks[l2]:
                    assert ranks[other] >= ranks[out]
