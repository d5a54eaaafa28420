import numpy as np
import pytest

from app.fuzzy.hierarchy import CandidateFeatures, flatten_parameters
from app.schemas.scenario import PsoConfig
from app.services.pso_tuner import (
    JunctionContext,
    JunctionFitness,
    Particle,
    PsoTuner,
    SearchSpace,
    fitness,
    init_swarm,
    run_objective,
    sphere,
    tune_step,
    update_position,
    update_velocity,
)

SPHERE_SPACE = SearchSpace(np.full(10, -5.12), np.full(10, 5.12))

# Clerc-Kennedy constriction constants
CONSTRICTED = dict(w=0.7298, c1=1.49618, c2=1.49618)


def _features(density, speed=1.0):
    return CandidateFeatures(density=density, max_speed_norm=speed, familiarity=0.5, usual_speed=15.0,
                             departure_time=8.0, weather=0.0)


def _context(hierarchy, densities, names="abc"):
    return JunctionContext(tuple((n, _features(d)) for n, d in zip(names, densities)), hierarchy)


def _random_context(hierarchy, rng):
    """Two to four candidates with random features and raw densities."""
    size = int(rng.integers(2, 5))
    candidates = tuple(
        (f"e{i}", CandidateFeatures(
            density=float(rng.uniform(0.0, 0.15)), max_speed_norm=float(rng.uniform(0.0, 1.0)),
            familiarity=float(rng.uniform(0.0, 1.0)), usual_speed=float(rng.uniform(0.0, 40.0)),
            departure_time=float(rng.uniform(0.0, 24.0)), weather=float(rng.uniform(0.0, 1.0)),
        ))
        for i in range(size)
    )
    return JunctionContext(candidates, hierarchy, tuple(float(d) for d in rng.uniform(0.0, 0.15, size)))


class TestSwarmMechanics:
    """Initialization, velocity and position updates."""

    def test_init_is_deterministic(self):
        first = init_swarm(PsoConfig(seed=4), SPHERE_SPACE)
        second = init_swarm(PsoConfig(seed=4), SPHERE_SPACE)
        other = init_swarm(PsoConfig(seed=5), SPHERE_SPACE)
        assert np.array_equal(first.positions, second.positions)
        assert not np.array_equal(first.positions, other.positions)

    def test_init_within_bounds(self):
        swarm = init_swarm(PsoConfig(seed=1), SPHERE_SPACE)
        vmax = SPHERE_SPACE.vmax(0.2)
        assert len(swarm.particles) == 30
        for p in swarm.particles:
            assert np.all(np.abs(p.position) <= 5.12)
            assert np.all(np.abs(p.velocity) <= vmax)

    def test_velocity_update_and_clamp(self):
        p = Particle(np.zeros(2), np.array([1.0, -1.0]), np.array([1.0, 1.0]))
        cfg = PsoConfig(w=0.5, c1=1.0, c2=1.0)
        v = update_velocity(p, np.array([2.0, -2.0]), cfg, np.random.default_rng(0), np.ones(2),
                            r1=np.full(2, 0.5), r2=np.full(2, 0.25))
        assert v == pytest.approx([1.0, -0.5])

    def test_position_update_repairs_blocks(self):
        space = SearchSpace(np.zeros(6), np.ones(6), block_size=6)
        p = Particle(np.array([0.2, 0.4, 0.6, 0.8, 0.9, 0.1]), np.array([0.5, 0.0, 0.0, 0.0, 0.5, 0.0]),
                     np.zeros(6))
        assert update_position(p, space) == pytest.approx([0.4, 0.6, 0.7, 0.8, 1.0, 0.1])

    def test_invalid_space_rejected(self):
        with pytest.raises(ValueError):
            SearchSpace(np.ones(3), np.zeros(3))
        with pytest.raises(ValueError):
            SearchSpace(np.zeros(0), np.zeros(0))


class TestTuneStep:
    """Convergence and stopping rules."""

    def test_sphere_converges(self):
        solved = 0
        for seed in range(10):
            cfg = PsoConfig(seed=seed, iterations_per_call=200, stall_patience=0, **CONSTRICTED)
            swarm, _ = run_objective(sphere, cfg, SPHERE_SPACE)
            solved += swarm.gbest_fitness < 1e-2
        assert solved >= 9

    def test_sphere_with_default_constants(self):
        # w=0.99, c1=c2=2 keeps the swarm from contracting: it stays near the optimum without reaching 1e-2
        for seed in range(10):
            cfg = PsoConfig(seed=seed, iterations_per_call=200, stall_patience=0)
            swarm, history = run_objective(sphere, cfg, SPHERE_SPACE)
            assert np.isfinite(swarm.gbest_fitness)
            assert all(b <= a for a, b in zip(history, history[1:]))
            assert 1e-2 < swarm.gbest_fitness < 5.0

    def test_gbest_history_never_rises(self):
        cfg = PsoConfig(seed=3, iterations_per_call=100, stall_patience=0)
        _, history = run_objective(sphere, cfg, SPHERE_SPACE)
        assert len(history) == 100
        assert all(b <= a for a, b in zip(history, history[1:]))

    def test_same_seed_same_trajectory(self):
        cfg = PsoConfig(seed=8, iterations_per_call=20, stall_patience=0)
        assert run_objective(sphere, cfg, SPHERE_SPACE)[1] == run_objective(sphere, cfg, SPHERE_SPACE)[1]

    def test_stall_stops_early(self):
        cfg = PsoConfig(seed=1, iterations_per_call=10, stall_patience=3)
        swarm = init_swarm(cfg, SPHERE_SPACE)
        swarm, _ = tune_step(swarm, lambda positions: np.zeros(positions.shape[0]), cfg)
        assert len(swarm.history) == 3

    def test_lower_bound_stops_before_iterating(self):
        class Flat:
            lower_bound = 1.0

            def __call__(self, positions):
                return np.ones(positions.shape[0])

        cfg = PsoConfig(seed=1)
        swarm, best = tune_step(init_swarm(cfg, SPHERE_SPACE), Flat(), cfg)
        assert swarm.history == []
        assert swarm.gbest_fitness == 1.0

    def test_personal_bests_rescored_on_new_objective(self):
        cfg = PsoConfig(seed=2, iterations_per_call=5, stall_patience=0)
        swarm, _ = tune_step(init_swarm(cfg, SPHERE_SPACE), sphere, cfg)
        shifted = lambda positions: sphere(positions) + 100.0  # noqa: E731
        swarm, _ = tune_step(swarm, shifted, cfg)
        assert swarm.gbest_fitness >= 100.0


class TestJunctionFitness:
    """Density-share fitness of a parameterized controller."""

    def test_candidates_sorted_with_their_densities(self, hierarchy):
        ctx = JunctionContext((("b", _features(0.1)), ("a", _features(0.0))), hierarchy, (0.3, 0.1))
        assert ctx.edge_ids == ("a", "b")
        assert ctx.densities == (0.1, 0.3)

    def test_zero_total_density_gives_uniform_shares(self, hierarchy):
        ctx = _context(hierarchy, (0.0, 0.0, 0.0))
        assert ctx.density_shares() == pytest.approx([1 / 3] * 3)
        assert ctx.uniform_density

    def test_default_controller_picks_the_empty_edge(self, hierarchy):
        ctx = _context(hierarchy, (0.0, 0.14))
        assert fitness(flatten_parameters(hierarchy), ctx) == 0.0

    def test_scaling_densities_keeps_fitness(self, hierarchy):
        ctx = _context(hierarchy, (0.03, 0.05, 0.07))
        template = flatten_parameters(hierarchy)
        base = fitness(template, ctx)
        for k in (0.5, 2.0):
            assert fitness(template, ctx.scaled(k)) == base
        assert fitness(template, ctx.scaled(10.0)) == pytest.approx(base, rel=1e-12)

    def test_batch_fitness_matches_scalar(self, hierarchy):
        ctx = _context(hierarchy, (0.01, 0.06, 0.12))
        template = flatten_parameters(hierarchy)
        swarm = init_swarm(PsoConfig(seed=6, swarm_size=10), SearchSpace.from_parameters(template))
        batch = JunctionFitness(ctx, template)(swarm.positions)
        for value, position in zip(batch, swarm.positions):
            assert value == fitness(template.with_values(position), ctx)

    def test_random_contexts_are_scale_invariant(self, hierarchy):
        rng = np.random.default_rng(17)
        template = flatten_parameters(hierarchy)
        swarm = init_swarm(PsoConfig(seed=3, swarm_size=10), SearchSpace.from_parameters(template))
        for _ in range(100):
            ctx = _random_context(hierarchy, rng)
            objective = JunctionFitness(ctx, template)
            base = objective(swarm.positions)
            chosen = np.argmax(objective.preferences(swarm.positions), axis=1)
            for k in (0.5, 2.0, 10.0):
                scaled = JunctionFitness(ctx.scaled(k), template)
                assert np.array_equal(np.argmax(scaled.preferences(swarm.positions), axis=1), chosen)
                if k == 10.0:
                    assert scaled(swarm.positions) == pytest.approx(base, rel=1e-12)
                else:
                    assert np.array_equal(scaled(swarm.positions), base)
            assert fitness(template, ctx.scaled(2.0)) == fitness(template, ctx)

    def test_lower_bound_is_smallest_share(self, hierarchy):
        ctx = _context(hierarchy, (0.02, 0.06))
        objective = JunctionFitness(ctx, flatten_parameters(hierarchy))
        assert objective.lower_bound == pytest.approx(0.25)


class TestPsoTuner:
    """Per-run tuner driven by junction contexts."""

    def test_uniform_context_is_skipped(self, hierarchy):
        tuner = PsoTuner(hierarchy, PsoConfig(seed=1))
        assert tuner.tune(_context(hierarchy, (0.05, 0.05))) is hierarchy
        assert (tuner.calls, tuner.skipped) == (0, 1)

    def test_free_flow_context_keeps_untuned_controller(self, hierarchy):
        tuner = PsoTuner(hierarchy, PsoConfig(seed=1, iterations_per_call=3))
        tuner.tune(_context(hierarchy, (0.01, 0.08)))
        assert tuner.best_hierarchy is not hierarchy
        assert tuner.tune(_context(hierarchy, (0.0, 0.015))) is hierarchy
        assert (tuner.calls, tuner.skipped) == (1, 1)

    def test_zero_threshold_tunes_light_traffic(self, hierarchy):
        tuner = PsoTuner(hierarchy, PsoConfig(seed=1, iterations_per_call=3, min_density=0.0))
        tuner.tune(_context(hierarchy, (0.0, 0.015)))
        assert tuner.calls == 1

    def test_finds_the_empty_candidate(self, hierarchy):
        ctx = _context(hierarchy, (0.0, 0.05, 0.1))
        found = 0
        for seed in range(10):
            tuner = PsoTuner(hierarchy, PsoConfig(seed=seed))
            tuned = tuner.tune(ctx)
            found += fitness(flatten_parameters(tuned), ctx) == 0.0
            assert tuner.calls == 1
        assert found >= 8

    def test_fixed_fou_keeps_type1_root(self, hierarchy):
        tuner = PsoTuner(hierarchy, PsoConfig(seed=2, iterations_per_call=3), fix_fou=True)
        tuned = tuner.tune(_context(hierarchy, (0.01, 0.08)))
        for variable in tuned.unit(tuned.root).variables:
            assert all(s.lmf == s.umf for s in variable.sets)
