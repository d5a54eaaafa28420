"""Real-time particle swarm tuning of the root unit's membership functions."""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.core.logging import get_logger
from app.fuzzy.hierarchy import (
    PARAMS_PER_SET,
    CandidateFeatures,
    Hierarchy,
    ParameterVector,
    apply_parameters,
    evaluate_preference,
    evaluate_root_batch,
    flatten_parameters,
)
from app.schemas.scenario import PsoConfig

logger = get_logger(__name__)

LOWER_BOUND_EPS = 1e-15


@dataclass(frozen=True)
class SearchSpace:
    """Box bounds; with `block_size` each block's first four values are kept sorted."""

    lower: np.ndarray
    upper: np.ndarray
    block_size: Optional[int] = None

    def __post_init__(self):
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("Search space bounds must be 1-D arrays of equal length")
        if self.lower.shape[0] == 0:
            raise ValueError("Search space has zero dimensions")
        if np.any(self.lower > self.upper):
            raise ValueError("Search space lower bounds exceed upper bounds")

    @classmethod
    def from_parameters(cls, p: ParameterVector) -> "SearchSpace":
        return cls(p.lower.copy(), p.upper.copy(), PARAMS_PER_SET)

    @property
    def dimension(self) -> int:
        return int(self.lower.shape[0])

    def vmax(self, fraction: float) -> np.ndarray:
        return fraction * (self.upper - self.lower)

    def repair(self, x: np.ndarray) -> np.ndarray:
        """Clamp into the box, then sort each trapezoid's (a, b, c, d)."""
        repaired = np.clip(x, self.lower, self.upper)
        if self.block_size:
            blocks = repaired.reshape(repaired.shape[:-1] + (-1, self.block_size))
            blocks[..., :4] = np.sort(blocks[..., :4], axis=-1)
            repaired = blocks.reshape(repaired.shape)
        return repaired


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float = float("inf")


@dataclass
class Swarm:
    particles: List[Particle]
    space: SearchSpace
    rng: np.random.Generator
    gbest_position: np.ndarray
    gbest_fitness: float = float("inf")
    iteration: int = 0
    history: List[float] = field(default_factory=list)

    @property
    def positions(self) -> np.ndarray:
        return np.stack([p.position for p in self.particles])

    @property
    def pbest_positions(self) -> np.ndarray:
        return np.stack([p.pbest_position for p in self.particles])


def init_swarm(cfg: PsoConfig, bounds: SearchSpace) -> Swarm:
    """
    Positions uniform in the bounds (then repaired), velocities uniform in [-Vmax, Vmax].

    Deterministic for a fixed `cfg.seed`.
    """
    rng = np.random.default_rng(cfg.seed)
    vmax = bounds.vmax(cfg.vmax_fraction)
    particles = []
    for _ in range(cfg.swarm_size):
        position = bounds.repair(rng.uniform(bounds.lower, bounds.upper))
        velocity = rng.uniform(-vmax, vmax)
        particles.append(Particle(position, velocity, position.copy()))
    logger.debug(f"Initialized swarm of {cfg.swarm_size} particles in {bounds.dimension} dimensions")
    return Swarm(particles, bounds, rng, particles[0].position.copy())


def update_velocity(p: Particle, gbest: np.ndarray, cfg: PsoConfig, rng: np.random.Generator,
                    vmax: np.ndarray, r1: Optional[np.ndarray] = None,
                    r2: Optional[np.ndarray] = None) -> np.ndarray:
    """Inertia plus cognitive and social pulls, drawn per dimension, clamped to +/-Vmax."""
    dim = p.position.shape[0]
    r1 = rng.random(dim) if r1 is None else r1
    r2 = rng.random(dim) if r2 is None else r2
    velocity = (
        cfg.w * p.velocity
        + cfg.c1 * r1 * (p.pbest_position - p.position)
        + cfg.c2 * r2 * (gbest - p.position)
    )
    return np.clip(velocity, -vmax, vmax)


def update_position(p: Particle, space: SearchSpace) -> np.ndarray:
    return space.repair(p.position + p.velocity)


Objective = Callable[[np.ndarray], np.ndarray]


def tune_step(swarm: Swarm, objective: Objective, cfg: PsoConfig) -> Tuple[Swarm, np.ndarray]:
    """
    Run up to `cfg.iterations_per_call` PSO iterations against `objective` (minimized).

    The persisted personal bests are first re-scored under the objective, since
    the context may have changed since the previous call. Tuning stops early
    when gbest stalls for `stall_patience` iterations or reaches the objective's
    `lower_bound` attribute, if it has one.
    """
    vmax = swarm.space.vmax(cfg.vmax_fraction)
    lower_bound = getattr(objective, "lower_bound", None)

    pbest_fitness = np.asarray(objective(swarm.pbest_positions), dtype=float)
    for particle, value in zip(swarm.particles, pbest_fitness):
        particle.pbest_fitness = float(value)
    best = int(np.argmin(pbest_fitness))
    swarm.gbest_fitness = float(pbest_fitness[best])
    swarm.gbest_position = swarm.particles[best].pbest_position.copy()

    stalled = 0
    for _ in range(cfg.iterations_per_call):
        if lower_bound is not None and swarm.gbest_fitness <= lower_bound + LOWER_BOUND_EPS:
            break
        for particle in swarm.particles:
            particle.velocity = update_velocity(particle, swarm.gbest_position, cfg, swarm.rng, vmax)
            particle.position = update_position(particle, swarm.space)

        values = np.asarray(objective(swarm.positions), dtype=float)
        for particle, value in zip(swarm.particles, values):
            if value < particle.pbest_fitness:
                particle.pbest_fitness = float(value)
                particle.pbest_position = particle.position.copy()

        previous = swarm.gbest_fitness
        best = int(np.argmin([p.pbest_fitness for p in swarm.particles]))
        if swarm.particles[best].pbest_fitness < swarm.gbest_fitness:
            swarm.gbest_fitness = swarm.particles[best].pbest_fitness
            swarm.gbest_position = swarm.particles[best].pbest_position.copy()
        swarm.iteration += 1
        swarm.history.append(swarm.gbest_fitness)

        stalled = stalled + 1 if previous - swarm.gbest_fitness < cfg.stall_tolerance else 0
        if cfg.stall_patience and stalled >= cfg.stall_patience:
            logger.debug(f"PSO stalled for {stalled} iterations at gbest {swarm.gbest_fitness:.6f}")
            break

    return swarm, swarm.gbest_position.copy()


@dataclass(frozen=True)
class JunctionContext:
    """
    Candidate next edges at one routing decision, sorted by edge id.

    `densities` are the raw vehicle-count/length values the fitness ratio is
    computed from; they default to the (clamped) density features.
    """

    candidates: Tuple[Tuple[str, CandidateFeatures], ...]
    hierarchy: Hierarchy
    densities: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("Junction context needs at least one candidate")
        ordered = tuple(sorted(self.candidates, key=lambda c: c[0]))
        dens = self.densities
        if dens is None:
            dens = tuple(f.density for _, f in ordered)
        elif ordered != tuple(self.candidates):
            by_id = dict(zip((c[0] for c in self.candidates), dens))
            dens = tuple(by_id[c[0]] for c in ordered)
        if any(d < 0 for d in dens) or len(dens) != len(ordered):
            raise ValueError("Candidate densities must be non-negative, one per candidate")
        object.__setattr__(self, "candidates", ordered)
        object.__setattr__(self, "densities", tuple(float(d) for d in dens))

    @property
    def edge_ids(self) -> Tuple[str, ...]:
        return tuple(edge_id for edge_id, _ in self.candidates)

    @property
    def uniform_density(self) -> bool:
        return len(set(self.densities)) <= 1

    def density_shares(self) -> np.ndarray:
        dens = np.asarray(self.densities, dtype=float)
        total = dens.sum()
        if total == 0.0:
            return np.full(dens.shape, 1.0 / dens.shape[0])
        return dens / total

    def scaled(self, k: float) -> "JunctionContext":
        return JunctionContext(self.candidates, self.hierarchy, tuple(d * k for d in self.densities))


def fitness(position: ParameterVector, ctx: JunctionContext) -> float:
    """
    Density share of the candidate the parameterized hierarchy would choose (lower is better).

    Ties in preference go to the lowest edge id.
    """
    tuned = apply_parameters(ctx.hierarchy, position)
    preferences = [evaluate_preference(tuned, features) for _, features in ctx.candidates]
    chosen = int(np.argmax(preferences))
    return float(ctx.density_shares()[chosen])


class JunctionFitness:
    """Batched fitness over a whole swarm; the root's crisp inputs are computed once."""

    def __init__(self, ctx: JunctionContext, template: ParameterVector):
        self.ctx = ctx
        self.template = template
        inputs = np.array([ctx.hierarchy.root_inputs(features) for _, features in ctx.candidates])
        self.x1 = inputs[:, 0]
        self.x2 = inputs[:, 1]
        self.shares = ctx.density_shares()
        self.lower_bound = float(self.shares.min())

    def preferences(self, positions: np.ndarray) -> np.ndarray:
        return evaluate_root_batch(self.ctx.hierarchy, self.template, np.atleast_2d(positions), self.x1, self.x2)

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        chosen = np.argmax(self.preferences(positions), axis=1)
        return self.shares[chosen]


class PsoTuner:
    """
    One persistent swarm per simulation run, re-contextualized at every decision.

    With `fix_fou` the height/inset dimensions are pinned, so the tuned root
    stays type-1.
    """

    def __init__(self, hierarchy: Hierarchy, cfg: PsoConfig, fix_fou: bool = False):
        self.hierarchy = hierarchy
        self.cfg = cfg
        self.template = flatten_parameters(hierarchy, fix_fou=fix_fou)
        self.space = SearchSpace.from_parameters(self.template)
        self.swarm = init_swarm(cfg, self.space)
        self.best_hierarchy = hierarchy
        self.calls = 0
        self.skipped = 0

    def tune(self, ctx: JunctionContext) -> Hierarchy:
        """
        Tune against the context and return the hierarchy carrying the new gbest.

        Free-flowing junctions, where no candidate reaches `min_density`, keep
        the untuned controller; equal densities keep the last tuned one.
        """
        if max(ctx.densities) < self.cfg.min_density:
            self.skipped += 1
            return self.hierarchy
        if ctx.uniform_density:
            self.skipped += 1
            return self.best_hierarchy
        objective = JunctionFitness(ctx, self.template)
        self.swarm, best = tune_step(self.swarm, objective, self.cfg)
        self.calls += 1
        self.best_hierarchy = apply_parameters(self.hierarchy, self.template.with_values(best))
        logger.debug(
            f"PSO call {self.calls}: gbest {self.swarm.gbest_fitness:.4f} "
            f"(bound {objective.lower_bound:.4f}) over {len(ctx.candidates)} candidates"
        )
        return self.best_hierarchy


def sphere(positions: np.ndarray) -> np.ndarray:
    """Sum of squares per row; the standard PSO sanity objective."""
    return np.sum(np.atleast_2d(positions) ** 2, axis=1)


def run_objective(objective: Objective, cfg: PsoConfig, space: SearchSpace,
                  calls: int = 1) -> Tuple[Swarm, List[float]]:
    """Tune a fresh swarm against a fixed objective for `calls` tune_step calls."""
    swarm = init_swarm(cfg, space)
    for _ in range(calls):
        swarm, _ = tune_step(swarm, objective, cfg)
    return swarm, list(swarm.history)
