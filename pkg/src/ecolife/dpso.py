"""Dynamic particle swarm optimisation over the (keep-alive location x keep-alive time) grid.

Particles live in a continuous box ``[0, |L|-1] x [0, |KAT|-1]``; a position
is turned into a decision by rounding each axis to the nearest grid index.
On top of the textbook velocity/position update the swarm

* rescales its inertia and acceleration coefficients from how much the
  invocation gap and the carbon intensity moved since the last invocation, and
* re-seeds the worse half of its particles whenever either of them moved.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DomainError

Fitness = Callable[[str, float], float]


@dataclass(frozen=True)
class SearchSpace:
    locations: tuple[str, ...]
    kat: tuple[float, ...]

    def __post_init__(self):
        locs = tuple(self.locations)
        kat = tuple(float(k) for k in self.kat)
        if not locs:
            raise ConfigError("search space needs at least one location")
        if len(set(locs)) != len(locs):
            raise ConfigError("duplicate keep-alive locations")
        if not kat or kat[0] != 0:
            raise ConfigError("keep-alive grid must start at 0 (no keep-alive)")
        if any(b <= a for a, b in zip(kat, kat[1:])):
            raise ConfigError("keep-alive grid must be strictly ascending")
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "kat", kat)

    @property
    def upper(self) -> np.ndarray:
        return np.array([len(self.locations) - 1, len(self.kat) - 1], dtype=float)

    @property
    def size(self) -> int:
        return len(self.locations) * len(self.kat)

    def cells(self) -> list[tuple[str, float]]:
        return [(loc, k) for loc in self.locations for k in self.kat]


@dataclass(frozen=True)
class CoefficientBounds:
    w_min: float = 0.5
    w_max: float = 1.0
    c_min: float = 0.3
    c_max: float = 1.0

    def __post_init__(self):
        if not (0 <= self.w_min <= self.w_max and 0 <= self.c_min <= self.c_max):
            raise ConfigError("coefficient bounds must satisfy 0 <= min <= max")


@dataclass(frozen=True)
class EnvironmentDelta:
    delta_f: float = 0.0
    delta_f_max: float = 0.0
    delta_ci: float = 0.0
    delta_ci_max: float = 0.0

    def __post_init__(self):
        if min(self.delta_f, self.delta_f_max, self.delta_ci, self.delta_ci_max) < 0:
            raise DomainError("environment deltas must be >= 0")
        if self.delta_f > self.delta_f_max or self.delta_ci > self.delta_ci_max:
            raise DomainError("running maxima must bound the current deltas")

    @property
    def changed(self) -> bool:
        return self.delta_f > 0 or self.delta_ci > 0

    def ratios(self) -> tuple[float, float]:
        rf = self.delta_f / self.delta_f_max if self.delta_f_max > 0 else 0.0
        rc = self.delta_ci / self.delta_ci_max if self.delta_ci_max > 0 else 0.0
        return rf, rc


@dataclass
class Perception:
    """Per-function memory of the last gap and CI, producing :class:`EnvironmentDelta`.

    The gap change is ``|gap - previous gap|`` (the gap itself on the first
    re-invocation); the CI change is measured against the CI seen at the
    function's previous invocation. Maxima are running maxima for this function.
    """

    last_ci: float
    last_gap: float | None = None
    max_f: float = 0.0
    max_ci: float = 0.0

    def observe(self, gap: float, ci: float) -> EnvironmentDelta:
        d_f = gap if self.last_gap is None else abs(gap - self.last_gap)
        d_ci = abs(ci - self.last_ci)
        self.max_f = max(self.max_f, d_f)
        self.max_ci = max(self.max_ci, d_ci)
        self.last_gap, self.last_ci = gap, ci
        return EnvironmentDelta(d_f, self.max_f, d_ci, self.max_ci)


@dataclass
class Swarm:
    space: SearchSpace
    x: np.ndarray
    v: np.ndarray
    pbest_x: np.ndarray
    pbest_fit: np.ndarray
    gbest_x: np.ndarray
    gbest_fit: float
    rng: np.random.Generator
    bounds: CoefficientBounds = field(default_factory=CoefficientBounds)
    w: float = 0.5
    c1: float = 1.0
    c2: float = 1.0

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def copy(self) -> "Swarm":
        return copy.deepcopy(self)

    def same_as(self, other: "Swarm") -> bool:
        """Bit-exact comparison of the optimiser state (the RNG included)."""
        arrays = ("x", "v", "pbest_x", "pbest_fit", "gbest_x")
        return (all(np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays)
                and _same_float(self.gbest_fit, other.gbest_fit)
                and (self.w, self.c1, self.c2) == (other.w, other.c1, other.c2)
                and self.rng.bit_generator.state == other.rng.bit_generator.state)


def _same_float(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def init_swarm(space: SearchSpace, n: int = 15, seed=None,
               bounds: CoefficientBounds | None = None) -> Swarm:
    """``n`` particles uniform over the box, at rest, each its own personal best.

    Fitness values start at +inf; call :func:`rescore` once a fitness exists.
    Coefficients start at the no-change setting (``w_min``, ``c_max``).
    """
    if n < 1:
        raise DomainError(f"swarm needs at least one particle, got {n}")
    bounds = bounds or CoefficientBounds()
    rng = _as_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, 2)) * space.upper
    return Swarm(
        space=space,
        x=x,
        v=np.zeros_like(x),
        pbest_x=x.copy(),
        pbest_fit=np.full(n, np.inf),
        gbest_x=x[0].copy(),
        gbest_fit=math.inf,
        rng=rng,
        bounds=bounds,
        w=bounds.w_min,
        c1=bounds.c_max,
        c2=bounds.c_max,
    )


def update_weights(swarm: Swarm, env: EnvironmentDelta) -> tuple[float, float, float]:
    rf, rc = env.ratios()
    b = swarm.bounds
    w = min(max(b.w_max * (rf + rc), b.w_min), b.w_max)
    c = min(max(b.c_max * (1.0 - rf - rc), b.c_min), b.c_max)
    swarm.w, swarm.c1, swarm.c2 = w, c, c
    return w, c, c


def perceive_and_redistribute(swarm: Swarm, env: EnvironmentDelta,
                              rng: np.random.Generator | None = None) -> Swarm:
    """Re-seed the worse ``ceil(N/2)`` particles if the environment moved.

    "Worse" is by personal-best fitness, ties broken toward the higher particle
    index, so the particle holding the global best always stays. Re-seeded
    particles start at rest and forget their personal best; ``gbest`` is kept.
    """
    if not env.changed:
        return swarm
    rng = rng or swarm.rng
    n = swarm.n
    order = sorted(range(n), key=lambda i: (swarm.pbest_fit[i], i))
    moved = np.array(order[n - math.ceil(n / 2):], dtype=int)
    fresh = rng.uniform(0.0, 1.0, size=(len(moved), 2)) * swarm.space.upper
    swarm.x[moved] = fresh
    swarm.v[moved] = 0.0
    swarm.pbest_x[moved] = fresh
    swarm.pbest_fit[moved] = np.inf
    return swarm


def discretize(x: Sequence[float], space: SearchSpace) -> tuple[str, float]:
    """Nearest grid cell; an exact half rounds down."""
    li = min(max(math.ceil(float(x[0]) - 0.5), 0), len(space.locations) - 1)
    ki = min(max(math.ceil(float(x[1]) - 0.5), 0), len(space.kat) - 1)
    return space.locations[li], space.kat[ki]


def rescore(swarm: Swarm, fitness: Fitness) -> Swarm:
    """Re-evaluate remembered positions under a (possibly changed) fitness.

    The scheduler's fitness moves between invocations (new gap history, new
    CI), so the stored personal/global best scores go stale. The global best
    becomes the best of the previous global-best position and all personal
    bests, the previous position winning ties.
    """
    space = swarm.space
    for i in range(swarm.n):
        swarm.pbest_fit[i] = fitness(*discretize(swarm.pbest_x[i], space))
    best_x, best_fit = swarm.gbest_x, fitness(*discretize(swarm.gbest_x, space))
    for i in range(swarm.n):
        if swarm.pbest_fit[i] < best_fit:
            best_x, best_fit = swarm.pbest_x[i], swarm.pbest_fit[i]
    swarm.gbest_x, swarm.gbest_fit = best_x.copy(), float(best_fit)
    return swarm


def step(swarm: Swarm, fitness: Fitness, r1: np.ndarray | None = None,
         r2: np.ndarray | None = None) -> Swarm:
    """One velocity/position update followed by personal/global best bookkeeping.

    ``r1``/``r2`` (one draw per particle) come from the swarm RNG unless given.
    Bests are replaced only on strict improvement.
    """
    n = swarm.n
    if r1 is None:
        r1 = swarm.rng.random(n)
    if r2 is None:
        r2 = swarm.rng.random(n)
    r1 = np.asarray(r1, dtype=float).reshape(n, 1)
    r2 = np.asarray(r2, dtype=float).reshape(n, 1)
    swarm.v = (swarm.w * swarm.v
               + swarm.c1 * r1 * (swarm.pbest_x - swarm.x)
               + swarm.c2 * r2 * (swarm.gbest_x - swarm.x))
    swarm.x = np.clip(swarm.x + swarm.v, 0.0, swarm.space.upper)
    for i in range(n):
        score = fitness(*discretize(swarm.x[i], swarm.space))
        if score < swarm.pbest_fit[i]:
            swarm.pbest_fit[i] = score
            swarm.pbest_x[i] = swarm.x[i]
            if score < swarm.gbest_fit:
                swarm.gbest_fit = float(score)
                swarm.gbest_x = swarm.x[i].copy()
    return swarm


def best_decision(swarm: Swarm) -> tuple[str, float]:
    return discretize(swarm.gbest_x, swarm.space)
