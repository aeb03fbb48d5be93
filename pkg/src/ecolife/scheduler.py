"""Keep-alive decisions (KDM), execution placement (EPDM) and the EcoLife policy.

The keep-alive decision for a function minimises

    lambda_s * E[S] / s_max + lambda_c * E[SC] / sc_max + lambda_c * E[KC] / kc_max

over (location, keep-alive time), where the expectations are empirical means
over the function's recent inter-arrival gaps.
"""

from __future__ import annotations

import logging
import math
import zlib
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import dpso
from .carbon import HardwareProfile, keepalive_carbon, service_carbon
from .errors import PreconditionError
from .policy import Decision, ObjectiveWeights, Policy, SimContext
from .warm_pool import priority as pool_priority
from .workload import FunctionProfile

log = logging.getLogger(__name__)

KC_FLOOR = 1e-12
MIN_GAP_S = 1e-3

__all__ = [
    "ArrivalHistory", "CostTable", "Decision", "EcoLifePolicy", "Normalizers",
    "ObjectiveWeights", "cost_table", "epdm_choose", "kdm_fitness", "normalizers",
]


@dataclass(frozen=True)
class Normalizers:
    s_max: float
    sc_max: float
    kc_max: float

    def __post_init__(self):
        if not (self.s_max > 0 and self.sc_max > 0 and self.kc_max > 0):
            raise PreconditionError("normalizers must be strictly positive")


class ArrivalHistory:
    """The last ``window`` inter-arrival gaps (seconds) of one function."""

    def __init__(self, window: int = 10, gaps: Sequence[float] = ()):
        self._gaps: deque[float] = deque(maxlen=window)
        for g in gaps:
            self.append(g)

    def append(self, gap: float) -> None:
        # same-millisecond re-invocations still count as a (tiny) positive gap
        self._gaps.append(max(float(gap), MIN_GAP_S))

    def __len__(self) -> int:
        return len(self._gaps)

    def __iter__(self):
        return iter(self._gaps)

    @property
    def window(self) -> int:
        return self._gaps.maxlen


def _oldest_first(locations: Sequence[str]) -> str:
    return locations[0]


def normalizers(f: FunctionProfile, hardware: Mapping[str, HardwareProfile],
                space: dpso.SearchSpace, ci: float) -> Normalizers:
    """Per-function denominators at intensity ``ci``.

    ``s_max`` is the cold service time on the oldest generation in the space,
    ``sc_max`` the largest cold service carbon over the space, and ``kc_max``
    the carbon of the longest keep-alive on the newest generation.
    """
    s_max = f.on(_oldest_first(space.locations)).cold_service
    sc_max = max(service_carbon(f, hardware[g], True, ci).total for g in space.locations)
    kc_gen = "new" if "new" in hardware else space.locations[-1]
    k_max = space.kat[-1]
    kc_max = keepalive_carbon(f, hardware[kc_gen], k_max, ci * k_max).total
    return Normalizers(s_max, sc_max, max(kc_max, KC_FLOOR))


@dataclass(frozen=True)
class CostTable:
    """Per-location service time/carbon and keep-alive rate at one CI value."""

    locations: tuple[str, ...]
    s_warm: dict
    s_cold: dict
    sc_warm: dict
    sc_cold: dict
    kc_rate: dict


def cost_table(f: FunctionProfile, hardware: Mapping[str, HardwareProfile],
               locations: Sequence[str], ci: float) -> CostTable:
    s_warm, s_cold, sc_warm, sc_cold, kc_rate = {}, {}, {}, {}, {}
    for g in locations:
        perf = f.on(g)
        s_warm[g] = perf.exec
        s_cold[g] = perf.cold_service
        sc_warm[g] = service_carbon(f, hardware[g], False, ci).total
        sc_cold[g] = service_carbon(f, hardware[g], True, ci).total
        kc_rate[g] = keepalive_carbon(f, hardware[g], 1.0, ci).total
    return CostTable(tuple(locations), s_warm, s_cold, sc_warm, sc_cold, kc_rate)


def _score(weights: ObjectiveWeights, norms: Normalizers, s: float, sc: float) -> float:
    return weights.lambda_s * s / norms.s_max + weights.lambda_c * sc / norms.sc_max


def _argmin_newest(locations: Sequence[str], score) -> str:
    # ties go to the newer generation (faster service at equal score)
    best, best_score = None, math.inf
    for g in reversed(locations):
        s = score(g)
        if s < best_score:
            best, best_score = g, s
    return best


def epdm_choose(table: CostTable, warm: Mapping[str, bool], weights: ObjectiveWeights,
                norms: Normalizers) -> str:
    """Execution location: the warm generation if there is one, otherwise the
    cheapest cold start by ``lambda_s*S/s_max + lambda_c*SC/sc_max``."""
    warm_locs = [g for g in table.locations if warm.get(g)]
    if len(warm_locs) == 1:
        return warm_locs[0]
    if warm_locs:
        return _argmin_newest(warm_locs, lambda g: _score(weights, norms, table.s_warm[g], table.sc_warm[g]))
    return _argmin_newest(table.locations, lambda g: _score(weights, norms, table.s_cold[g], table.sc_cold[g]))


def kdm_fitness(table: CostTable, candidate: Decision, history: ArrivalHistory | Sequence[float],
                weights: ObjectiveWeights, norms: Normalizers) -> float:
    """Objective of keeping alive at ``candidate`` given the recent gaps.

    A sampled gap is a warm start iff ``0 < gap <= k`` (then it runs on the
    keep-alive location); otherwise it is a cold start placed by the EPDM
    cold rule. Keep-alive carbon accrues for ``min(k, gap)``.
    """
    gaps = list(history)
    if not gaps:
        raise PreconditionError("kdm_fitness needs at least one observed gap")
    loc, k = candidate.keep_location, candidate.keep_duration
    cold_loc = _argmin_newest(table.locations,
                              lambda g: _score(weights, norms, table.s_cold[g], table.sc_cold[g]))
    s_sum = sc_sum = kc_sum = 0.0
    for gap in gaps:
        if k > 0 and gap <= k:
            s_sum += table.s_warm[loc]
            sc_sum += table.sc_warm[loc]
        else:
            s_sum += table.s_cold[cold_loc]
            sc_sum += table.sc_cold[cold_loc]
        kc_sum += table.kc_rate[loc] * min(k, gap)
    n = len(gaps)
    return (weights.lambda_s * (s_sum / n) / norms.s_max
            + weights.lambda_c * (sc_sum / n) / norms.sc_max
            + weights.lambda_c * (kc_sum / n) / norms.kc_max)


def function_seed(seed: int, function_id: str) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(function_id.encode("utf-8"))])


class _FunctionState:
    __slots__ = ("swarm", "history", "perception", "last_time")

    def __init__(self, swarm, history, perception, last_time):
        self.swarm = swarm
        self.history = history
        self.perception = perception
        self.last_time = last_time


class EcoLifePolicy(Policy):
    """DPSO keep-alive decisions, EPDM placement and priority pool adjustment.

    ``locations`` restricted to one generation gives the single-generation
    variants. ``perception``/``dynamic_weights`` default to the config flags
    and exist for ablations.
    """

    kind = "ecolife"
    uses_adjust = True

    def __init__(self, locations: Sequence[str] = ("old", "new"), kind: str | None = None,
                 perception: bool | None = None, dynamic_weights: bool | None = None):
        self.locations = tuple(locations)
        self.allows_transfer = len(self.locations) > 1
        if kind:
            self.kind = kind
        self._perception = perception
        self._dynamic_weights = dynamic_weights

    def bind(self, ctx: SimContext) -> None:
        super().bind(ctx)
        cfg = ctx.config
        self.weights = cfg.weights
        self.space = dpso.SearchSpace(self.locations, cfg.kat)
        self.coeff_bounds = dpso.CoefficientBounds(cfg.w_min, cfg.w_max, cfg.c_min, cfg.c_max)
        self.perception = cfg.perception if self._perception is None else self._perception
        self.dynamic_weights = cfg.dynamic_weights if self._dynamic_weights is None else self._dynamic_weights
        self.state: dict[str, _FunctionState] = {}
        self._cache: dict[tuple[str, float], tuple[CostTable, Normalizers]] = {}

    def costs(self, function_id: str, ci: float) -> tuple[CostTable, Normalizers]:
        key = (function_id, ci)
        hit = self._cache.get(key)
        if hit is None:
            f = self.ctx.profiles[function_id]
            hit = (cost_table(f, self.ctx.hardware, self.locations, ci),
                   normalizers(f, self.ctx.hardware, self.space, ci))
            self._cache[key] = hit
        return hit

    def on_invocation(self, function_id, index, now, warm):
        ci = self.ctx.ci.at(now)
        table, norms = self.costs(function_id, ci)
        exec_loc = epdm_choose(table, warm, self.weights, norms)
        st = self.state.get(function_id)
        cfg = self.ctx.config
        if st is None:
            swarm = dpso.init_swarm(self.space, cfg.particles, seed=function_seed(cfg.seed, function_id),
                                    bounds=self.coeff_bounds)
            self.state[function_id] = _FunctionState(
                swarm, ArrivalHistory(cfg.window), dpso.Perception(last_ci=ci), now)
            loc, k = dpso.best_decision(swarm)
            return exec_loc, Decision(loc, k)

        gap = max((now - st.last_time) / 1000.0, MIN_GAP_S)
        st.last_time = now
        st.history.append(gap)
        env = st.perception.observe(gap, ci)
        swarm = st.swarm
        if self.dynamic_weights:
            dpso.update_weights(swarm, env)
        if self.perception:
            dpso.perceive_and_redistribute(swarm, env)

        memo: dict[tuple[str, float], float] = {}
        history = list(st.history)
        weights = self.weights

        def fitness(loc: str, k: float) -> float:
            key = (loc, k)
            val = memo.get(key)
            if val is None:
                val = memo[key] = kdm_fitness(table, Decision(loc, k), history, weights, norms)
            return val

        dpso.rescore(swarm, fitness)
        for _ in range(cfg.iters):
            dpso.step(swarm, fitness)
        loc, k = dpso.best_decision(swarm)
        return exec_loc, Decision(loc, k)

    def priority(self, function_id, generation, now):
        ci = self.ctx.ci.at(now)
        _, norms = self.costs(function_id, ci)
        f = self.ctx.profiles[function_id]
        w = self.weights
        return pool_priority(f, self.ctx.hardware[generation], ci, w.lambda_s, w.lambda_c, norms).score
