"""Comparison policies: fixed keep-alive, single-generation EcoLife and clairvoyant bounds."""

from __future__ import annotations

import enum
from typing import Callable

from .carbon import keepalive_carbon, keepalive_energy, service_carbon, service_energy
from .errors import ConfigError, OracleSizeError
from .policy import Decision, Policy, SimContext
from .scheduler import EcoLifePolicy
from .sim import accounting_normalizers

ORACLE_MAX_INVOCATIONS = 2000
ORACLE_MAX_OPTIONS = 16
FIXED_KEEPALIVE_S = 600.0


class PolicyKind(str, enum.Enum):
    ECOLIFE = "ecolife"
    NEW_ONLY = "new_only"
    OLD_ONLY = "old_only"
    ECO_NEW = "eco_new"
    ECO_OLD = "eco_old"
    ORACLE = "oracle"
    CO2_OPT = "co2_opt"
    STIME_OPT = "stime_opt"
    ENERGY_OPT = "energy_opt"


ALL_KINDS = tuple(k.value for k in PolicyKind)


class FixedPolicy(Policy):
    """Run and keep alive on one generation for a fixed period (10 min by default).

    When the pool is full the new keep-alive is simply refused.
    """

    def __init__(self, generation: str, keepalive: float = FIXED_KEEPALIVE_S, kind: str | None = None):
        self.generation = generation
        self.keepalive = float(keepalive)
        self.locations = (generation,)
        self.kind = kind or f"{generation}_only"

    def on_invocation(self, function_id, index, now, warm):
        return self.generation, Decision(self.generation, self.keepalive)


def fixed_policy(generation: str, keepalive: float = FIXED_KEEPALIVE_S) -> FixedPolicy:
    return FixedPolicy(generation, keepalive)


def eco_single(generation: str) -> EcoLifePolicy:
    """EcoLife restricted to one hardware generation."""
    return EcoLifePolicy(locations=(generation,), kind=f"eco_{generation}")


class ClairvoyantPolicy(Policy):
    """Per-invocation brute force with knowledge of the future.

    After each invocation it knows when the function is next invoked and the
    realised CI path, and picks the keep-alive (location, time) minimising the
    keep-alive cost plus the cost of that next invocation (executed warm on the
    keep-alive location if covered, else cold wherever is cheapest). Pools are
    unbounded, so this is a contention-free bound. Without contention the
    windows are independent, which makes the per-window choice optimal for the
    whole run under the chosen metric.

    ``metric`` is one of ``objective`` (the combined three-term objective with
    run-accounting normalisers), ``carbon``, ``service_time`` or ``energy``.
    """

    contention_free = True
    METRICS = ("objective", "carbon", "service_time", "energy")

    def __init__(self, metric: str = "objective", kind: str | None = None,
                 locations=("old", "new")):
        if metric not in self.METRICS:
            raise ConfigError(f"unknown clairvoyant metric {metric!r}")
        self.metric = metric
        self.locations = tuple(locations)
        self.kind = kind or {"objective": "oracle", "carbon": "co2_opt",
                             "service_time": "stime_opt", "energy": "energy_opt"}[metric]

    def bind(self, ctx: SimContext) -> None:
        super().bind(ctx)
        n_opts = len(self.locations) * len(ctx.config.kat)
        if len(ctx.trace) > ORACLE_MAX_INVOCATIONS or n_opts > ORACLE_MAX_OPTIONS:
            raise OracleSizeError(
                f"{self.kind} brute force limited to {ORACLE_MAX_INVOCATIONS} invocations and "
                f"{ORACLE_MAX_OPTIONS} options per decision; got {len(ctx.trace)} and {n_opts}")
        order = ctx.order
        self._next: dict[int, int] = {}
        last: dict[str, int] = {}
        for idx in order:
            fid = ctx.trace[idx].function_id
            if fid in last:
                self._next[last[fid]] = idx
            last[fid] = idx
        self._norms = accounting_normalizers(ctx.profiles, ctx.hardware, ctx.ci, ctx.config)
        self._service_cost, self._keep_cost = self._metric_functions()

    def _metric_functions(self) -> tuple[Callable, Callable]:
        ctx = self.ctx
        hw, ci, cfg = ctx.hardware, ctx.ci, ctx.config

        def kc(f, g, seconds, t):
            return keepalive_carbon(f, hw[g], seconds, ci.integrate(t, t + round(seconds * 1000))).total

        def sc(f, g, cold, t):
            return service_carbon(f, hw[g], cold, ci.at(t)).total

        if self.metric == "carbon":
            return sc, kc
        if self.metric == "service_time":
            return (lambda f, g, cold, t: f.on(g).service(cold)), (lambda f, g, seconds, t: 0.0)
        if self.metric == "energy":
            return ((lambda f, g, cold, t: service_energy(f, hw[g], cold)),
                    (lambda f, g, seconds, t: keepalive_energy(f, hw[g], seconds)))

        norms = self._norms

        def service_obj(f, g, cold, t):
            n = norms[f.id]
            return cfg.lambda_s * f.on(g).service(cold) / n.s_max + cfg.lambda_c * sc(f, g, cold, t) / n.sc_max

        def keep_obj(f, g, seconds, t):
            return cfg.lambda_c * kc(f, g, seconds, t) / norms[f.id].kc_max

        return service_obj, keep_obj

    def _placement(self, f, warm_loc: str | None, t: int) -> tuple[str, float]:
        best, best_cost = None, None
        for g in reversed(self.locations):
            cost = self._service_cost(f, g, g != warm_loc, t)
            if best_cost is None or cost < best_cost:
                best, best_cost = g, cost
        return best, best_cost

    def on_invocation(self, function_id, index, now, warm):
        f = self.ctx.profiles[function_id]
        warm_locs = [g for g in self.locations if warm.get(g)]
        exec_loc, _ = self._placement(f, warm_locs[0] if warm_locs else None, now)

        nxt = self._next.get(index)
        t_next = self.ctx.trace[nxt].timestamp_ms if nxt is not None else None
        best, best_cost = None, None
        for k in self.ctx.config.kat:
            k_ms = round(k * 1000)
            for g in self.locations:
                if t_next is None:
                    cost = self._keep_cost(f, g, k_ms / 1000.0, now)
                else:
                    covered = k > 0 and t_next - now <= k_ms
                    held = min(k_ms, t_next - now) / 1000.0
                    _, next_cost = self._placement(f, g if covered else None, t_next)
                    cost = self._keep_cost(f, g, held, now) + next_cost
                if best_cost is None or cost < best_cost:
                    best, best_cost = Decision(g, k), cost
        return exec_loc, best


def make_policy(kind: str | PolicyKind) -> Policy:
    kind = PolicyKind(kind)
    if kind is PolicyKind.ECOLIFE:
        return EcoLifePolicy()
    if kind is PolicyKind.NEW_ONLY:
        return FixedPolicy("new")
    if kind is PolicyKind.OLD_ONLY:
        return FixedPolicy("old")
    if kind is PolicyKind.ECO_NEW:
        return eco_single("new")
    if kind is PolicyKind.ECO_OLD:
        return eco_single("old")
    metric = {PolicyKind.ORACLE: "objective", PolicyKind.CO2_OPT: "carbon",
              PolicyKind.STIME_OPT: "service_time", PolicyKind.ENERGY_OPT: "energy"}[kind]
    return ClairvoyantPolicy(metric)
