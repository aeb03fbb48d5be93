"""Deterministic trace replay with per-invocation service and carbon accounting."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .carbon import CarbonIntensitySeries, HardwareProfile, keepalive_carbon, service_carbon
from .dpso import SearchSpace
from .errors import ConfigError
from .policy import GENERATIONS, Policy, SimConfig, SimContext, event_order
from .scheduler import Normalizers, normalizers
from .warm_pool import PoolEntry, WarmPool, adjust
from .workload import FunctionProfile, InvocationTrace

log = logging.getLogger(__name__)

CDF_POINTS = 100


@dataclass
class MetricsRecord:
    function_id: str
    time_ms: int
    exec_location: str
    cold: bool
    service_time: float
    service_carbon: float
    keepalive_carbon: float
    keepalive_seconds: float
    keep_location: str
    keep_duration: float
    objective: float = 0.0

    @property
    def carbon(self) -> float:
        return self.service_carbon + self.keepalive_carbon


@dataclass
class OverheadStats:
    """Wall-clock time spent inside the policy per invocation (not reproducible)."""

    n: int = 0
    mean_ms: float = 0.0
    p95_ms: float = 0.0
    max_ms: float = 0.0
    total_ms: float = 0.0

    @classmethod
    def from_seconds(cls, samples: Sequence[float]) -> "OverheadStats":
        if not samples:
            return cls()
        ms = sorted(s * 1000.0 for s in samples)
        return cls(len(ms), math.fsum(ms) / len(ms), nearest_rank(ms, 95), ms[-1], math.fsum(ms))


@dataclass
class RunSummary:
    policy: str = ""
    invocations: int = 0
    cold_starts: int = 0
    total_service_time: float = 0.0
    mean_service_time: float = 0.0
    total_service_carbon: float = 0.0
    total_keepalive_carbon: float = 0.0
    total_carbon: float = 0.0
    mean_carbon: float = 0.0
    total_objective: float = 0.0
    keepalive_minutes: float = 0.0
    evictions: int = 0
    transfers: int = 0
    contention_free: bool = False
    service_time_percentiles: dict = field(default_factory=dict)
    carbon_percentiles: dict = field(default_factory=dict)
    cdf: list = field(default_factory=list)
    overhead: OverheadStats | None = None

    def to_dict(self) -> dict:
        """Everything except the wall-clock overhead, which is not reproducible."""
        d = asdict(self)
        d.pop("overhead")
        return d


@dataclass
class RunResult:
    records: list[MetricsRecord]
    summary: RunSummary


def nearest_rank(sorted_values: Sequence[float], q: int) -> float:
    """``q``-th percentile (integer ``q`` in 1..100) by the nearest-rank rule."""
    n = len(sorted_values)
    idx = max((q * n + 99) // 100 - 1, 0)
    return sorted_values[idx]


def summarize(records: Sequence[MetricsRecord], policy: str = "", evictions: int = 0,
              transfers: int = 0, contention_free: bool = False,
              overhead: OverheadStats | None = None) -> RunSummary:
    n = len(records)
    summary = RunSummary(policy=policy, invocations=n, evictions=evictions, transfers=transfers,
                         contention_free=contention_free, overhead=overhead)
    if not n:
        return summary
    st = [r.service_time for r in records]
    carbon = [r.carbon for r in records]
    summary.cold_starts = sum(r.cold for r in records)
    summary.total_service_time = math.fsum(st)
    summary.mean_service_time = summary.total_service_time / n
    summary.total_service_carbon = math.fsum(r.service_carbon for r in records)
    summary.total_keepalive_carbon = math.fsum(r.keepalive_carbon for r in records)
    summary.total_carbon = math.fsum([r.service_carbon for r in records] + [r.keepalive_carbon for r in records])
    summary.mean_carbon = summary.total_carbon / n
    summary.total_objective = math.fsum(r.objective for r in records)
    summary.keepalive_minutes = math.fsum(r.keepalive_seconds for r in records) / 60.0
    st_sorted, c_sorted = sorted(st), sorted(carbon)
    for name, vals, out in (("service_time", st_sorted, summary.service_time_percentiles),
                            ("carbon", c_sorted, summary.carbon_percentiles)):
        for q in (50, 95, 99):
            out[f"p{q}"] = nearest_rank(vals, q)
    summary.cdf = [[q, nearest_rank(st_sorted, q), nearest_rank(c_sorted, q)]
                   for q in range(1, CDF_POINTS + 1)]
    return summary


def accounting_normalizers(profiles: Mapping[str, FunctionProfile], hardware: Mapping[str, HardwareProfile],
                           ci: CarbonIntensitySeries, config: SimConfig) -> dict[str, Normalizers]:
    """Policy-independent per-function denominators used to score whole runs.

    Evaluated over both generations at the series mean CI so that every
    policy's combined objective is measured with the same yardstick.
    """
    space = SearchSpace(tuple(g for g in GENERATIONS if g in hardware), config.kat)
    ref_ci = ci.mean()
    return {fid: normalizers(f, hardware, space, ref_ci) for fid, f in profiles.items()}


def record_objective(rec: MetricsRecord, norms: Normalizers, config: SimConfig) -> float:
    return (config.lambda_s * rec.service_time / norms.s_max
            + config.lambda_c * rec.service_carbon / norms.sc_max
            + config.lambda_c * rec.keepalive_carbon / norms.kc_max)


class _Window:
    """Open keep-alive residency of one function, possibly split by a transfer."""

    __slots__ = ("record", "gen", "start", "expiry", "parts", "seconds")

    def __init__(self, record: int, gen: str, start: int, expiry: int):
        self.record, self.gen, self.start, self.expiry = record, gen, start, expiry
        self.parts: list[float] = []
        self.seconds = 0.0


def _validate(trace: InvocationTrace, policy: Policy, profiles: Mapping[str, FunctionProfile],
              hardware: Mapping[str, HardwareProfile]) -> None:
    missing = sorted({inv.function_id for inv in trace} - set(profiles))
    if missing:
        raise ConfigError(f"trace functions without a profile: {missing[:5]}{'...' if len(missing) > 5 else ''}")
    for g in policy.locations:
        if g not in hardware:
            raise ConfigError(f"policy {policy.kind} needs hardware {g!r}")
    for fid in {inv.function_id for inv in trace}:
        for g in hardware:
            profiles[fid].on(g)
            if profiles[fid].mem > hardware[g].m_dram:
                raise ConfigError(f"function {fid} does not fit in {g} DRAM")


def run(trace: InvocationTrace, policy: Policy, profiles: Mapping[str, FunctionProfile],
        hardware: Mapping[str, HardwareProfile], ci: CarbonIntensitySeries,
        config: SimConfig | None = None, check_invariants: bool = False) -> RunResult:
    """Replay ``trace`` under ``policy``.

    Keep-alive carbon is charged for the time a function actually stays
    resident: until its next invocation, its expiry or its eviction,
    whichever comes first; windows still open at the end run to expiry.
    """
    config = config or SimConfig()
    _validate(trace, policy, profiles, hardware)
    order = event_order(trace)
    ctx = SimContext(trace, profiles, hardware, ci, config, order)
    policy.bind(ctx)

    gens = [g for g in GENERATIONS if g in hardware] + [g for g in hardware if g not in GENERATIONS]
    pools = {g: WarmPool(g, math.inf if policy.contention_free else config.capacity(g)) for g in gens}
    windows: dict[str, _Window] = {}
    records: list[MetricsRecord] = []
    overhead: list[float] = []
    evictions = transfers = 0

    def accrue(fid: str, w: _Window, until: int) -> None:
        end = max(min(until, w.expiry), w.start)
        if end > w.start:
            f = profiles[fid]
            w.parts.append(keepalive_carbon(f, hardware[w.gen], (end - w.start) / 1000.0,
                                            ci.integrate(w.start, end)).total)
            w.seconds += (end - w.start) / 1000.0
        w.start = end

    def close(fid: str, until: int) -> None:
        w = windows.pop(fid, None)
        if w is None:
            return
        accrue(fid, w, until)
        rec = records[w.record]
        rec.keepalive_carbon = math.fsum(w.parts)
        rec.keepalive_seconds = w.seconds

    for idx in order:
        inv = trace[idx]
        fid, now = inv.function_id, inv.timestamp_ms
        f = profiles[fid]
        warm = {g: pools[g].lookup(fid, now) for g in gens}

        t0 = time.perf_counter()
        loc, decision = policy.on_invocation(fid, idx, now, warm)
        overhead.append(time.perf_counter() - t0)
        if loc not in policy.locations or decision.keep_location not in policy.locations:
            raise ConfigError(f"policy {policy.kind} chose a generation outside {policy.locations}")

        cold = not warm.get(loc, False)
        close(fid, now)
        for g in gens:
            pools[g].remove(fid)
        perf = f.on(loc)
        records.append(MetricsRecord(
            function_id=fid, time_ms=now, exec_location=loc, cold=cold,
            service_time=perf.service(cold),
            service_carbon=service_carbon(f, hardware[loc], cold, ci.at(now)).total,
            keepalive_carbon=0.0, keepalive_seconds=0.0,
            keep_location=decision.keep_location, keep_duration=float(decision.keep_duration)))

        if decision.keep_duration > 0:
            gen = decision.keep_location
            entry = PoolEntry(fid, f.mem, now + round(decision.keep_duration * 1000), now, gen)
            windows[fid] = _Window(len(records) - 1, gen, now, entry.expiry)
            pools[gen].purge_expired(now)
            if not pools[gen].insert(entry):
                if policy.uses_adjust and config.pool_adjust:
                    other = None
                    if policy.allows_transfer:
                        other = next((g for g in gens if g != gen and g in policy.locations), None)
                    res = adjust(pools[gen], pools[other] if other else None, [entry], now,
                                 lambda e, g: policy.priority(e.function_id, g, now))
                    pools[gen] = res.target
                    if other:
                        pools[other] = res.other
                    for moved in res.transferred:
                        w = windows[moved.function_id]
                        accrue(moved.function_id, w, now)
                        w.gen = moved.home
                    transfers += len(res.transferred)
                    for ev in res.evicted:
                        close(ev.entry.function_id, now)
                    evictions += len(res.evicted)
                else:
                    close(fid, now)
                    evictions += 1

        if check_invariants:
            _check(pools, windows)

    for fid in sorted(windows, key=lambda k: (windows[k].expiry, k)):
        close(fid, windows[fid].expiry)

    norms = accounting_normalizers({fid: profiles[fid] for fid in {r.function_id for r in records}},
                                   hardware, ci, config)
    for rec in records:
        rec.objective = record_objective(rec, norms[rec.function_id], config)
    summary = summarize(records, policy.kind, evictions, transfers, policy.contention_free,
                        OverheadStats.from_seconds(overhead))
    log.info("%s: %d invocations, %d cold, carbon %.6g g, service %.6g s",
             policy.kind, summary.invocations, summary.cold_starts, summary.total_carbon,
             summary.total_service_time)
    return RunResult(records, summary)


def _check(pools: Mapping[str, WarmPool], windows: Mapping[str, _Window]) -> None:
    seen: set[str] = set()
    for pool in pools.values():
        pool.check()
        both = seen & set(pool.entries)
        if both:
            raise AssertionError(f"functions resident in two pools: {sorted(both)}")
        seen |= set(pool.entries)
    for fid in seen:
        if fid not in windows:
            raise AssertionError(f"{fid} resident without an open keep-alive window")
