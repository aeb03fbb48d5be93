"""Seeded synthetic scenarios standing in for production traces.

The hardware pair loosely follows an older 36-core / 512 GiB server next to a
newer 24-core / 192 GiB one: the newer part executes faster and with less
energy but carries more embodied carbon per core and per GiB. The function
catalog is a set of SeBS-like serverless workloads. All figures are
illustrative inputs, not measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .carbon import MINUTE_MS, CarbonIntensitySeries, HardwareProfile, save_hardware
from .errors import ConfigError
from .workload import (
    FunctionProfile, HardwarePerf, InvocationTrace, TraceFunctionStats, match_profile,
    save_ci, save_profiles, save_trace,
)

SCENARIOS = ("poisson-small", "ci-step", "memory-pressure")

PAIR_A = {
    "old": HardwareProfile(
        id="old", ec_cpu=16_000.0, ec_dram=24_000.0, core_num=36, m_dram=512 * 1024.0,
        keepalive_cpu_power=16.0, keepalive_dram_power=30.0),
    "new": HardwareProfile(
        id="new", ec_cpu=36_000.0, ec_dram=14_000.0, core_num=24, m_dram=192 * 1024.0,
        keepalive_cpu_power=12.0, keepalive_dram_power=14.0),
}

# name: (MiB, exec on new [s], cold start on new [s], old/new exec ratio, CPU load factor)
_CATALOG_SPEC = {
    "dynamic-html": (128, 0.12, 0.9, 1.30, 0.7),
    "uploader": (256, 0.6, 1.1, 1.15, 0.6),
    "thumbnailer": (256, 0.4, 1.2, 1.25, 0.9),
    "video-processing": (1024, 4.5, 2.6, 1.35, 1.0),
    "compression": (512, 2.2, 1.6, 1.25, 0.9),
    "image-recognition": (1536, 1.6, 3.2, 1.30, 1.0),
    "graph-bfs": (512, 0.35, 1.4, 1.10, 0.8),
    "dna-visualization": (768, 3.0, 1.9, 1.20, 0.95),
}
_EXEC_POWER = {"old": 150.0, "new": 130.0}      # whole-CPU watts at full load
_DRAM_POWER = {"old": 40.0, "new": 20.0}        # whole-DRAM watts while executing
_COLDSTART_RATIO = 1.2                          # old cold start relative to new


def sebs_catalog() -> dict[str, FunctionProfile]:
    catalog = {}
    for name, (mem, t_new, cs_new, ratio, load) in _CATALOG_SPEC.items():
        hw = {
            "new": HardwarePerf(exec=t_new, coldstart=cs_new,
                                cpu_power_exec=_EXEC_POWER["new"] * load, dram_power_exec=_DRAM_POWER["new"]),
            "old": HardwarePerf(exec=round(t_new * ratio, 6), coldstart=round(cs_new * _COLDSTART_RATIO, 6),
                                cpu_power_exec=_EXEC_POWER["old"] * load, dram_power_exec=_DRAM_POWER["old"]),
        }
        catalog[name] = FunctionProfile(name, float(mem), hw)
    return catalog


@dataclass
class Scenario:
    name: str
    seed: int
    trace: InvocationTrace
    ci: CarbonIntensitySeries
    profiles: dict[str, FunctionProfile]
    hardware: dict[str, HardwareProfile]
    mem_old: float
    mem_new: float

    def write(self, outdir: str | Path) -> dict[str, Path]:
        """Write the scenario as loadable input files; returns their paths."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = {
            "trace": outdir / "trace.csv",
            "ci": outdir / "ci.csv",
            "profiles": outdir / "profiles.json",
            "hw_old": outdir / "hw_old.json",
            "hw_new": outdir / "hw_new.json",
        }
        save_trace(self.trace, paths["trace"])
        save_ci(self.ci, paths["ci"])
        save_profiles(self.profiles.values(), paths["profiles"])
        save_hardware(self.hardware["old"], paths["hw_old"])
        save_hardware(self.hardware["new"], paths["hw_new"])
        return paths


def poisson_trace(rng: np.random.Generator, function_ids: list[str], n: int,
                  mean_gap_per_function_s: float) -> InvocationTrace:
    """Poisson arrivals, each assigned to a function uniformly at random, so
    every function sees a Poisson stream with the given mean gap."""
    overall_gap_ms = mean_gap_per_function_s * 1000.0 / len(function_ids)
    gaps = rng.exponential(overall_gap_ms, size=n)
    times = np.floor(np.cumsum(gaps)).astype(np.int64)
    times -= times[0]
    picks = rng.integers(0, len(function_ids), size=n)
    return InvocationTrace.from_pairs((int(t), function_ids[i]) for t, i in zip(times, picks))


def grid_ci(rng: np.random.Generator, minutes: int, base: float = 230.0, swing: float = 60.0,
            noise: float = 4.0) -> CarbonIntensitySeries:
    """Minute-resolution CI with a daily swing and a mean-reverting wander."""
    phase = rng.uniform(0, 2 * math.pi)
    t = np.arange(minutes)
    daily = base + swing * np.sin(2 * math.pi * t / 1440.0 + phase)
    wander = np.zeros(minutes)
    for i in range(1, minutes):
        wander[i] = 0.98 * wander[i - 1] + rng.normal(0.0, noise)
    values = np.clip(np.round(daily + wander, 3), 1.0, None)
    return CarbonIntensitySeries(tuple(float(v) for v in values))


def _ci_minutes(trace: InvocationTrace, kat_max_s: float = 600.0) -> int:
    last = trace[-1].timestamp_ms if len(trace) else 0
    return int(last // MINUTE_MS) + int(kat_max_s // 60) + 2


def generate_scenario(kind: str, seed: int = 0) -> Scenario:
    """Build one of the named scenarios deterministically from ``seed``.

    * ``poisson-small``: the 8 catalog functions, 300 invocations, 4 min mean
      gap per function, slowly varying grid CI.
    * ``ci-step``: same workload shape over 600 invocations; CI is 50 for the
      first half of the trace and 300 afterwards.
    * ``memory-pressure``: 24 functions matched onto the catalog from sampled
      (memory, execution time) statistics, 900 invocations; each pool holds
      about half of the memory needed to keep every function warm at once.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), SCENARIOS.index(kind)
                                                        if kind in SCENARIOS else 99]))
    catalog = sebs_catalog()
    hardware = dict(PAIR_A)
    if kind == "poisson-small":
        trace = poisson_trace(rng, sorted(catalog), 300, 240.0)
        ci = grid_ci(rng, _ci_minutes(trace))
        return Scenario(kind, seed, trace, ci, catalog, hardware, 15 * 1024.0, 15 * 1024.0)
    if kind == "ci-step":
        trace = poisson_trace(rng, sorted(catalog), 600, 240.0)
        minutes = _ci_minutes(trace)
        switch = (trace[-1].timestamp_ms // 2) // MINUTE_MS
        values = tuple(50.0 if m < switch else 300.0 for m in range(minutes))
        return Scenario(kind, seed, trace, CarbonIntensitySeries(values), catalog, hardware,
                        15 * 1024.0, 15 * 1024.0)
    if kind == "memory-pressure":
        n_funcs = 24
        ids = [f"fn{i:02d}" for i in range(n_funcs)]
        mems = np.exp(rng.normal(math.log(600.0), 0.6, size=n_funcs))
        execs = np.exp(rng.normal(math.log(1.2), 0.9, size=n_funcs))
        profiles = {}
        for fid, m, e in zip(ids, mems, execs):
            stats = TraceFunctionStats(fid, float(m), float(e))
            profiles[fid] = match_profile(stats, catalog).renamed(fid)
        trace = poisson_trace(rng, ids, 900, 240.0)
        ci = grid_ci(rng, _ci_minutes(trace))
        demand = math.fsum(p.mem for p in profiles.values())
        cap = float(math.ceil(demand * 0.5))
        return Scenario(kind, seed, trace, ci, profiles, hardware, cap, cap)
    raise ConfigError(f"unknown scenario {kind!r}; choose from {', '.join(SCENARIOS)}")
