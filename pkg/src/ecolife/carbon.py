"""Embodied and operational carbon of serverless functions on one hardware generation.

Units used throughout: grams CO2, seconds, watts, MiB, kWh and gCO2/kWh.
Energies are derived from profile power x duration (kWh = W*s / 3.6e6).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

from .errors import CapacityError, ConfigError, DomainError

if TYPE_CHECKING:
    from .workload import FunctionProfile

JOULES_PER_KWH = 3.6e6
FOUR_YEARS_S = 4 * 365 * 24 * 3600  # 126 144 000 s
MINUTE_MS = 60_000


@dataclass(frozen=True)
class HardwareProfile:
    """Carbon-relevant description of one server generation."""

    id: str
    ec_cpu: float
    ec_dram: float
    core_num: int
    m_dram: float
    keepalive_cpu_power: float
    keepalive_dram_power: float
    lt_cpu: float = FOUR_YEARS_S
    lt_dram: float = FOUR_YEARS_S
    extra_embodied: float = 0.0
    extra_lifetime: float | None = None

    def __post_init__(self):
        positive = ("ec_cpu", "ec_dram", "lt_cpu", "lt_dram", "m_dram",
                    "keepalive_cpu_power", "keepalive_dram_power")
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError(f"hardware {self.id!r}: {name} must be > 0, got {value!r}")
        if int(self.core_num) != self.core_num or self.core_num < 1:
            raise ConfigError(f"hardware {self.id!r}: core_num must be an integer >= 1")
        if self.extra_embodied < 0:
            raise ConfigError(f"hardware {self.id!r}: extra_embodied must be >= 0")
        if self.extra_lifetime is None:
            object.__setattr__(self, "extra_lifetime", self.lt_cpu)
        elif self.extra_lifetime <= 0:
            raise ConfigError(f"hardware {self.id!r}: extra_lifetime must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "HardwareProfile":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown hardware profile fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad hardware profile: {exc}") from None


def load_hardware(path: str | Path) -> HardwareProfile:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return HardwareProfile.from_dict(data)


def save_hardware(hw: HardwareProfile, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(hw.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass(frozen=True)
class CarbonIntensitySeries:
    """Piecewise-constant grid carbon intensity (gCO2/kWh).

    Sample ``i`` covers ``[start_epoch + i*step, start_epoch + (i+1)*step)`` ms.
    Lookups before the first sample use the first value and lookups past the
    last sample use the last value.
    """

    values: tuple[float, ...]
    start_epoch: int = 0
    step: int = MINUTE_MS

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ConfigError("carbon intensity series is empty")
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise ConfigError("carbon intensity values must be finite and >= 0")
        if self.step <= 0:
            raise ConfigError("carbon intensity step must be > 0")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def _index(self, t_ms: float) -> int:
        i = math.floor((t_ms - self.start_epoch) / self.step)
        return min(max(i, 0), len(self.values) - 1)

    def at(self, t_ms: float) -> float:
        return self.values[self._index(t_ms)]

    def integrate(self, t0_ms: float, t1_ms: float) -> float:
        """Integral of CI over ``[t0, t1]`` in gCO2*s/kWh."""
        if t1_ms < t0_ms:
            raise DomainError("integration window ends before it starts")
        if t1_ms == t0_ms:
            return 0.0
        n = len(self.values)
        total = 0.0
        t = t0_ms
        i = self._index(t0_ms)
        while t < t1_ms:
            # the first/last buckets extend to -inf/+inf
            if i == n - 1:
                edge = t1_ms
            else:
                edge = min(t1_ms, self.start_epoch + (i + 1) * self.step)
            if edge > t:
                total += self.values[i] * (edge - t) / 1000.0
                t = edge
            i += 1
        return total

    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)


@dataclass(frozen=True)
class CarbonBreakdown:
    embodied_cpu: float = 0.0
    embodied_dram: float = 0.0
    op_cpu: float = 0.0
    op_dram: float = 0.0
    # storage/motherboard/PSU share; zero unless the profile sets extra_embodied
    embodied_other: float = 0.0
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", math.fsum(
            (self.embodied_cpu, self.embodied_dram, self.op_cpu, self.op_dram, self.embodied_other)))

    @property
    def embodied(self) -> float:
        return self.embodied_cpu + self.embodied_dram + self.embodied_other

    @property
    def operational(self) -> float:
        return self.op_cpu + self.op_dram

    def __add__(self, other: "CarbonBreakdown") -> "CarbonBreakdown":
        return CarbonBreakdown(
            self.embodied_cpu + other.embodied_cpu,
            self.embodied_dram + other.embodied_dram,
            self.op_cpu + other.op_cpu,
            self.op_dram + other.op_dram,
            self.embodied_other + other.embodied_other,
        )


ZERO = CarbonBreakdown()


def _nonneg(**values: float) -> None:
    for name, v in values.items():
        if v < 0 or math.isnan(v):
            raise DomainError(f"{name} must be >= 0, got {v}")


def _mem_share(hw: HardwareProfile, mem_f: float) -> float:
    if mem_f <= 0:
        raise DomainError(f"function memory must be > 0, got {mem_f}")
    if mem_f > hw.m_dram:
        raise CapacityError(f"function memory {mem_f} MiB exceeds {hw.id} DRAM of {hw.m_dram} MiB")
    return mem_f / hw.m_dram


def kwh(watts: float, seconds: float) -> float:
    return watts * seconds / JOULES_PER_KWH


def embodied_dram(hw: HardwareProfile, mem_f: float, duration: float) -> float:
    """DRAM embodied share for ``duration`` seconds (service + keep-alive)."""
    _nonneg(duration=duration)
    return duration / hw.lt_dram * _mem_share(hw, mem_f) * hw.ec_dram


def embodied_cpu(hw: HardwareProfile, service: float, keepalive: float) -> float:
    """Whole CPU is attributed during service, one core during keep-alive."""
    _nonneg(service=service, keepalive=keepalive)
    return service / hw.lt_cpu * hw.ec_cpu + keepalive / hw.lt_cpu * (hw.ec_cpu / hw.core_num)


def operational_dram(hw: HardwareProfile, mem_f: float, e_service: float,
                     e_keepalive: float, ci: float) -> float:
    _nonneg(e_service=e_service, e_keepalive=e_keepalive, ci=ci)
    return _mem_share(hw, mem_f) * (e_service + e_keepalive) * ci


def operational_cpu(hw: HardwareProfile, e_service: float, e_keepalive: float, ci: float) -> float:
    _nonneg(e_service=e_service, e_keepalive=e_keepalive, ci=ci)
    return (e_service + e_keepalive / hw.core_num) * ci


def service_carbon(f: "FunctionProfile", hw: HardwareProfile, cold: bool, ci: float) -> CarbonBreakdown:
    """Carbon of one execution of ``f`` on ``hw``, including cold-start overhead if ``cold``.

    ``ci`` is the intensity at invocation start; executions are short compared
    with the one-minute CI resolution.
    """
    perf = f.on(hw.id)
    service = perf.exec + (perf.coldstart if cold else 0.0)
    e_cpu = kwh(perf.cpu_power_exec, perf.exec)
    e_dram = kwh(perf.dram_power_exec, perf.exec)
    if cold:
        e_cpu += kwh(perf.cpu_power_coldstart, perf.coldstart)
        e_dram += kwh(perf.dram_power_coldstart, perf.coldstart)
    return CarbonBreakdown(
        embodied_cpu=embodied_cpu(hw, service, 0.0),
        embodied_dram=embodied_dram(hw, f.mem, service),
        op_cpu=operational_cpu(hw, e_cpu, 0.0, ci),
        op_dram=operational_dram(hw, f.mem, e_dram, 0.0, ci),
        embodied_other=service / hw.extra_lifetime * hw.extra_embodied,
    )


def keepalive_carbon(f: "FunctionProfile", hw: HardwareProfile, duration: float,
                     ci_integral: float) -> CarbonBreakdown:
    """Carbon of keeping ``f`` resident on ``hw`` for ``duration`` seconds.

    ``ci_integral`` is the integral of CI over the window (gCO2*s/kWh), so a
    window spanning several CI buckets is priced bucket by bucket.
    """
    _nonneg(duration=duration, ci_integral=ci_integral)
    if duration == 0:
        return ZERO
    mean_ci = ci_integral / duration
    e_cpu = kwh(hw.keepalive_cpu_power, duration)
    e_dram = kwh(hw.keepalive_dram_power, duration)
    return CarbonBreakdown(
        embodied_cpu=embodied_cpu(hw, 0.0, duration),
        embodied_dram=embodied_dram(hw, f.mem, duration),
        op_cpu=operational_cpu(hw, 0.0, e_cpu, mean_ci),
        op_dram=operational_dram(hw, f.mem, 0.0, e_dram, mean_ci),
    )


def keepalive_rate(f: "FunctionProfile", hw: HardwareProfile, ci: float) -> float:
    """Grams per second of keep-alive at constant intensity ``ci``."""
    return keepalive_carbon(f, hw, 1.0, ci).total


def service_energy(f: "FunctionProfile", hw: HardwareProfile, cold: bool) -> float:
    """kWh attributed to one execution (CPU + memory share of DRAM)."""
    return service_carbon(f, hw, cold, 1.0).operational


def keepalive_energy(f: "FunctionProfile", hw: HardwareProfile, duration: float) -> float:
    """kWh attributed to ``duration`` seconds of keep-alive (one core + memory share)."""
    return keepalive_carbon(f, hw, duration, duration).operational


def total_carbon(parts: Sequence[CarbonBreakdown]) -> float:
    return math.fsum(p.total for p in parts)
