"""Invocation traces, function profiles and carbon-intensity series: loading and saving."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .carbon import MINUTE_MS, CarbonIntensitySeries
from .errors import ConfigError, OrderingError, ProfileError, TraceParseError

TRACE_HEADER = ("timestamp_ms", "function_id")
CI_HEADER = ("minute", "g_co2_per_kwh")


@dataclass(frozen=True)
class HardwarePerf:
    """How one function behaves on one hardware generation."""

    exec: float
    coldstart: float
    cpu_power_exec: float
    dram_power_exec: float
    cpu_power_coldstart: float | None = None
    dram_power_coldstart: float | None = None

    def __post_init__(self):
        if not self.exec > 0:
            raise ConfigError(f"exec must be > 0, got {self.exec}")
        if self.coldstart < 0:
            raise ConfigError(f"coldstart must be >= 0, got {self.coldstart}")
        if not (self.cpu_power_exec > 0 and self.dram_power_exec > 0):
            raise ConfigError("execution powers must be > 0")
        # cold-start power defaults to execution power
        if self.cpu_power_coldstart is None:
            object.__setattr__(self, "cpu_power_coldstart", self.cpu_power_exec)
        if self.dram_power_coldstart is None:
            object.__setattr__(self, "dram_power_coldstart", self.dram_power_exec)
        if not (self.cpu_power_coldstart > 0 and self.dram_power_coldstart > 0):
            raise ConfigError("cold-start powers must be > 0")

    @property
    def cold_service(self) -> float:
        return self.service(cold=True)

    def service(self, cold: bool) -> float:
        return self.exec + (self.coldstart if cold else 0.0)


@dataclass(frozen=True)
class FunctionProfile:
    id: str
    mem: float
    hardware: Mapping[str, HardwarePerf] = field(default_factory=dict)

    def __post_init__(self):
        if not self.mem > 0:
            raise ConfigError(f"function {self.id!r}: mem must be > 0")
        object.__setattr__(self, "hardware", dict(self.hardware))

    def on(self, generation: str) -> HardwarePerf:
        try:
            return self.hardware[generation]
        except KeyError:
            raise ProfileError(f"function {self.id!r} has no profile for hardware {generation!r}") from None

    def mean_exec(self) -> float:
        return math.fsum(p.exec for p in self.hardware.values()) / len(self.hardware)

    def renamed(self, new_id: str) -> "FunctionProfile":
        return replace(self, id=new_id)

    def to_dict(self) -> dict:
        hw = {}
        for gen, p in sorted(self.hardware.items()):
            hw[gen] = {
                "exec": p.exec,
                "coldstart": p.coldstart,
                "cpu_power_exec": p.cpu_power_exec,
                "dram_power_exec": p.dram_power_exec,
                "cpu_power_coldstart": p.cpu_power_coldstart,
                "dram_power_coldstart": p.dram_power_coldstart,
            }
        return {"id": self.id, "mem": self.mem, "hardware": hw}

    @classmethod
    def from_dict(cls, data: dict) -> "FunctionProfile":
        try:
            hardware = {gen: HardwarePerf(**perf) for gen, perf in data["hardware"].items()}
            return cls(id=str(data["id"]), mem=float(data["mem"]), hardware=hardware)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"bad function profile {data.get('id', '?')!r}: {exc}") from None


@dataclass(frozen=True)
class Invocation:
    timestamp_ms: int
    function_id: str


class InvocationTrace(Sequence[Invocation]):
    """Time-ordered invocations. Timestamps are milliseconds since trace start."""

    def __init__(self, invocations: Iterable[Invocation] = ()):
        self._rows = tuple(invocations)
        for i in range(1, len(self._rows)):
            if self._rows[i].timestamp_ms < self._rows[i - 1].timestamp_ms:
                raise OrderingError(
                    f"timestamp {self._rows[i].timestamp_ms} precedes {self._rows[i - 1].timestamp_ms}",
                    line=i + 2)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, str]]) -> "InvocationTrace":
        return cls(Invocation(int(t), str(f)) for t, f in pairs)

    def __getitem__(self, i):
        return self._rows[i]

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[Invocation]:
        return iter(self._rows)

    def __eq__(self, other) -> bool:
        return isinstance(other, InvocationTrace) and self._rows == other._rows

    def function_ids(self) -> list[str]:
        return sorted({inv.function_id for inv in self._rows})

    def duration_ms(self) -> int:
        return self._rows[-1].timestamp_ms - self._rows[0].timestamp_ms if self._rows else 0


@dataclass(frozen=True)
class TraceFunctionStats:
    """What a production trace tells us about one function."""

    function_id: str
    memory: float
    mean_exec: float

    def __post_init__(self):
        if not (self.memory > 0 and self.mean_exec > 0):
            raise ConfigError(f"trace stats for {self.function_id!r} must be positive")


def _open_csv(path: str | Path, header: tuple[str, ...]):
    fh = open(path, encoding="utf-8", newline="")
    reader = csv.reader(fh)
    first = next(reader, None)
    if first is None:
        return fh, reader
    if tuple(c.strip() for c in first) != header:
        fh.close()
        raise TraceParseError(f"expected header {','.join(header)!r}, got {','.join(first)!r}", line=1)
    return fh, reader


def load_trace(path: str | Path) -> InvocationTrace:
    """Read a ``timestamp_ms,function_id`` CSV. An empty file is an empty trace."""
    fh, reader = _open_csv(path, TRACE_HEADER)
    rows = []
    with fh:
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise TraceParseError(f"expected 2 columns, got {len(row)}", line=lineno)
            try:
                ts = int(row[0])
            except ValueError:
                raise TraceParseError(f"bad timestamp {row[0]!r}", line=lineno) from None
            if ts < 0:
                raise TraceParseError(f"negative timestamp {ts}", line=lineno)
            fid = row[1].strip()
            if not fid:
                raise TraceParseError("empty function_id", line=lineno)
            if prev is not None and ts < prev:
                raise OrderingError(f"timestamp {ts} precedes {prev}", line=lineno)
            prev = ts
            rows.append(Invocation(ts, fid))
    return InvocationTrace(rows)


def save_trace(trace: InvocationTrace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for inv in trace:
            writer.writerow((inv.timestamp_ms, inv.function_id))


def load_ci(path: str | Path) -> CarbonIntensitySeries:
    """Read a ``minute,g_co2_per_kwh`` CSV with contiguous minute indices."""
    fh, reader = _open_csv(path, CI_HEADER)
    minutes, values = [], []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise TraceParseError(f"expected 2 columns, got {len(row)}", line=lineno)
            try:
                minute, value = int(row[0]), float(row[1])
            except ValueError:
                raise TraceParseError(f"bad row {row!r}", line=lineno) from None
            if not math.isfinite(value) or value < 0:
                raise TraceParseError(f"carbon intensity must be finite and >= 0, got {value}", line=lineno)
            if minutes and minute != minutes[-1] + 1:
                raise TraceParseError(f"minute {minute} does not follow {minutes[-1]}", line=lineno)
            minutes.append(minute)
            values.append(value)
    if not values:
        raise TraceParseError(f"{path}: carbon intensity file has no samples")
    return CarbonIntensitySeries(tuple(values), start_epoch=minutes[0] * MINUTE_MS, step=MINUTE_MS)


def save_ci(series: CarbonIntensitySeries, path: str | Path) -> None:
    if series.step != MINUTE_MS or series.start_epoch % MINUTE_MS:
        raise ConfigError("only minute-aligned series can be written as CSV")
    first = series.start_epoch // MINUTE_MS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CI_HEADER)
        for i, v in enumerate(series.values):
            writer.writerow((first + i, repr(v)))


def load_profiles(path: str | Path) -> dict[str, FunctionProfile]:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"{path}: {exc.msg}", line=exc.lineno) from None
    if not isinstance(data, list):
        raise ConfigError(f"{path}: profile catalog must be a JSON array")
    catalog: dict[str, FunctionProfile] = {}
    for item in data:
        prof = FunctionProfile.from_dict(item)
        if prof.id in catalog:
            raise ConfigError(f"{path}: duplicate profile id {prof.id!r}")
        catalog[prof.id] = prof
    return catalog


def save_profiles(profiles: Iterable[FunctionProfile], path: str | Path) -> None:
    items = [p.to_dict() for p in sorted(profiles, key=lambda p: p.id)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(items, fh, indent=2)
        fh.write("\n")


def match_profile(stats: TraceFunctionStats, catalog: Mapping[str, FunctionProfile] | Sequence[FunctionProfile]) -> FunctionProfile:
    """Closest catalog profile in (memory, execution time) space.

    Each axis is divided by the catalog maximum on that axis; the catalog
    execution time of a profile is its mean over hardware generations.
    Equidistant candidates resolve to the smaller profile id.
    """
    profiles = list(catalog.values()) if isinstance(catalog, Mapping) else list(catalog)
    if not profiles:
        raise ConfigError("cannot match against an empty profile catalog")
    mem_scale = max(p.mem for p in profiles)
    exec_scale = max(p.mean_exec() for p in profiles)

    def key(p: FunctionProfile):
        dm = (stats.memory - p.mem) / mem_scale
        de = (stats.mean_exec - p.mean_exec()) / exec_scale
        return (dm * dm + de * de, p.id)

    return min(profiles, key=key)


def resolve_profiles(trace: InvocationTrace, catalog: Mapping[str, FunctionProfile],
                     stats: Mapping[str, TraceFunctionStats] | None = None) -> dict[str, FunctionProfile]:
    """Give every trace function a profile: by id if the catalog has it, else by nearest match."""
    resolved = {}
    for fid in trace.function_ids():
        if fid in catalog:
            resolved[fid] = catalog[fid]
        elif stats and fid in stats:
            resolved[fid] = match_profile(stats[fid], catalog).renamed(fid)
        else:
            raise ConfigError(f"trace function {fid!r} has neither a profile nor trace statistics")
    return resolved


def convert_azure_invocations(path: str | Path, minutes: int = 1440) -> InvocationTrace:
    """Turn an Azure Functions ``invocations_per_function_md`` day file into a trace.

    The Azure file has per-minute invocation counts in columns ``1..1440``;
    the ``k`` invocations of a minute are spread evenly inside it. Function
    ids become ``HashOwner/HashApp/HashFunction`` truncated to 16 characters
    per component.
    """
    events: list[tuple[int, str]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for lineno, row in enumerate(reader, start=2):
            try:
                fid = "/".join(row[k][:16] for k in ("HashOwner", "HashApp", "HashFunction"))
            except KeyError as exc:
                raise TraceParseError(f"missing Azure column {exc}", line=lineno) from None
            for m in range(1, minutes + 1):
                count = int(row.get(str(m)) or 0)
                for j in range(count):
                    events.append(((m - 1) * MINUTE_MS + (j * MINUTE_MS) // count, fid))
    events.sort()
    return InvocationTrace.from_pairs(events)
