"""Per-generation warm pools with priority eviction and cross-generation transfer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from .carbon import HardwareProfile, service_carbon
from .errors import ConfigError, DomainError
from .workload import FunctionProfile


@dataclass(frozen=True)
class PoolEntry:
    function_id: str
    mem: float
    expiry: int
    admitted_at: int
    home: str

    def __post_init__(self):
        if self.expiry < self.admitted_at:
            raise DomainError(f"{self.function_id}: expiry precedes admission")
        if not self.mem > 0:
            raise DomainError(f"{self.function_id}: mem must be > 0")


@dataclass
class WarmPool:
    generation: str
    capacity: float
    entries: dict[str, PoolEntry] = field(default_factory=dict)

    def __post_init__(self):
        if not self.capacity > 0:
            raise ConfigError(f"pool {self.generation}: capacity must be > 0")

    def copy(self) -> "WarmPool":
        return WarmPool(self.generation, self.capacity, dict(self.entries))

    def used(self) -> float:
        return math.fsum(e.mem for e in self.entries.values())

    def free(self) -> float:
        return self.capacity - self.used()

    def __contains__(self, function_id: str) -> bool:
        return function_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, function_id: str, now: int) -> bool:
        """Warm iff resident and ``expiry >= now``; an expired entry is dropped."""
        entry = self.entries.get(function_id)
        if entry is None:
            return False
        if entry.expiry >= now:
            return True
        del self.entries[function_id]
        return False

    def purge_expired(self, now: int) -> list[PoolEntry]:
        gone = [e for e in self.entries.values() if e.expiry < now]
        for e in gone:
            del self.entries[e.function_id]
        return gone

    def insert(self, entry: PoolEntry) -> bool:
        """Insert if it fits; ``False`` tells the caller to run :func:`adjust`."""
        if entry.function_id in self.entries:
            raise ConfigError(f"{entry.function_id} already resident in pool {self.generation}")
        if entry.mem > self.free():
            return False
        self.entries[entry.function_id] = replace(entry, home=self.generation)
        return True

    def remove(self, function_id: str) -> PoolEntry | None:
        return self.entries.pop(function_id, None)

    def check(self) -> None:
        if self.used() > self.capacity:
            raise AssertionError(f"pool {self.generation} over capacity: {self.used()} > {self.capacity}")


@dataclass(frozen=True)
class PriorityScore:
    function_id: str
    score: float
    mem: float


def priority(f: FunctionProfile, hw: HardwareProfile, ci: float, lambda_s: float,
             lambda_c: float, normalizers) -> PriorityScore:
    """Value of keeping ``f`` warm on ``hw``: the normalised service time and
    service carbon a warm start saves over a cold start there.

    ``normalizers`` needs ``s_max`` and ``sc_max`` attributes.
    """
    perf = f.on(hw.id)
    saved_s = perf.coldstart
    saved_c = service_carbon(f, hw, True, ci).total - service_carbon(f, hw, False, ci).total
    score = lambda_s * saved_s / normalizers.s_max + lambda_c * max(saved_c, 0.0) / normalizers.sc_max
    return PriorityScore(f.id, score, f.mem)


@dataclass(frozen=True)
class Eviction:
    entry: PoolEntry
    reason: str  # "capacity" or "unplaceable"


@dataclass
class AdjustResult:
    target: WarmPool
    other: WarmPool | None
    evicted: list[Eviction]
    transferred: list[PoolEntry]


PriorityFn = Callable[[PoolEntry, str], float]


def _greedy(candidates: Iterable[PoolEntry], budget: float, score: dict[str, float]):
    """Admit in descending priority (earlier admission, then smaller id, on ties)
    while the budget allows; returns (kept, rejected) in that visiting order."""
    order = sorted(candidates, key=lambda e: (-score[e.function_id], e.admitted_at, e.function_id))
    kept, rejected = [], []
    for e in order:
        if e.mem <= budget:
            kept.append(e)
            budget -= e.mem
        else:
            rejected.append(e)
    return kept, rejected


def adjust(target: WarmPool, other: WarmPool | None, incoming: Sequence[PoolEntry], now: int,
           priority_of: PriorityFn) -> AdjustResult:
    """Priority re-packing of ``target`` after an insertion failed.

    Residents of ``target`` and the ``incoming`` entries compete for its
    capacity, highest priority first. Losers are offered to the free space of
    ``other`` (if given), re-ranked by their priority on that generation;
    residents of ``other`` are never displaced. Transferred entries keep their
    expiry. Whatever is left is evicted. Inputs are not modified.
    """
    a = target.copy()
    a.purge_expired(now)
    b = other.copy() if other is not None else None
    if b is not None:
        b.purge_expired(now)
    for e in incoming:
        if e.function_id in a.entries or (b is not None and e.function_id in b.entries):
            raise ConfigError(f"{e.function_id} is already resident")

    candidates = list(a.entries.values()) + list(incoming)
    score_a = {e.function_id: priority_of(e, a.generation) for e in candidates}
    kept, rejected = _greedy(candidates, a.capacity, score_a)
    a.entries = {e.function_id: replace(e, home=a.generation) for e in kept}

    evicted: list[Eviction] = []
    transferred: list[PoolEntry] = []
    if b is not None and rejected:
        score_b = {e.function_id: priority_of(e, b.generation) for e in rejected}
        moved, rejected = _greedy(rejected, b.free(), score_b)
        for e in moved:
            e = replace(e, home=b.generation)
            b.entries[e.function_id] = e
            transferred.append(e)
    biggest = max(a.capacity, b.capacity if b is not None else 0.0)
    for e in rejected:
        evicted.append(Eviction(e, "unplaceable" if e.mem > biggest else "capacity"))
    return AdjustResult(a, b, evicted, transferred)
