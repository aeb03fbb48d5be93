"""Run configuration and the interface every scheduling policy implements."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from .errors import ConfigError

if TYPE_CHECKING:
    from .carbon import CarbonIntensitySeries, HardwareProfile
    from .workload import FunctionProfile, InvocationTrace

GENERATIONS = ("old", "new")
DEFAULT_KAT = (0.0, 60.0, 120.0, 300.0, 600.0)


@dataclass(frozen=True)
class ObjectiveWeights:
    lambda_s: float = 0.5
    lambda_c: float = 0.5

    def __post_init__(self):
        if self.lambda_s < 0 or self.lambda_c < 0 or self.lambda_s + self.lambda_c <= 0:
            raise ConfigError("objective weights must be >= 0 and not both zero")


@dataclass(frozen=True)
class Decision:
    keep_location: str
    keep_duration: float


@dataclass(frozen=True)
class SimConfig:
    lambda_s: float = 0.5
    lambda_c: float = 0.5
    kat: tuple[float, ...] = DEFAULT_KAT
    particles: int = 15
    iters: int = 10
    window: int = 10
    w_min: float = 0.5
    w_max: float = 1.0
    c_min: float = 0.3
    c_max: float = 1.0
    seed: int = 0
    mem_old: float = 15 * 1024.0
    mem_new: float = 15 * 1024.0
    perception: bool = True
    dynamic_weights: bool = True
    pool_adjust: bool = True

    def __post_init__(self):
        ObjectiveWeights(self.lambda_s, self.lambda_c)
        kat = tuple(float(k) for k in self.kat)
        if not kat or kat[0] != 0 or any(b <= a for a, b in zip(kat, kat[1:])):
            raise ConfigError(f"keep-alive grid must start at 0 and ascend strictly: {kat}")
        object.__setattr__(self, "kat", kat)
        for name in ("particles", "iters", "window"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not (0 <= self.w_min <= self.w_max and 0 <= self.c_min <= self.c_max):
            raise ConfigError("PSO coefficient ranges must satisfy 0 <= min <= max")
        if not (self.mem_old > 0 and self.mem_new > 0):
            raise ConfigError("pool capacities must be > 0")

    @property
    def weights(self) -> ObjectiveWeights:
        return ObjectiveWeights(self.lambda_s, self.lambda_c)

    def capacity(self, generation: str) -> float:
        return {"old": self.mem_old, "new": self.mem_new}[generation]


@dataclass
class SimContext:
    trace: "InvocationTrace"
    profiles: Mapping[str, "FunctionProfile"]
    hardware: Mapping[str, "HardwareProfile"]
    ci: "CarbonIntensitySeries"
    config: SimConfig
    order: list[int] = field(default_factory=list)


def event_order(trace: "InvocationTrace") -> list[int]:
    """Trace indices in processing order: by time, then function id."""
    return sorted(range(len(trace)), key=lambda i: (trace[i].timestamp_ms, trace[i].function_id, i))


class Policy:
    """A scheduler driven by the simulation loop.

    ``on_invocation`` returns where the invocation executes and how long and
    where the function is then kept alive. Pool residency is owned by the
    engine; ``priority`` ranks residents when a pool overflows.
    """

    kind = "policy"
    locations: tuple[str, ...] = GENERATIONS
    # priority re-packing on overflow, and whether losers may move generation
    uses_adjust = False
    allows_transfer = False
    # clairvoyant bounds run against unbounded pools
    contention_free = False

    def bind(self, ctx: SimContext) -> None:
        self.ctx = ctx

    def on_invocation(self, function_id: str, index: int, now: int,
                      warm: Mapping[str, bool]) -> tuple[str, Decision]:
        raise NotImplementedError

    def priority(self, function_id: str, generation: str, now: int) -> float:
        return 0.0
