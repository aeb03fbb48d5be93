"""Carbon-aware keep-alive and placement for serverless functions on mixed hardware generations."""

from .baselines import ALL_KINDS, ClairvoyantPolicy, FixedPolicy, PolicyKind, make_policy
from .carbon import CarbonBreakdown, CarbonIntensitySeries, HardwareProfile, keepalive_carbon, service_carbon
from .policy import Decision, SimConfig
from .scenarios import generate_scenario
from .scheduler import EcoLifePolicy
from .sim import MetricsRecord, RunResult, RunSummary, run
from .workload import FunctionProfile, HardwarePerf, Invocation, InvocationTrace

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS", "CarbonBreakdown", "CarbonIntensitySeries", "ClairvoyantPolicy", "Decision",
    "EcoLifePolicy", "FixedPolicy", "FunctionProfile", "HardwarePerf", "HardwareProfile",
    "Invocation", "InvocationTrace", "MetricsRecord", "PolicyKind", "RunResult", "RunSummary",
    "SimConfig", "generate_scenario", "keepalive_carbon", "make_policy", "run", "service_carbon",
]
