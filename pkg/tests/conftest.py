import dataclasses

import pytest

from ecolife.carbon import HardwareProfile
from ecolife.scenarios import PAIR_A
from ecolife.workload import FunctionProfile, HardwarePerf

ACCEPTANCE_LINES: list[str] = []


def hw_dict(hw: HardwareProfile) -> dict:
    return dataclasses.asdict(hw)


def perf_dict(perf: HardwarePerf) -> dict:
    return dataclasses.asdict(perf)


@pytest.fixture
def pair():
    return dict(PAIR_A)


@pytest.fixture
def sample_fn():
    """Pair-A sample function: 512 MiB, 2 s execution and 3 s cold start on both generations."""
    return FunctionProfile("sample", 512.0, {
        "old": HardwarePerf(exec=2.0, coldstart=3.0, cpu_power_exec=150.0, dram_power_exec=40.0),
        "new": HardwarePerf(exec=2.0, coldstart=3.0, cpu_power_exec=130.0, dram_power_exec=20.0),
    })


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
