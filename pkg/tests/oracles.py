"""Independent reference implementations used as test oracles.

Nothing here imports the package's carbon, scheduling or pool logic; every
quantity is re-derived from plain dictionaries with loops and sorting.
"""

from __future__ import annotations

import math
from fractions import Fraction

KWH = 3.6e6


def ci_at(values, t_ms, step_ms=60_000, start_ms=0):
    i = (t_ms - start_ms) // step_ms
    return values[min(max(int(i), 0), len(values) - 1)]


def brute_embodied_dram(hw, mem, seconds):
    return math.fsum(hw["ec_dram"] / hw["lt_dram"] * mem / hw["m_dram"] for _ in range(seconds))


def brute_embodied_cpu(hw, service_s, keep_s):
    return math.fsum([hw["ec_cpu"] / hw["lt_cpu"]] * service_s
                     + [hw["ec_cpu"] / hw["lt_cpu"] / hw["core_num"]] * keep_s)


def brute_operational_cpu(hw, p_service, n_service, p_keep, n_keep, ci):
    """Energies given as power x whole seconds, summed second by second."""
    return math.fsum([p_service / KWH * ci] * n_service + [p_keep / KWH / hw["core_num"] * ci] * n_keep)


def brute_operational_dram(hw, mem, p_service, n_service, p_keep, n_keep, ci):
    share = mem / hw["m_dram"]
    return math.fsum([share * p_service / KWH * ci] * n_service + [share * p_keep / KWH * ci] * n_keep)


def brute_keepalive(hw, mem, t0_ms, seconds, ci_values, step_ms=60_000):
    """Keep-alive carbon summed one second at a time (``t0_ms`` whole seconds)."""
    share = mem / hw["m_dram"]
    parts = []
    for s in range(seconds):
        ci = ci_at(ci_values, t0_ms + s * 1000, step_ms)
        parts.append(hw["ec_cpu"] / hw["lt_cpu"] / hw["core_num"])
        parts.append(hw["ec_dram"] / hw["lt_dram"] * share)
        parts.append(hw["keepalive_cpu_power"] / KWH / hw["core_num"] * ci)
        parts.append(share * hw["keepalive_dram_power"] / KWH * ci)
    return math.fsum(parts)


def service(perf, cold):
    return perf["exec"] + (perf["coldstart"] if cold else 0.0)


def service_carbon(hw, mem, perf, cold, ci):
    """Closed form written out term by term."""
    dur = service(perf, cold)
    share = mem / hw["m_dram"]
    e_cpu = perf["cpu_power_exec"] * perf["exec"] / KWH
    e_dram = perf["dram_power_exec"] * perf["exec"] / KWH
    if cold:
        e_cpu += perf.get("cpu_power_coldstart", perf["cpu_power_exec"]) * perf["coldstart"] / KWH
        e_dram += perf.get("dram_power_coldstart", perf["dram_power_exec"]) * perf["coldstart"] / KWH
    return (dur * hw["ec_cpu"] / hw["lt_cpu"]
            + dur * share * hw["ec_dram"] / hw["lt_dram"]
            + e_cpu * ci
            + share * e_dram * ci)


def keepalive_const(hw, mem, seconds, ci):
    share = mem / hw["m_dram"]
    return seconds * (hw["ec_cpu"] / hw["lt_cpu"] / hw["core_num"]
                      + share * hw["ec_dram"] / hw["lt_dram"]
                      + hw["keepalive_cpu_power"] / KWH / hw["core_num"] * ci
                      + share * hw["keepalive_dram_power"] / KWH * ci)


def reference_greedy(candidates, capacity, score):
    """Rank by (-score, admitted_at, id); admit whatever still fits."""
    kept, rejected, used = [], [], 0.0
    for c in sorted(candidates, key=lambda c: (-score[c["id"]], c["admitted_at"], c["id"])):
        if used + c["mem"] <= capacity:
            kept.append(c["id"])
            used += c["mem"]
        else:
            rejected.append(c["id"])
    return kept, rejected


def percentile_by_sort(values, q):
    """Nearest-rank percentile: the ceil(q/100 * n)-th smallest value."""
    ordered = sorted(values)
    rank = math.ceil(Fraction(q, 100) * len(ordered))
    return ordered[max(rank, 1) - 1]
