"""``ecolife`` command line: run one or several schedulers over a trace or a built-in scenario.

Examples::

    ecolife --scenario poisson-small --seed 0 --out out/ --compare
    ecolife --trace t.csv --ci ci.csv --profiles p.json --scheduler ecolife --out run/

Exit status is 0 on success, 2 on bad input or configuration and 1 if an
internal consistency check fails during the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .baselines import ALL_KINDS, make_policy
from .carbon import load_hardware
from .errors import ConfigError, EcoLifeError
from .policy import DEFAULT_KAT, SimConfig
from .report import emit_comparison, emit_report
from .scenarios import PAIR_A, SCENARIOS, generate_scenario
from .sim import RunResult, run
from .workload import load_ci, load_profiles, load_trace

log = logging.getLogger("ecolife")

PATH_KEYS = ("trace", "ci", "profiles", "hw_old", "hw_new")
# flag dest -> SimConfig field
SIM_KEYS = {
    "lambda_s": "lambda_s", "lambda_c": "lambda_c", "kat": "kat", "mem_old": "mem_old",
    "mem_new": "mem_new", "particles": "particles", "iters": "iters", "window": "window",
    "seed": "seed",
}
FLAG_KEYS = {"no_perception": "perception", "no_dynamic_weights": "dynamic_weights",
             "no_adjust": "pool_adjust"}
FILE_KEYS = set(PATH_KEYS) | set(SIM_KEYS) | set(FLAG_KEYS) | {
    "scheduler", "compare", "scenario", "out", "check_invariants"}


@dataclass(frozen=True)
class RunConfig:
    trace: Path | None
    ci: Path | None
    profiles: Path | None
    hw_old: Path | None
    hw_new: Path | None
    scenario: str | None
    schedulers: tuple[str, ...]
    compare: bool
    sim: SimConfig
    out: Path
    check_invariants: bool = True
    # capacities given explicitly (flag or file) win over scenario defaults
    explicit_capacity: tuple[bool, bool] = (False, False)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _kat(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad keep-alive grid {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ecolife", description="Carbon-aware keep-alive and placement simulator.")
    src = p.add_argument_group("inputs")
    src.add_argument("--trace", type=Path, help="invocation CSV (timestamp_ms,function_id)")
    src.add_argument("--ci", type=Path, help="carbon intensity CSV (minute,g_co2_per_kwh)")
    src.add_argument("--profiles", type=Path, help="function profile JSON array")
    src.add_argument("--hw-old", type=Path, help="old-generation hardware JSON (default: built-in)")
    src.add_argument("--hw-new", type=Path, help="new-generation hardware JSON (default: built-in)")
    src.add_argument("--scenario", choices=SCENARIOS, help="generate a synthetic scenario instead of reading files")
    src.add_argument("--config", type=Path, help="JSON file with default values for any flag")

    pol = p.add_argument_group("policy")
    pol.add_argument("--scheduler", choices=ALL_KINDS)
    pol.add_argument("--compare", nargs="?", const="all",
                     help="run several schedulers (comma list, default all nine)")
    pol.add_argument("--lambda-s", type=float)
    pol.add_argument("--lambda-c", type=float)
    pol.add_argument("--kat", type=_kat, help=f"keep-alive grid in seconds (default {','.join(f'{k:g}' for k in DEFAULT_KAT)})")
    pol.add_argument("--mem-old", type=float, help="old pool capacity in MiB")
    pol.add_argument("--mem-new", type=float, help="new pool capacity in MiB")
    pol.add_argument("--particles", type=int)
    pol.add_argument("--iters", type=int)
    pol.add_argument("--window", type=int)
    pol.add_argument("--seed", type=int)
    pol.add_argument("--no-perception", action="store_true", default=None,
                     help="disable swarm redistribution on environment changes")
    pol.add_argument("--no-dynamic-weights", action="store_true", default=None,
                     help="keep PSO inertia and learning factors fixed")
    pol.add_argument("--no-adjust", action="store_true", default=None,
                     help="refuse overflowing keep-alives instead of priority re-packing")

    p.add_argument("--out", type=Path, help="output directory (default: out)")
    p.add_argument("--no-check", dest="check_invariants", action="store_false", default=None,
                   help="skip per-event pool consistency checks")
    return p


def _load_file(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - FILE_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return data


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Merge defaults, the optional ``--config`` file and flags (flags win), then validate."""
    ns = vars(build_parser().parse_args(argv))
    file_vals = _load_file(ns.pop("config")) if ns.get("config") else {}

    def pick(key, default=None):
        if ns.get(key) is not None:
            return ns[key]
        return file_vals.get(key, default)

    paths = {k: (Path(pick(k)) if pick(k) is not None else None) for k in PATH_KEYS}
    scenario = pick("scenario")
    if scenario is not None and scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    if scenario is None:
        missing = [f"--{k}" for k in ("trace", "ci", "profiles") if paths[k] is None]
        if missing:
            raise ConfigError(f"missing required input {', '.join(missing)} (or use --scenario)")
    for k, path in paths.items():
        if path is not None and not path.is_file():
            raise ConfigError(f"--{k.replace('_', '-')}: no such file {path}")

    compare = pick("compare")
    if compare:
        names = ALL_KINDS if compare == "all" else tuple(x.strip() for x in str(compare).split(",") if x.strip())
        bad = [n for n in names if n not in ALL_KINDS]
        if bad or not names:
            raise ConfigError(f"--compare: unknown scheduler(s) {bad}; choose from {', '.join(ALL_KINDS)}")
        schedulers = tuple(dict.fromkeys(names))
    else:
        sched = pick("scheduler", "ecolife")
        if sched not in ALL_KINDS:
            raise ConfigError(f"unknown scheduler {sched!r}")
        schedulers = (sched,)

    sim_kwargs = {}
    for key, field_name in SIM_KEYS.items():
        val = pick(key)
        if val is not None:
            sim_kwargs[field_name] = _kat(val) if key == "kat" and isinstance(val, str) else val
    for key, field_name in FLAG_KEYS.items():
        if pick(key):
            sim_kwargs[field_name] = False
    try:
        sim = SimConfig(**sim_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        scenario=scenario, schedulers=schedulers, compare=bool(compare), sim=sim,
        out=Path(pick("out", "out")), check_invariants=bool(pick("check_invariants", True)),
        explicit_capacity=("mem_old" in sim_kwargs, "mem_new" in sim_kwargs), **paths)


def load_inputs(cfg: RunConfig):
    """Return (trace, ci, profiles, hardware, sim_config) for ``cfg``."""
    sim = cfg.sim
    if cfg.scenario:
        sc = generate_scenario(cfg.scenario, sim.seed)
        sc.write(cfg.out / "scenario")
        trace, ci, profiles, hardware = sc.trace, sc.ci, sc.profiles, dict(sc.hardware)
        sim = replace(sim, mem_old=sim.mem_old if cfg.explicit_capacity[0] else sc.mem_old,
                      mem_new=sim.mem_new if cfg.explicit_capacity[1] else sc.mem_new)
    else:
        trace, ci, profiles = load_trace(cfg.trace), load_ci(cfg.ci), load_profiles(cfg.profiles)
        hardware = dict(PAIR_A)
    if cfg.hw_old:
        hardware["old"] = replace(load_hardware(cfg.hw_old), id="old")
    if cfg.hw_new:
        hardware["new"] = replace(load_hardware(cfg.hw_new), id="new")
    return trace, ci, profiles, hardware, sim


def execute(cfg: RunConfig) -> dict[str, RunResult]:
    trace, ci, profiles, hardware, sim = load_inputs(cfg)
    results = {}
    for kind in cfg.schedulers:
        log.info("running %s on %d invocations", kind, len(trace))
        results[kind] = run(trace, make_policy(kind), profiles, hardware, ci, sim,
                            check_invariants=cfg.check_invariants)
    if cfg.compare:
        emit_comparison(results, cfg.out)
    else:
        res = results[cfg.schedulers[0]]
        emit_report(res.records, res.summary, cfg.out)
    return results


def _print_table(results: dict[str, RunResult], stream) -> None:
    print(f"{'policy':<11} {'invocations':>11} {'cold':>5} {'service_s':>11} {'carbon_g':>11} {'objective':>10}",
          file=stream)
    for kind, res in results.items():
        s = res.summary
        print(f"{kind:<11} {s.invocations:>11} {s.cold_starts:>5} {s.total_service_time:>11.3f} "
              f"{s.total_carbon:>11.5f} {s.total_objective:>10.4f}", file=stream)


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("ECOLIFE_LOG", "WARNING").upper()
    logging.basicConfig(level=level if isinstance(logging.getLevelName(level), int) else "WARNING",
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
        results = execute(cfg)
    except (EcoLifeError, OSError) as exc:
        print(f"ecolife: error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"ecolife: internal check failed: {exc}", file=sys.stderr)
        return 1
    _print_table(results, sys.stdout)
    print(f"wrote results to {cfg.out}", file=sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
