"""Plot-ready CSV/JSON output for runs, and loaders to read it back."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path
from typing import Sequence

from .errors import TraceParseError
from .sim import MetricsRecord, RunResult, RunSummary

RECORD_FIELDS = tuple(f.name for f in fields(MetricsRecord))
CDF_HEADER = ("quantile", "service_time", "carbon")
COMPARISON_HEADER = (
    "policy", "invocations", "cold_starts", "total_service_time", "mean_service_time",
    "total_service_carbon", "total_keepalive_carbon", "total_carbon", "total_objective",
    "keepalive_minutes", "evictions", "transfers", "p95_service_time", "p95_carbon",
    "contention_free",
)


def _fmt(value) -> str:
    # repr round-trips floats exactly
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_records(records: Sequence[MetricsRecord], path: str | Path) -> None:
    _write_csv(Path(path), RECORD_FIELDS,
               ([getattr(r, name) for name in RECORD_FIELDS] for r in records))


def write_cdf(summary: RunSummary, path: str | Path) -> None:
    _write_csv(Path(path), CDF_HEADER, summary.cdf)


def write_comparison(summaries: Sequence[RunSummary], path: str | Path) -> None:
    def row(s: RunSummary):
        return (s.policy, s.invocations, s.cold_starts, s.total_service_time, s.mean_service_time,
                s.total_service_carbon, s.total_keepalive_carbon, s.total_carbon, s.total_objective,
                s.keepalive_minutes, s.evictions, s.transfers,
                s.service_time_percentiles.get("p95", 0.0), s.carbon_percentiles.get("p95", 0.0),
                s.contention_free)
    _write_csv(Path(path), COMPARISON_HEADER, (row(s) for s in summaries))


def emit_report(records: Sequence[MetricsRecord], summary: RunSummary, outdir: str | Path) -> dict[str, Path]:
    """Write ``records.csv``, ``summary.json`` and ``cdf.csv`` for one run.

    Wall-clock overhead goes to ``timing.json`` so the other three files stay
    byte-identical across reruns.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {name: outdir / name for name in ("records.csv", "summary.json", "cdf.csv", "timing.json")}
    write_records(records, paths["records.csv"])
    _write_json(paths["summary.json"], summary.to_dict())
    write_cdf(summary, paths["cdf.csv"])
    _write_json(paths["timing.json"], asdict(summary.overhead) if summary.overhead else {})
    return paths


def emit_comparison(results: dict[str, RunResult], outdir: str | Path) -> dict[str, Path]:
    """One sub-directory per policy plus ``comparison.csv`` (one row per policy)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for kind, res in results.items():
        for name, p in emit_report(res.records, res.summary, outdir / kind).items():
            paths[f"{kind}/{name}"] = p
    paths["comparison.csv"] = outdir / "comparison.csv"
    write_comparison([r.summary for r in results.values()], paths["comparison.csv"])
    return paths


def _read_rows(path: str | Path, header: Sequence[str]) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or tuple(first) != tuple(header):
            raise TraceParseError(f"{path}: unexpected header {first!r}", line=1)
        return [row for row in reader if row]


def load_records(path: str | Path) -> list[MetricsRecord]:
    out = []
    for lineno, row in enumerate(_read_rows(path, RECORD_FIELDS), start=2):
        if len(row) != len(RECORD_FIELDS):
            raise TraceParseError(f"expected {len(RECORD_FIELDS)} columns, got {len(row)}", line=lineno)
        d = dict(zip(RECORD_FIELDS, row))
        try:
            out.append(MetricsRecord(
                function_id=d["function_id"], time_ms=int(d["time_ms"]),
                exec_location=d["exec_location"], cold=d["cold"] == "1",
                service_time=float(d["service_time"]), service_carbon=float(d["service_carbon"]),
                keepalive_carbon=float(d["keepalive_carbon"]),
                keepalive_seconds=float(d["keepalive_seconds"]),
                keep_location=d["keep_location"], keep_duration=float(d["keep_duration"]),
                objective=float(d["objective"])))
        except ValueError as exc:
            raise TraceParseError(str(exc), line=lineno) from None
    return out


def load_summary(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def load_cdf(path: str | Path) -> list[tuple[int, float, float]]:
    return [(int(q), float(s), float(c)) for q, s, c in _read_rows(path, CDF_HEADER)]


def load_comparison(path: str | Path) -> list[dict]:
    rows = _read_rows(path, COMPARISON_HEADER)
    out = []
    for row in rows:
        d = dict(zip(COMPARISON_HEADER, row))
        for k in COMPARISON_HEADER[1:]:
            if k in ("invocations", "cold_starts", "evictions", "transfers"):
                d[k] = int(d[k])
            elif k == "contention_free":
                d[k] = d[k] == "1"
            else:
                d[k] = float(d[k])
        out.append(d)
    return out
