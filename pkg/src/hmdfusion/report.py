"""Serialization of run reports to CSV and JSON.

Each (scenario, fuser, metric) series becomes one CSV file. The file starts
with a schema line and the full configuration as ``#`` comment lines, then
the columns ``step,time_s,metric,value,lower_bound,upper_bound``. Wall-clock
timings only go to the JSON summary so that CSV output is byte-identical for
identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .scenarios.config import SCHEMA_VERSION, RunReport, _jsonable

OUTPUT_ENV = "HMDFUSION_OUTPUT_DIR"
DEFAULT_OUTPUT = "hmdfusion-output"
CSV_COLUMNS = ("step", "time_s", "metric", "value", "lower_bound", "upper_bound")


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "nan" if np.isnan(v) else repr(v)


def config_header(report: RunReport) -> list[str]:
    """Comment lines echoing every configuration value, one flattened key per line."""
    lines = [f"# hmdfusion-report schema_version={SCHEMA_VERSION}"]

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in obj:
                walk(f"{prefix}.{k}" if prefix else str(k), obj[k])
        else:
            lines.append(f"# config {prefix}={json.dumps(obj, sort_keys=True)}")

    walk("", report.config.to_dict())
    return lines


def series_csv(report: RunReport, series) -> str:
    buf = io.StringIO()
    for line in config_header(report):
        buf.write(line + "\n")
    buf.write(f"# fuser={series.fuser}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    lo = series.lower if series.lower is not None else [None] * len(series.value)
    hi = series.upper if series.upper is not None else [None] * len(series.value)
    for s, t, v, a, b in zip(series.step, series.time_s, series.value, lo, hi):
        w.writerow([int(s), _fmt(t), series.metric, _fmt(v), _fmt(a), _fmt(b)])
    return buf.getvalue()


def write_report(report: RunReport, output_dir: str | Path | None = None) -> list[Path]:
    """Write all CSV series plus ``summary`` and ``ellipses`` JSON files; returns the paths."""
    out = Path(output_dir) if output_dir is not None else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    scenario = report.config.kind.value
    paths = []
    for s in report.series:
        p = out / f"{scenario}__{s.fuser}__{s.metric}.csv"
        p.write_text(series_csv(report, s))
        paths.append(p)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": report.config.to_dict(),
        "summary": _jsonable(report.summary),
        "failures": _jsonable(report.failures),
        "timings_s": _jsonable(report.timings),
    }
    p = out / f"{scenario}__summary.json"
    p.write_text(json.dumps(_nan_safe(summary), indent=2, sort_keys=True) + "\n")
    paths.append(p)
    if report.ellipses:
        p = out / f"{scenario}__ellipses.json"
        p.write_text(json.dumps(_nan_safe(_jsonable(report.ellipses)), indent=2, sort_keys=True) + "\n")
        paths.append(p)
    return paths


def _nan_safe(obj):
    """Replace non-finite floats by ``None`` so the JSON is standard."""
    if isinstance(obj, dict):
        return {k: _nan_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_safe(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def read_series_csv(path: str | Path) -> dict[str, np.ndarray]:
    """Parse a series file written by :func:`write_report` (comment lines skipped)."""
    rows = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    reader = csv.DictReader(rows)
    cols = {c: [] for c in CSV_COLUMNS}
    for r in reader:
        for c in CSV_COLUMNS:
            cols[c].append(r[c])
    out = {"metric": np.array(cols["metric"])}
    for c in ("step", "time_s", "value", "lower_bound", "upper_bound"):
        out[c] = np.array([float(v) if v != "" else np.nan for v in cols[c]])
    return out
