"""CSV / JSON emitters for run results. Floats use 12 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .mcs import AggregateResult, ScenarioResult
from .pev import write_events_csv

AGGREGATE_COLUMNS = [
    "pl", "n_pev", "scenarios", "failed",
    "mean_daily_lol", "std_daily_lol", "mean_daily_travel", "std_daily_travel",
    "lifetime_transformer_yr", "lifetime_vr_yr", "replacements",
    "proposed_cost", "conventional_cost", "vr_cost",
    "mean_kva", "peak_kva", "tap_min", "tap_max",
]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def aggregate_rows(result: AggregateResult) -> list[dict]:
    rows = []
    for lv in result.levels:
        pl = lv.pl
        have = lv.scenarios > 0
        prop = result.proposed.get(pl)
        conv = result.conventional.get(pl)
        rows.append({
            "pl": pl,
            "n_pev": lv.n_pev,
            "scenarios": lv.scenarios,
            "failed": len(lv.failed),
            "mean_daily_lol": lv.mean_daily_lol if have else math.nan,
            "std_daily_lol": lv.std_daily_lol if have else math.nan,
            "mean_daily_travel": lv.mean_daily_travel if have else math.nan,
            "std_daily_travel": lv.std_daily_travel if have else math.nan,
            "lifetime_transformer_yr": result.lifetimes.get(pl, math.nan),
            "lifetime_vr_yr": result.vr_lifetimes.get(pl, math.nan),
            "replacements": prop[-1].replacements if prop else 0,
            "proposed_cost": prop[-1].total if prop else math.nan,
            "conventional_cost": conv[-1].total if conv else math.nan,
            "vr_cost": result.vr_cost.get(pl, math.nan),
            "mean_kva": float(lv.expected_kva.mean()) if have else math.nan,
            "peak_kva": float(lv.expected_kva.max()) if have else math.nan,
            "tap_min": lv.tap_min,
            "tap_max": lv.tap_max,
        })
    return rows


def write_aggregate(result: AggregateResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for row in aggregate_rows(result):
            w.writerow([fmt(row[c]) for c in AGGREGATE_COLUMNS])


def write_tco_curve(result: AggregateResult, path: Path) -> None:
    """Long format: pl, method, year, cost."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pl", "method", "year", "cost"])
        for pl in result.config.pl_levels:
            for method, curves in (("proposed", result.proposed), ("conventional", result.conventional)):
                for cb in curves.get(pl, []):
                    w.writerow([fmt(pl), method, fmt(cb.t2), fmt(cb.total)])


def write_expected(result: AggregateResult, path: Path) -> None:
    dt = result.config.dt
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pl", "t", "expected_k", "expected_kva"])
        for lv in result.levels:
            for i, (k, s) in enumerate(zip(lv.expected_k, lv.expected_kva)):
                w.writerow([fmt(lv.pl), fmt(i * dt), fmt(k), fmt(s)])


def write_trace(res: ScenarioResult, dt: float, directory: Path) -> None:
    """Per-step trace t, K, kVA, V, tap, travel, Q_TO, Q_HST, F_AA plus the event list."""
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"pl{fmt(res.pl)}_s{res.index:04d}"
    travel = np.concatenate([[0], np.cumsum(np.abs(np.diff(res.tap)))])
    with open(directory / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "kva", "v", "tap", "travel", "top_oil", "hot_spot", "faa"])
        n = len(res.k)
        for i in range(n + 1):
            step = [fmt(res.k[i]), fmt(res.kva[i]), fmt(res.v_reg[i])] if i < n else ["", "", ""]
            w.writerow([fmt(i * dt), *step, str(int(res.tap[i])), str(int(travel[i])),
                        fmt(res.top_oil[i]), fmt(res.hot_spot[i]), fmt(res.faa[i])])
    if res.events:
        write_events_csv(res.events, directory / f"{stem}_events.csv")


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(obj, path: Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False, allow_nan=True) + "\n")
