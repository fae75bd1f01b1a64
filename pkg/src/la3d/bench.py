"""Per-preset latency benchmark over an in-memory corpus."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .image import InstanceMask
from .methods import resolve_preset
from .pipeline import process_frame

BASELINE = "RAW_IMAGE"
STAGES = ("detect", "transform", "compose", "total")

Loader = Callable[[str, np.ndarray], list[InstanceMask]]


def fixed_counterpart(name: str) -> str | None:
    """BLURRED_A -> BLURRED, PIXELIZED_D4_A -> PIXELIZED_D4; None otherwise."""
    if name == "BLURRED_A":
        return "BLURRED"
    if name.startswith("PIXELIZED_D") and name.endswith("_A"):
        return name[:-2]
    return None


@dataclass
class PresetTimings:
    preset: str
    samples: dict[str, list[float]] = field(default_factory=lambda: {s: [] for s in STAGES})

    def median(self, stage: str) -> float:
        v = self.samples[stage]
        return statistics.median(v) if v else 0.0

    def p95(self, stage: str) -> float:
        v = self.samples[stage]
        return float(np.percentile(v, 95)) if v else 0.0


def run_bench(
    corpus: Sequence[tuple[str, np.ndarray]],
    loader: Loader,
    presets: Sequence[str],
    repeats: int = 3,
    warmup: bool = True,
) -> dict[str, PresetTimings]:
    """Time every preset over the corpus ``repeats`` times.

    Presets are interleaved within each repeat so slow drift of the machine
    affects all of them alike. One untimed warm-up pass runs first.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    names = list(dict.fromkeys([BASELINE, *presets]))
    specs = {n: resolve_preset(n) for n in names}
    results = {n: PresetTimings(n) for n in names}
    for rep in range(repeats + (1 if warmup else 0)):
        record = rep > 0 or not warmup
        for fid, frame in corpus:
            for name in names:
                t0 = time.perf_counter()
                instances = loader(fid, frame)
                detect_us = (time.perf_counter() - t0) * 1e6
                _, report = process_frame(frame, instances, specs[name], fid, metrics=False)
                if record:
                    s = results[name].samples
                    s["detect"].append(detect_us)
                    s["transform"].append(report.transform_us)
                    s["compose"].append(report.compose_us)
                    s["total"].append(detect_us + report.transform_us + report.compose_us)
    return results


BENCH_COLUMNS = ["preset", "samples"] + [f"{s}_{q}_us" for s in STAGES for q in ("median", "p95")]
OVERHEAD_COLUMNS = [
    "preset",
    "total_median_us",
    "overhead_vs_raw_pct",
    "anon_median_us",
    "fixed_counterpart",
    "anon_overhead_vs_fixed_pct",
]


def anon_median(t: PresetTimings) -> float:
    """Median of transform + compose per frame (detection excluded)."""
    v = [a + b for a, b in zip(t.samples["transform"], t.samples["compose"])]
    return statistics.median(v) if v else 0.0


def bench_rows(results: dict[str, PresetTimings]) -> list[dict]:
    rows = []
    for name, t in results.items():
        row = {"preset": name, "samples": len(t.samples["total"])}
        for s in STAGES:
            row[f"{s}_median_us"] = round(t.median(s), 2)
            row[f"{s}_p95_us"] = round(t.p95(s), 2)
        rows.append(row)
    return rows


def overhead_rows(results: dict[str, PresetTimings]) -> list[dict]:
    base = results[BASELINE].median("total")
    rows = []
    for name, t in results.items():
        total = t.median("total")
        fixed = fixed_counterpart(name)
        anon = anon_median(t)
        vs_fixed = ""
        if fixed in results and anon_median(results[fixed]) > 0:
            vs_fixed = round(100.0 * (anon - anon_median(results[fixed])) / anon_median(results[fixed]), 2)
        rows.append(
            {
                "preset": name,
                "total_median_us": round(total, 2),
                "overhead_vs_raw_pct": round(100.0 * (total - base) / base, 2) if base > 0 else 0.0,
                "anon_median_us": round(anon, 2),
                "fixed_counterpart": fixed or "",
                "anon_overhead_vs_fixed_pct": vs_fixed,
            }
        )
    return rows


def write_rows(path: str | Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        w.writerows(rows)
