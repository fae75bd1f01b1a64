"""Frame and sequence orchestration with latency accounting."""
from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

import numpy as np

from .adaptive import InstanceTrace, anonymize_instances
from .image import InstanceMask
from .methods import AnonymizerSpec, Kind
from .metrics import NOTE, ProxyMetrics, proxy_metrics
from .segmentation import DetectorUnavailable

log = logging.getLogger(__name__)

STAGES = ("detect_us", "transform_us", "compose_us", "total_us")
FAILURE_POLICIES = ("abort", "quarantine")

Detector = Callable[[str, np.ndarray], list[InstanceMask]]
Sink = Callable[[str, np.ndarray, "FrameReport"], None]


@dataclass
class FrameReport:
    frame_id: str
    detect_us: float = 0.0
    transform_us: float = 0.0
    compose_us: float = 0.0
    instances: int = 0
    r_values: list[float] = field(default_factory=list)
    metrics: ProxyMetrics | None = None
    status: str = "ok"

    @property
    def total_us(self) -> float:
        return self.detect_us + self.transform_us + self.compose_us

    def as_dict(self) -> dict:
        d = asdict(self)
        d["total_us"] = self.total_us
        d["metrics"] = None if self.metrics is None else self.metrics.as_dict()
        return d

    def csv_row(self) -> dict:
        m = self.metrics
        return {
            "frame_id": self.frame_id,
            "status": self.status,
            "instances": self.instances,
            "detect_us": f"{self.detect_us:.1f}",
            "transform_us": f"{self.transform_us:.1f}",
            "compose_us": f"{self.compose_us:.1f}",
            "total_us": f"{self.total_us:.1f}",
            "r_values": ";".join(f"{r:.6f}" for r in self.r_values),
            "mse_mean": "" if m is None else f"{sum(m.mse) / 3:.4f}",
            "psnr": "" if m is None else f"{m.psnr:.4f}",
            "hf_ratio": "" if m is None else f"{m.hf_ratio:.6f}",
            "outside_diff": "" if m is None else m.outside_diff,
        }


CSV_COLUMNS = list(FrameReport("").csv_row())


def process_frame(
    frame: np.ndarray,
    instances: list[InstanceMask],
    spec: AnonymizerSpec,
    frame_id: str = "",
    metrics: bool = True,
) -> tuple[np.ndarray, FrameReport]:
    report = FrameReport(frame_id, instances=len(instances))
    if spec.kind is Kind.RAW:
        out = frame
    else:
        trace = InstanceTrace()
        out = anonymize_instances(frame, instances, spec, trace)
        report.transform_us = trace.transform_us
        report.compose_us = trace.compose_us
        report.r_values = trace.r_values
    if metrics:
        report.metrics = proxy_metrics(frame, out, instances)
    return out, report


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    return float(np.percentile(values, q))


@dataclass
class Summary:
    preset: str
    frames: int = 0
    quarantined: int = 0
    wall_s: float = 0.0
    reports: list[FrameReport] = field(default_factory=list)

    def stage_stats(self) -> dict[str, dict[str, float]]:
        ok = [r for r in self.reports if r.status == "ok"]
        out = {}
        for stage in STAGES:
            vals = [getattr(r, stage) for r in ok]
            out[stage] = {
                "mean": statistics.fmean(vals) if vals else 0.0,
                "median": statistics.median(vals) if vals else 0.0,
                "p95": _percentile(vals, 95),
            }
        return out

    @property
    def throughput_fps(self) -> float:
        return self.frames / self.wall_s if self.wall_s > 0 else 0.0

    def as_dict(self, timings: bool = True) -> dict:
        d = {
            "preset": self.preset,
            "frames": self.frames,
            "quarantined": self.quarantined,
            "metrics_note": NOTE,
            "frames_detail": [r.as_dict() for r in self.reports],
        }
        if timings:
            d["wall_s"] = self.wall_s
            d["throughput_fps"] = self.throughput_fps
            d["latency_us"] = self.stage_stats()
        else:
            for fr in d["frames_detail"]:
                for stage in STAGES:
                    fr.pop(stage, None)
        return d

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(_finite(self.as_dict()), indent=2))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for r in self.reports:
                writer.writerow(r.csv_row())


def _finite(obj):
    """JSON has no inf; write it as a string."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def _run_one(
    frame_id: str,
    frame: np.ndarray,
    detector: Detector,
    spec: AnonymizerSpec,
    policy: str,
    metrics: bool,
) -> tuple[str, np.ndarray, FrameReport]:
    t0 = time.perf_counter()
    try:
        instances = detector(frame_id, frame)
    except DetectorUnavailable as exc:
        if policy == "abort":
            raise
        log.warning("detector failed on %s, quarantining: %s", frame_id, exc)
        return frame_id, frame, FrameReport(frame_id, status="quarantined")
    detect_us = (time.perf_counter() - t0) * 1e6
    out, report = process_frame(frame, instances, spec, frame_id, metrics)
    report.detect_us = detect_us
    return frame_id, out, report


def process_sequence(
    source: Iterable[tuple[str, np.ndarray]],
    detector: Detector,
    spec: AnonymizerSpec,
    sink: Sink | None = None,
    *,
    workers: int = 1,
    on_detector_failure: str = "abort",
    quarantine: Callable[[str, np.ndarray], None] | None = None,
    metrics: bool = True,
) -> Summary:
    """Anonymize every frame of ``source``; results reach ``sink`` in input order.

    Quarantined frames (detector failed, policy "quarantine") never reach
    ``sink``; their raw pixels go to ``quarantine`` instead.
    """
    if on_detector_failure not in FAILURE_POLICIES:
        raise ValueError(f"failure policy must be one of {FAILURE_POLICIES}")
    workers = max(1, int(workers))
    summary = Summary(spec.preset_name or spec.kind.value)
    t_start = time.perf_counter()

    def emit(result: tuple[str, np.ndarray, FrameReport]) -> None:
        fid, out, report = result
        summary.reports.append(report)
        summary.frames += 1
        if report.status == "quarantined":
            summary.quarantined += 1
            if quarantine is not None:
                quarantine(fid, out)
        elif sink is not None:
            sink(fid, out, report)

    args = (detector, spec, on_detector_failure, metrics)
    if workers == 1:
        for fid, frame in source:
            emit(_run_one(fid, frame, *args))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending: deque = deque()
            for fid, frame in source:
                pending.append(pool.submit(_run_one, fid, frame, *args))
                if len(pending) >= 2 * workers:
                    emit(pending.popleft().result())
            while pending:
                emit(pending.popleft().result())
    summary.wall_s = time.perf_counter() - t_start
    return summary
