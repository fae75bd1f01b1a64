"""Model-free proxies for anonymization strength.

These are desk-scale stand-ins: they say how much a method changed the person
pixels and how much fine detail it removed. They are not substitutes for
privacy-attribute, re-identification or anomaly-detection scores.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .image import ContractError, InstanceMask

NOTE = "proxy metrics only; not equivalent to cMAP/mAP/AUC evaluations"


@dataclass
class ProxyMetrics:
    mse: tuple[float, float, float]
    psnr: float
    hf_ratio: float
    outside_diff: int
    mask_pixels: int
    note: str = NOTE

    def as_dict(self) -> dict:
        d = asdict(self)
        d["mse"] = list(self.mse)
        return d


def union_mask(shape_hw: tuple[int, int], instances: list[InstanceMask]) -> np.ndarray:
    out = np.zeros(shape_hw, dtype=bool)
    for inst in instances:
        out |= inst.mask
    return out


def laplacian(frame: np.ndarray) -> np.ndarray:
    """4-neighbour Laplacian per channel with replicated borders."""
    f = np.pad(frame.astype(np.float64), ((1, 1), (1, 1), (0, 0)), mode="edge")
    return f[:-2, 1:-1] + f[2:, 1:-1] + f[1:-1, :-2] + f[1:-1, 2:] - 4.0 * f[1:-1, 1:-1]


def hf_energy(frame: np.ndarray, mask: np.ndarray) -> float:
    lap = laplacian(frame)
    return float(np.sum(lap[mask] ** 2))


def proxy_metrics(original: np.ndarray, anonymized: np.ndarray, instances: list[InstanceMask]) -> ProxyMetrics:
    if original.shape != anonymized.shape:
        raise ContractError(f"shape mismatch {original.shape} vs {anonymized.shape}")
    mask = union_mask(original.shape[:2], instances)
    n = int(mask.sum())
    diff = original.astype(np.int64) - anonymized.astype(np.int64)
    outside = int(np.count_nonzero(np.any(diff[~mask] != 0, axis=-1)))
    if n == 0:
        return ProxyMetrics((0.0, 0.0, 0.0), math.inf, 1.0, outside, 0)

    mse = tuple(float(v) for v in (diff[mask] ** 2).mean(axis=0))
    mean_mse = sum(mse) / len(mse)
    psnr = math.inf if mean_mse == 0 else 10.0 * math.log10(255.0**2 / mean_mse)

    e_orig = hf_energy(original, mask)
    e_anon = hf_energy(anonymized, mask)
    if e_orig == 0:
        ratio = 1.0 if e_anon == 0 else math.inf
    else:
        ratio = e_anon / e_orig
    return ProxyMetrics(mse, psnr, ratio, outside, n)
