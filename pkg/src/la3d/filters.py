"""Conventional anonymizers: Gaussian blur, pixelization, silhouettes, edges.

The inner loops live in the kernel backend (compiled when available); this
module validates parameters and owns the pinned numerical conventions:

* blur: separable, float64 accumulation, edge-replicated borders, result
  rounded half away from zero and clamped to [0, 255];
* pixelize: block means over tiles anchored at the top-left corner (partial
  edge tiles average only their own pixels), nearest upsampling;
* Canny: integer luma (0.299, 0.587, 0.114), 3x3 Sobel without pre-smoothing,
  L1 magnitude, 4-direction NMS, 8-connected hysteresis.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .image import as_frame


class ParameterError(ValueError):
    """Filter parameters are out of their valid range."""


@dataclass(frozen=True)
class GaussianKernel:
    size: int
    sigma: float
    coefficients: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class CannyParams:
    low_threshold: float = 100.0
    high_threshold: float = 200.0

    def __post_init__(self) -> None:
        if not 0 < self.low_threshold <= self.high_threshold:
            raise ParameterError(
                f"need 0 < low <= high, got {self.low_threshold}, {self.high_threshold}"
            )


@functools.lru_cache(maxsize=256)
def build_gaussian_kernel(k: int, sigma: float) -> GaussianKernel:
    """Sampled Gaussian of odd width ``k``, normalized to unit sum (cached)."""
    if int(k) != k or k < 1 or k % 2 == 0:
        raise ParameterError(f"kernel size must be a positive odd integer, got {k}")
    if not sigma > 0 or not math.isfinite(sigma):
        raise ParameterError(f"sigma must be positive, got {sigma}")
    k = int(k)
    center = (k - 1) / 2
    i = np.arange(k, dtype=np.float64)
    g = np.exp(-((i - center) ** 2) / (2.0 * sigma * sigma))
    g /= g.sum()
    g.setflags(write=False)
    return GaussianKernel(k, float(sigma), g)


def gaussian_blur(
    frame: np.ndarray,
    kernel_h: GaussianKernel,
    kernel_v: GaussianKernel | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Separable blur; ``kernel_h`` runs along rows, ``kernel_v`` down columns."""
    kernel_v = kernel_h if kernel_v is None else kernel_v
    impl = _backend.kernels if backend is None else _backend.get(backend)
    src = np.ascontiguousarray(frame, dtype=np.uint8)
    if kernel_h.size == 1 and kernel_v.size == 1:
        return src.copy()
    return impl.blur_separable(src, kernel_h.coefficients, kernel_v.coefficients)


def pixelize(frame: np.ndarray, d_x: int, d_y: int | None = None, backend: str | None = None) -> np.ndarray:
    """Downsample by block mean with factors (d_x, d_y), upsample by nearest pixel."""
    d_y = d_x if d_y is None else d_y
    for d in (d_x, d_y):
        if int(d) != d or d < 1:
            raise ParameterError(f"downsizing factor must be a positive integer, got {d}")
    impl = _backend.kernels if backend is None else _backend.get(backend)
    src = np.ascontiguousarray(frame, dtype=np.uint8)
    if d_x == 1 and d_y == 1:
        return src.copy()
    return impl.pixelize_blocks(src, int(d_x), int(d_y))


def mean_color(frame: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Per-channel mean, rounded half up with integer arithmetic."""
    px = frame.reshape(-1, frame.shape[2]) if mask is None else frame[mask]
    n = len(px)
    sums = px.astype(np.int64).sum(axis=0)
    return ((2 * sums + n) // (2 * n)).astype(np.uint8)


def blacken(frame: np.ndarray) -> np.ndarray:
    return np.zeros_like(frame)


def luma(frame: np.ndarray) -> np.ndarray:
    """Integer luma; adding c to every channel adds exactly c here."""
    f = frame.astype(np.int32)
    return ((299 * f[..., 0] + 587 * f[..., 1] + 114 * f[..., 2] + 500) // 1000).astype(np.uint8)


def canny_edges(frame: np.ndarray, params: CannyParams = CannyParams(), backend: str | None = None) -> np.ndarray:
    impl = _backend.kernels if backend is None else _backend.get(backend)
    gray = np.ascontiguousarray(luma(as_frame(frame)))
    # thresholds compare against integer magnitudes: m > t  <=>  m > floor(t)
    return impl.canny_gray(gray, int(math.floor(params.low_threshold)), int(math.floor(params.high_threshold)))


def blacken_edged(frame: np.ndarray, params: CannyParams = CannyParams(), backend: str | None = None) -> np.ndarray:
    """Black silhouette with the crop's own Canny edges drawn in white."""
    edges = canny_edges(frame, params, backend)
    out = np.zeros_like(frame)
    out[edges] = 255
    return out
