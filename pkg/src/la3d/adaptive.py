"""Area-adaptive anonymization strength.

Each person gets a scaling factor ``r = max(alpha_r * ln(100 * area(mask) /
area(frame)), 1)``. Blur kernel sizes and pixelization factors grow with r,
bounded below by their base values and above by ``alpha_b`` times the person's
bounding box (per axis, height first). ``ismax`` replaces all of that with
box-sized parameters.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import filters
from .image import ContractError, InstanceMask, mask_area
from .methods import AdaptiveParams, AnonymizerSpec, BlurBase, Kind, PixelizeBase


class EmptyMaskError(ValueError):
    """The instance has no pixels; callers skip it."""


def scaling_factor(area: int, frame_area: int, alpha_r: float) -> float:
    """``max(alpha_r * ln(100 * area / frame_area), 1)`` for a nonempty mask."""
    if area <= 0:
        raise EmptyMaskError("empty mask")
    return max(alpha_r * math.log(100.0 * area / frame_area), 1.0)


def adaptive_scaler(frame: np.ndarray, mask: np.ndarray, alpha_r: float) -> float:
    if mask.shape[:2] != frame.shape[:2]:
        raise ContractError(f"mask {mask.shape[:2]} does not match frame {frame.shape[:2]}")
    return scaling_factor(mask_area(mask), frame.shape[0] * frame.shape[1], alpha_r)


def sigma_from_kernel(k: int) -> float:
    """OpenCV's default sigma for a kernel of size ``k``."""
    return 0.3 * (0.5 * (k - 1) - 1) + 0.8


def odd_floor(v: float, floor_k: int) -> int:
    """Largest odd integer <= v, but never below ``floor_k``."""
    k = math.floor(v)
    if k % 2 == 0:
        k -= 1
    return max(k, floor_k)


def blur_parameters(
    crop_hw: tuple[int, int], base: BlurBase, r: float, params: AdaptiveParams
) -> tuple[tuple[int, int], float]:
    """Kernel sizes (height, width) and sigma for one person crop."""
    if params.ismax:
        k = tuple(max(d - 1 if d % 2 == 0 else d, 1) for d in crop_hw)
        return k, sigma_from_kernel(max(k))
    (kb_h, kb_w), (h, w), a = base.k, crop_hw, params.alpha_b
    k = (
        min(odd_floor(r * kb_h, kb_h), odd_floor(max(a * h, 1.0), 1)),
        min(odd_floor(r * kb_w, kb_w), odd_floor(max(a * w, 1.0), 1)),
    )
    sigma = r * base.sigma if params.isfullblur else base.sigma
    return k, min(sigma, max(k))


def pixelize_parameters(
    crop_hw: tuple[int, int], base: PixelizeBase, r: float, params: AdaptiveParams
) -> tuple[int, int]:
    """Downsizing factors (height, width) for one person crop."""
    h, w = crop_hw
    if params.ismax:
        return h, w
    d_raw = math.floor(r * base.d)
    a = params.alpha_b
    return min(d_raw, max(math.floor(a * h), 1)), min(d_raw, max(math.floor(a * w), 1))


def adaptive_blur(crop: np.ndarray, base: BlurBase, r: float, params: AdaptiveParams) -> np.ndarray:
    (kh, kw), sigma = blur_parameters(crop.shape[:2], base, r, params)
    return filters.gaussian_blur(
        crop, filters.build_gaussian_kernel(kw, sigma), filters.build_gaussian_kernel(kh, sigma)
    )


def adaptive_pixelize(crop: np.ndarray, base: PixelizeBase, r: float, params: AdaptiveParams) -> np.ndarray:
    d_y, d_x = pixelize_parameters(crop.shape[:2], base, r, params)
    return filters.pixelize(crop, d_x, d_y)


def transform_crop(crop: np.ndarray, spec: AnonymizerSpec, r: float = 1.0) -> np.ndarray:
    """Apply the method of ``spec`` to a person crop."""
    kind = spec.kind
    if kind is Kind.BLACKENED:
        return filters.blacken(crop)
    if kind is Kind.BLACKENED_EDGED:
        return filters.blacken_edged(crop, spec.canny)
    if kind is Kind.BLURRED:
        kh, kw = spec.blur.k
        return filters.gaussian_blur(
            crop,
            filters.build_gaussian_kernel(kw, spec.blur.sigma),
            filters.build_gaussian_kernel(kh, spec.blur.sigma),
        )
    if kind is Kind.PIXELIZED:
        return filters.pixelize(crop, spec.pixel.d)
    if kind is Kind.BLURRED_ADAPTIVE:
        return adaptive_blur(crop, spec.blur, r, spec.adaptive)
    if kind is Kind.PIXELIZED_ADAPTIVE:
        return adaptive_pixelize(crop, spec.pixel, r, spec.adaptive)
    return crop.copy()


@dataclass
class InstanceTrace:
    """Side channel for timings and r values collected while anonymizing."""

    r_values: list[float] = field(default_factory=list)
    skipped: int = 0
    transform_us: float = 0.0
    compose_us: float = 0.0


def anonymize_instances(
    frame: np.ndarray,
    instances: list[InstanceMask],
    spec: AnonymizerSpec,
    trace: InstanceTrace | None = None,
) -> np.ndarray:
    """Anonymize each instance in order, compositing under its mask.

    Later instances see the pixels already rewritten by earlier ones, so the
    order of ``instances`` matters where masks overlap.
    """
    trace = InstanceTrace() if trace is None else trace
    if spec.kind is Kind.RAW:
        return frame
    for inst in instances:
        if inst.mask.shape != frame.shape[:2]:
            raise ContractError(f"instance mask {inst.mask.shape} does not match frame {frame.shape[:2]}")

    t0 = time.perf_counter()
    work = frame.copy()
    compose = time.perf_counter() - t0
    transform = 0.0
    h, w = frame.shape[:2]
    alpha_r = spec.adaptive.alpha_r_for(w, h) if spec.kind.adaptive else 1.0
    for inst in instances:
        t0 = time.perf_counter()
        box = inst.box
        if box is None or not box.within(w, h):
            trace.skipped += 1
            continue
        ys, xs = box.slices
        # the box is tight, so the mask has no pixels outside it
        sel = inst.mask[ys, xs]
        area = int(np.count_nonzero(sel))
        if area == 0:
            trace.skipped += 1
            continue
        r = 1.0
        if spec.kind.adaptive:
            r = scaling_factor(area, h * w, alpha_r)
            trace.r_values.append(r)
        region = work[ys, xs]
        out = transform_crop(region, spec, r)
        t1 = time.perf_counter()
        np.copyto(region, out, where=sel[:, :, None])
        t2 = time.perf_counter()
        transform += t1 - t0
        compose += t2 - t1
    trace.transform_us += transform * 1e6
    trace.compose_us += compose * 1e6
    return work
