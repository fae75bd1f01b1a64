"""Raster and mask primitives.

Frames are ``uint8`` numpy arrays of shape ``(height, width, 3)`` in RGB
order; masks are ``bool`` arrays of shape ``(height, width)``. Coordinates are
row-major with the origin at the top-left pixel, ``x`` to the right and ``y``
down. Functions never modify their inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ContractError(ValueError):
    """Inputs violate a shape or bounds precondition."""


class BBox(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def within(self, width: int, height: int) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.w >= 1
            and self.h >= 1
            and self.x + self.w <= width
            and self.y + self.h <= height
        )


@dataclass(frozen=True)
class InstanceMask:
    """One detected object: full-frame mask, its tight box, class and score."""

    mask: np.ndarray
    box: BBox
    class_id: int = 0
    score: float = 1.0

    @classmethod
    def from_mask(cls, mask: np.ndarray, class_id: int = 0, score: float = 1.0) -> "InstanceMask | None":
        """Build an instance with its box derived from ``mask``; None if empty."""
        mask = as_mask(mask)
        box = tight_bbox(mask)
        if box is None:
            return None
        return cls(mask, box, class_id, score)

    @property
    def area(self) -> int:
        return mask_area(self.mask)


def as_frame(pixels: np.ndarray) -> np.ndarray:
    """Validate and normalize to an RGB ``uint8`` frame; grayscale is promoted."""
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        raise ContractError(f"frame must be uint8, got {arr.dtype}")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif arr.ndim == 3 and arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    elif arr.ndim == 3 and arr.shape[2] == 4:
        arr = arr[:, :, :3]
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ContractError(f"frame must be HxWx3, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ContractError("frame must be at least 1x1")
    return np.ascontiguousarray(arr)


def as_mask(mask: np.ndarray) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ContractError(f"mask must be 2-D, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


def mask_area(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))


def tight_bbox(mask: np.ndarray) -> BBox | None:
    """Smallest box covering every true bit, or None for an empty mask."""
    rows = np.flatnonzero(np.any(mask, axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(np.any(mask, axis=0))
    y0, y1 = int(rows[0]), int(rows[-1])
    x0, x1 = int(cols[0]), int(cols[-1])
    return BBox(x0, y0, x1 - x0 + 1, y1 - y0 + 1)


def _check_same_size(frame: np.ndarray, *others: np.ndarray) -> None:
    for other in others:
        if other.shape[:2] != frame.shape[:2]:
            raise ContractError(f"size mismatch: {other.shape[:2]} vs frame {frame.shape[:2]}")


def compose_masked(frame: np.ndarray, mask: np.ndarray, transformed: np.ndarray) -> np.ndarray:
    """Take ``transformed`` where ``mask`` is set and ``frame`` elsewhere."""
    _check_same_size(frame, mask, transformed)
    if transformed.shape != frame.shape:
        raise ContractError(f"channel mismatch: {transformed.shape} vs {frame.shape}")
    return np.where(np.asarray(mask, dtype=bool)[:, :, None], transformed, frame)


def _check_box(frame: np.ndarray, box: BBox) -> None:
    h, w = frame.shape[:2]
    if not BBox(*box).within(w, h):
        raise ContractError(f"box {tuple(box)} outside {w}x{h} frame")


def crop(frame: np.ndarray, box: BBox) -> np.ndarray:
    _check_box(frame, box)
    ys, xs = BBox(*box).slices
    return frame[ys, xs].copy()


def paste(frame: np.ndarray, box: BBox, patch: np.ndarray) -> np.ndarray:
    _check_box(frame, box)
    box = BBox(*box)
    if patch.shape[:2] != (box.h, box.w):
        raise ContractError(f"patch {patch.shape[:2]} does not fit box {box.h}x{box.w}")
    out = frame.copy()
    out[box.slices] = patch
    return out
