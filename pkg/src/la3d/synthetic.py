"""Synthetic scenes with person-like instances, for benchmarks and fixtures."""
from __future__ import annotations

import numpy as np

from .image import InstanceMask


def textured_background(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    base = np.stack(
        [
            60 + 80 * xx / max(width - 1, 1),
            70 + 60 * yy / max(height - 1, 1),
            90 + 40 * np.sin(xx / 9.0) * np.cos(yy / 13.0),
        ],
        axis=-1,
    )
    noise = rng.normal(0, 12, size=(height, width, 3))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def person_mask(width: int, height: int, cx: float, cy: float, ph: float) -> np.ndarray:
    """Head-and-torso blob: an ellipse body under a round head, ``ph`` tall."""
    yy, xx = np.mgrid[0:height, 0:width]
    pw = 0.4 * ph
    head_r = 0.12 * ph
    head_cy = cy - 0.5 * ph + head_r
    body_cy = cy + head_r
    body_ry = 0.5 * ph - head_r
    head = (xx - cx) ** 2 + (yy - head_cy) ** 2 <= head_r**2
    body = ((xx - cx) / (pw / 2)) ** 2 + ((yy - body_cy) / max(body_ry, 1)) ** 2 <= 1.0
    return head | body


def make_scene(
    rng: np.random.Generator,
    width: int = 320,
    height: int = 240,
    n_persons: int | None = None,
    min_height: float = 0.1,
    max_height: float = 0.6,
    allow_overlap: bool = True,
    max_persons: int = 5,
) -> tuple[np.ndarray, list[InstanceMask]]:
    """A frame with 0..max_persons textured person blobs.

    Person heights are drawn log-uniformly between ``min_height`` and
    ``max_height`` of the frame height. With ``allow_overlap=False`` each mask
    excludes pixels already claimed, so the set can be stored as a sidecar.
    """
    frame = textured_background(rng, width, height)
    if n_persons is None:
        n_persons = int(rng.integers(0, max_persons + 1))
    claimed = np.zeros((height, width), dtype=bool)
    instances = []
    for _ in range(n_persons):
        ph = height * float(np.exp(rng.uniform(np.log(min_height), np.log(max_height))))
        cx = rng.uniform(0.1 * width, 0.9 * width)
        cy = rng.uniform(0.5 * ph, height - 0.5 * ph) if ph < height else height / 2
        mask = person_mask(width, height, cx, cy, ph)
        if not allow_overlap:
            mask &= ~claimed
        inst = InstanceMask.from_mask(mask, class_id=0, score=float(rng.uniform(0.3, 1.0)))
        if inst is None:
            continue
        claimed |= mask
        color = rng.integers(30, 226, size=3)
        texture = rng.normal(0, 35, size=(height, width, 3))
        stripes = 25 * np.sign(np.sin(np.arange(height) / 2.0))[:, None, None]
        person = np.clip(color + texture + stripes, 0, 255).astype(np.uint8)
        frame[mask] = person[mask]
        instances.append(inst)
    return frame, instances
