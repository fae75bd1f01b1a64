"""Numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or ``LA3D_BACKEND=python``.
Results are bit-identical to ``_kernels.pyx``: same tap order, same integer
rounding, same NMS tie-breaking.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

TG22 = 13573  # tan(22.5 deg) in Q15


def _round_u8(acc: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(acc + 0.5), 0, 255).astype(np.uint8)


def blur_separable(src: np.ndarray, kh: np.ndarray, kv: np.ndarray) -> np.ndarray:
    h, w = src.shape[:2]
    rx, ry = len(kh) // 2, len(kv) // 2

    padded = np.pad(src, ((0, 0), (rx, rx), (0, 0)), mode="edge").astype(np.float64)
    tmp = np.zeros((h, w, src.shape[2]), dtype=np.float64)
    for i, g in enumerate(kh):
        tmp += g * padded[:, i : i + w]

    padded = np.pad(tmp, ((ry, ry), (0, 0), (0, 0)), mode="edge")
    acc = np.zeros_like(tmp)
    for i, g in enumerate(kv):
        acc += g * padded[i : i + h]
    return _round_u8(acc)


def pixelize_blocks(src: np.ndarray, dx: int, dy: int) -> np.ndarray:
    h, w = src.shape[:2]
    ys = np.arange(0, h, dy)
    xs = np.arange(0, w, dx)
    sums = np.add.reduceat(np.add.reduceat(src.astype(np.int64), ys, axis=0), xs, axis=1)
    ny = np.diff(np.append(ys, h))
    nx = np.diff(np.append(xs, w))
    n = (ny[:, None] * nx[None, :])[..., None]
    means = ((2 * sums + n) // (2 * n)).astype(np.uint8)
    return np.repeat(np.repeat(means, ny, axis=0), nx, axis=1)


def canny_gray(gray: np.ndarray, low: int, high: int) -> np.ndarray:
    g = np.pad(gray.astype(np.int64), 1, mode="edge")
    h, w = gray.shape

    def at(dy: int, dx: int) -> np.ndarray:
        return g[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    gx = (at(-1, 1) - at(-1, -1)) + 2 * (at(0, 1) - at(0, -1)) + (at(1, 1) - at(1, -1))
    gy = (at(1, -1) - at(-1, -1)) + 2 * (at(1, 0) - at(-1, 0)) + (at(1, 1) - at(-1, 1))
    ax, ay = np.abs(gx), np.abs(gy)
    mag = np.zeros((h + 2, w + 2), dtype=np.int64)
    mag[1:-1, 1:-1] = ax + ay
    m = mag[1:-1, 1:-1]

    def nb(dy: int, dx: int) -> np.ndarray:
        return mag[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]

    tg22x = ax * TG22
    yq = ay << 15
    horiz = yq < tg22x
    vert = ~horiz & (yq > tg22x + (ax << 16))
    diag = ~horiz & ~vert
    same_sign = (gx < 0) == (gy < 0)

    keep = np.zeros((h, w), dtype=bool)
    keep |= horiz & (m > nb(0, -1)) & (m >= nb(0, 1))
    keep |= vert & (m > nb(-1, 0)) & (m >= nb(1, 0))
    keep |= diag & same_sign & (m > nb(-1, -1)) & (m > nb(1, 1))
    keep |= diag & ~same_sign & (m > nb(-1, 1)) & (m > nb(1, -1))
    keep &= m > low

    strong = keep & (m > high)
    labels, count = ndimage.label(keep, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros((h, w), dtype=bool)
    hit = np.zeros(count + 1, dtype=bool)
    hit[labels[strong]] = True
    hit[0] = False
    return hit[labels]
