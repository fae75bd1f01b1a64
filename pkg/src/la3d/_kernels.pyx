# cython: language_level=3
"""Compiled inner loops for the filters module.

Every routine here has a numpy twin in ``_pure.py`` that produces
bit-identical output; ``_backend.py`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.uint8_t u8
ctypedef cnp.int64_t i64

cdef i64 TG22 = 13573  # tan(22.5 deg) in Q15


cdef inline Py_ssize_t _clamp(Py_ssize_t v, Py_ssize_t hi) nogil:
    if v < 0:
        return 0
    if v > hi:
        return hi
    return v


cdef inline u8 _round_u8(double v) nogil:
    v = v + 0.5
    if v <= 0.0:
        return 0
    if v >= 255.0:
        return 255
    return <u8>v


def blur_separable(const u8[:, :, ::1] src, const double[::1] kh, const double[::1] kv):
    """Horizontal then vertical pass, float64 accumulation, edge replication."""
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], nc = src.shape[2]
    cdef Py_ssize_t kx = kh.shape[0], ky = kv.shape[0]
    cdef Py_ssize_t rx = kx // 2, ry = ky // 2
    cdef Py_ssize_t rowlen = w * nc
    cdef Py_ssize_t y, x, c, i, j, off
    cdef double g
    tmp_arr = np.empty((h, rowlen), dtype=np.float64)
    line_arr = np.empty((w + 2 * rx) * nc, dtype=np.float64)
    acc_arr = np.empty(rowlen, dtype=np.float64)
    out_arr = np.empty((h, w, nc), dtype=np.uint8)
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[::1] line = line_arr
    cdef double[::1] acc = acc_arr
    cdef u8[:, :, ::1] out = out_arr
    with nogil:
        for y in range(h):
            for x in range(w + 2 * rx):
                for c in range(nc):
                    line[x * nc + c] = src[y, _clamp(x - rx, w - 1), c]
            for j in range(rowlen):
                tmp[y, j] = 0.0
            for i in range(kx):
                g = kh[i]
                off = i * nc
                for j in range(rowlen):
                    tmp[y, j] = tmp[y, j] + g * line[off + j]
        for y in range(h):
            for j in range(rowlen):
                acc[j] = 0.0
            for i in range(ky):
                g = kv[i]
                off = _clamp(y + i - ry, h - 1)
                for j in range(rowlen):
                    acc[j] = acc[j] + g * tmp[off, j]
            for x in range(w):
                for c in range(nc):
                    out[y, x, c] = _round_u8(acc[x * nc + c])
    return out_arr


def pixelize_blocks(const u8[:, :, ::1] src, Py_ssize_t dx, Py_ssize_t dy):
    """Block mean (integer, half-up) over dx-by-dy tiles anchored at the origin."""
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1], nc = src.shape[2]
    cdef Py_ssize_t by, bx, y, x, c, y1, x1
    cdef i64 n
    cdef i64 sums[16]
    cdef u8 val[16]
    if nc > 16:
        raise ValueError("at most 16 channels supported")
    out_arr = np.empty((h, w, nc), dtype=np.uint8)
    cdef u8[:, :, ::1] out = out_arr
    with nogil:
        by = 0
        while by < h:
            y1 = by + dy
            if y1 > h:
                y1 = h
            bx = 0
            while bx < w:
                x1 = bx + dx
                if x1 > w:
                    x1 = w
                for c in range(nc):
                    sums[c] = 0
                for y in range(by, y1):
                    for x in range(bx, x1):
                        for c in range(nc):
                            sums[c] += src[y, x, c]
                n = (y1 - by) * (x1 - bx)
                for c in range(nc):
                    val[c] = <u8>((2 * sums[c] + n) // (2 * n))
                for y in range(by, y1):
                    for x in range(bx, x1):
                        for c in range(nc):
                            out[y, x, c] = val[c]
                bx = x1
            by = y1
    return out_arr


def canny_gray(const u8[:, ::1] gray, long low, long high):
    """Sobel (replicated border), L1 magnitude, 4-way NMS, 8-connected hysteresis."""
    cdef Py_ssize_t h = gray.shape[0], w = gray.shape[1]
    cdef Py_ssize_t y, x, ym, yp, xm, xp, qy, qx, ny, nx, top
    cdef i64 gx, gy, ax, ay, m, tg22x, tg67x, yq
    cdef int s
    mag_arr = np.zeros((h + 2, w + 2), dtype=np.int64)
    gx_arr = np.empty((h, w), dtype=np.int64)
    gy_arr = np.empty((h, w), dtype=np.int64)
    state_arr = np.zeros((h, w), dtype=np.uint8)  # 0 none, 1 weak, 2 edge
    stack_arr = np.empty(h * w * 2 + 2, dtype=np.intp)
    cdef i64[:, ::1] mag = mag_arr
    cdef i64[:, ::1] GX = gx_arr
    cdef i64[:, ::1] GY = gy_arr
    cdef u8[:, ::1] state = state_arr
    cdef Py_ssize_t[::1] stack = stack_arr
    with nogil:
        for y in range(h):
            ym = _clamp(y - 1, h - 1)
            yp = _clamp(y + 1, h - 1)
            for x in range(w):
                xm = _clamp(x - 1, w - 1)
                xp = _clamp(x + 1, w - 1)
                gx = (<i64>gray[ym, xp] - gray[ym, xm]) + 2 * (<i64>gray[y, xp] - gray[y, xm]) + (<i64>gray[yp, xp] - gray[yp, xm])
                gy = (<i64>gray[yp, xm] - gray[ym, xm]) + 2 * (<i64>gray[yp, x] - gray[ym, x]) + (<i64>gray[yp, xp] - gray[ym, xp])
                GX[y, x] = gx
                GY[y, x] = gy
                mag[y + 1, x + 1] = (gx if gx >= 0 else -gx) + (gy if gy >= 0 else -gy)
        top = 0
        for y in range(h):
            for x in range(w):
                m = mag[y + 1, x + 1]
                if m <= low:
                    continue
                gx = GX[y, x]
                gy = GY[y, x]
                ax = gx if gx >= 0 else -gx
                ay = gy if gy >= 0 else -gy
                tg22x = ax * TG22
                yq = ay << 15
                if yq < tg22x:
                    if not (m > mag[y + 1, x] and m >= mag[y + 1, x + 2]):
                        continue
                else:
                    tg67x = tg22x + (ax << 16)
                    if yq > tg67x:
                        if not (m > mag[y, x + 1] and m >= mag[y + 2, x + 1]):
                            continue
                    else:
                        s = -1 if (gx < 0) != (gy < 0) else 1
                        if not (m > mag[y, x + 1 - s] and m > mag[y + 2, x + 1 + s]):
                            continue
                if m > high:
                    state[y, x] = 2
                    stack[top] = y
                    stack[top + 1] = x
                    top += 2
                else:
                    state[y, x] = 1
        while top > 0:
            top -= 2
            qy = stack[top]
            qx = stack[top + 1]
            for ny in range(qy - 1, qy + 2):
                if ny < 0 or ny >= h:
                    continue
                for nx in range(qx - 1, qx + 2):
                    if nx < 0 or nx >= w:
                        continue
                    if state[ny, nx] == 1:
                        state[ny, nx] = 2
                        stack[top] = ny
                        stack[top + 1] = nx
                        top += 2
    return state_arr == 2
