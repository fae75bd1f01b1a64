import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from la3d.image import BBox, ContractError, as_frame, compose_masked, crop, mask_area, paste, tight_bbox

from .oracles import bbox_scan


def checkerboard(n):
    return (np.indices((n, n)).sum(axis=0) % 2).astype(bool)


def test_mask_area_examples():
    assert mask_area(np.zeros((4, 4), bool)) == 0
    assert mask_area(np.ones((4, 4), bool)) == 16
    cb = checkerboard(4)
    assert mask_area(cb) == sum(1 for y in range(4) for x in range(4) if cb[y, x]) == 8


def test_tight_bbox_examples():
    m = np.zeros((6, 6), bool)
    m[3, 2] = True
    assert tight_bbox(m) == BBox(2, 3, 1, 1)
    assert tight_bbox(np.ones((4, 4), bool)) == BBox(0, 0, 4, 4)
    m = np.zeros((4, 4), bool)
    m[1, 1] = m[2, 3] = True
    assert tight_bbox(m) == bbox_scan(m) == BBox(1, 1, 3, 2)
    assert tight_bbox(np.zeros((3, 3), bool)) is None


masks = arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12)))


@given(masks)
def test_tight_bbox_matches_scan_and_is_minimal(m):
    box = tight_bbox(m)
    assert box == bbox_scan(m)
    if box is None:
        return
    inside = np.zeros_like(m)
    inside[box.slices] = True
    assert not np.any(m & ~inside)
    x, y, w, h = box
    # each edge touches a true bit, so shrinking it by one would drop that bit
    assert m[y, x : x + w].any() and m[y + h - 1, x : x + w].any()
    assert m[y : y + h, x].any() and m[y : y + h, x + w - 1].any()


def test_compose_examples(rng):
    red = np.zeros((8, 8, 3), np.uint8)
    red[..., 0] = 255
    blue = np.zeros((8, 8, 3), np.uint8)
    blue[..., 2] = 255
    assert np.array_equal(compose_masked(red, np.zeros((8, 8), bool), blue), red)
    assert np.array_equal(compose_masked(red, np.ones((8, 8), bool), blue), blue)
    m = rng.random((8, 8)) < 0.5
    out = compose_masked(red, m, blue)
    for y in range(8):
        for x in range(8):
            assert tuple(out[y, x]) == ((0, 0, 255) if m[y, x] else (255, 0, 0))


def test_compose_size_mismatch():
    f = np.zeros((4, 4, 3), np.uint8)
    with pytest.raises(ContractError):
        compose_masked(f, np.zeros((4, 5), bool), f)
    with pytest.raises(ContractError):
        compose_masked(f, np.zeros((4, 4), bool), np.zeros((4, 5, 3), np.uint8))


@settings(max_examples=50)
@given(st.data())
def test_compose_properties(data):
    h = data.draw(st.integers(1, 16))
    w = data.draw(st.integers(1, 16))
    frame = data.draw(arrays(np.uint8, (h, w, 3)))
    mask = data.draw(arrays(bool, (h, w)))
    other = (frame.astype(np.int16) + 1).astype(np.uint8)  # differs everywhere
    out = compose_masked(frame, mask, other)
    assert np.array_equal(out[~mask], frame[~mask])
    changed = np.any(out != frame, axis=-1)
    assert changed.sum() == mask_area(mask)


def test_crop_paste_examples():
    f = (np.arange(16, dtype=np.uint8).reshape(4, 4)[..., None] * np.array([1, 2, 3], np.uint8))
    f = np.ascontiguousarray(f)
    assert np.array_equal(crop(f, BBox(0, 0, 4, 4)), f)
    c = crop(f, BBox(1, 1, 2, 2))
    # pixel (x, y) of the gradient holds value 4*y + x in channel 0
    expected = np.array([[4 * y + x for x in (1, 2)] for y in (1, 2)], np.uint8)
    assert np.array_equal(c[..., 0], expected)
    assert np.array_equal(c[..., 2], expected * 3)
    b = BBox(1, 0, 3, 2)
    assert np.array_equal(paste(f, b, crop(f, b)), f)


def test_crop_out_of_bounds():
    f = np.zeros((4, 4, 3), np.uint8)
    for b in (BBox(3, 0, 2, 1), BBox(-1, 0, 1, 1), BBox(0, 0, 0, 1)):
        with pytest.raises(ContractError):
            crop(f, b)
    with pytest.raises(ContractError):
        paste(f, BBox(0, 0, 2, 2), np.zeros((3, 2, 3), np.uint8))


@given(st.data())
def test_crop_paste_roundtrip(data):
    h = data.draw(st.integers(1, 10))
    w = data.draw(st.integers(1, 10))
    f = data.draw(arrays(np.uint8, (h, w, 3)))
    x = data.draw(st.integers(0, w - 1))
    y = data.draw(st.integers(0, h - 1))
    bw = data.draw(st.integers(1, w - x))
    bh = data.draw(st.integers(1, h - y))
    b = BBox(x, y, bw, bh)
    assert np.array_equal(paste(f, b, crop(f, b)), f)


def test_as_frame_promotes_gray():
    g = np.arange(6, dtype=np.uint8).reshape(2, 3)
    f = as_frame(g)
    assert f.shape == (2, 3, 3)
    assert np.array_equal(f[..., 1], g)
    with pytest.raises(ContractError):
        as_frame(np.zeros((2, 2, 3), np.float32))
