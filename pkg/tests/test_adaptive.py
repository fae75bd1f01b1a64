import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from la3d.adaptive import (
    EmptyMaskError,
    adaptive_blur,
    adaptive_pixelize,
    adaptive_scaler,
    anonymize_instances,
    blur_parameters,
    odd_floor,
    pixelize_parameters,
    scaling_factor,
    sigma_from_kernel,
    transform_crop,
)
from la3d.filters import build_gaussian_kernel, gaussian_blur, pixelize
from la3d.image import BBox, ContractError, InstanceMask, compose_masked
from la3d.methods import AdaptiveParams, BlurBase, PixelizeBase, resolve_preset

from .conftest import random_frame
from .oracles import mean_color_naive

A = AdaptiveParams()  # alpha_r=1, alpha_b=0.5


def frame_with_mask(h, w, area):
    mask = np.zeros(h * w, bool)
    mask[:area] = True
    return np.zeros((h, w, 3), np.uint8), mask.reshape(h, w)


# -- scaling factor -----------------------------------------------------------


def test_scaler_floor_at_one_percent():
    f, m = frame_with_mask(100, 100, 100)
    assert adaptive_scaler(f, m, 1.0) == 1.0


def test_scaler_ten_percent():
    f, m = frame_with_mask(100, 100, 1000)
    with mpmath.workdps(40):
        ref = float(mpmath.log(10))
    assert abs(adaptive_scaler(f, m, 1.0) - ref) < 1e-12
    assert abs(ref - 2.302585) < 1e-6


def test_scaler_e_percent():
    # relative area e% with alpha_r=2 gives r = 2 ln(e) = 2
    assert abs(scaling_factor(math.e * 1e4, 10**6, 2.0) - 2.0) < 1e-12
    f, m = frame_with_mask(1000, 1000, round(math.e * 1e4))
    assert abs(adaptive_scaler(f, m, 2.0) - 2.0) < 1e-4


def test_scaler_errors():
    f, m = frame_with_mask(4, 4, 0)
    with pytest.raises(EmptyMaskError):
        adaptive_scaler(f, m, 1.0)
    with pytest.raises(ContractError):
        adaptive_scaler(f, np.ones((3, 4), bool), 1.0)


@given(st.integers(1, 10_000), st.integers(1, 10_000), st.sampled_from([0.5, 1.0, 2.0, 4.0]))
def test_scaler_monotone_and_floored(a, b, alpha):
    lo, hi = sorted((a, b))
    r_lo, r_hi = scaling_factor(lo, 10_000, alpha), scaling_factor(hi, 10_000, alpha)
    assert 1.0 <= r_lo <= r_hi


@pytest.mark.parametrize("s", [2, 3])
def test_scaler_resolution_invariant(s):
    f, m = frame_with_mask(30, 40, 300)
    big_f = np.repeat(np.repeat(f, s, 0), s, 1)
    big_m = np.repeat(np.repeat(m, s, 0), s, 1)
    assert adaptive_scaler(f, m, 1.0) == adaptive_scaler(big_f, big_m, 1.0)


# -- arithmetic helpers -------------------------------------------------------


@pytest.mark.parametrize("k,sigma", [(1, 0.5), (3, 0.8), (13, 2.3)])
def test_sigma_from_kernel(k, sigma):
    assert abs(sigma_from_kernel(k) - sigma) < 1e-12


@pytest.mark.parametrize("v,floor_k,expected", [(26.0, 13, 25), (13.0, 13, 13), (12.4, 13, 13), (27.9, 13, 27), (0.5, 1, 1)])
def test_odd_floor(v, floor_k, expected):
    assert odd_floor(v, floor_k) == expected


# -- blur branches ----------------------------------------------------------


def test_blur_params_at_base():
    assert blur_parameters((200, 200), BlurBase(), 1.0, A) == ((13, 13), 10.0)


def test_blur_params_capped_case():
    # crop 40 wide x 30 high; caps 15 (height) and 19 (width); raw 39
    k, sigma = blur_parameters((30, 40), BlurBase((13, 13), 10.0), 3.0, A)
    assert k == (15, 19) and sigma == 10.0


def test_blur_params_ismax():
    k, sigma = blur_parameters((24, 24), BlurBase(), 2.0, AdaptiveParams(ismax=True))
    assert k == (23, 23)
    assert abs(sigma - 3.8) < 1e-12


def test_blur_params_ismax_uses_larger_axis():
    k, sigma = blur_parameters((10, 31), BlurBase(), 1.0, AdaptiveParams(ismax=True))
    assert k == (9, 31) and sigma == pytest.approx(sigma_from_kernel(31))


def test_blur_params_fullblur_sigma():
    base = BlurBase((13, 13), 10.0)
    k, sigma = blur_parameters((400, 400), base, 2.0, AdaptiveParams(isfullblur=True))
    assert k == (25, 25) and sigma == 20.0
    # sigma clipped to the kernel size
    k, sigma = blur_parameters((30, 30), BlurBase((3, 3), 10.0), 4.0, AdaptiveParams(isfullblur=True))
    assert k == (11, 11) and sigma == 11


def test_adaptive_blur_uses_computed_kernels(rng):
    crop = random_frame(rng, 30, 40)
    out = adaptive_blur(crop, BlurBase((13, 13), 10.0), 3.0, A)
    ref = gaussian_blur(crop, build_gaussian_kernel(19, 10.0), build_gaussian_kernel(15, 10.0))
    assert np.array_equal(out, ref)


def test_adaptive_blur_r1_equals_fixed(rng):
    crop = random_frame(rng, 60, 50)
    k = build_gaussian_kernel(13, 10.0)
    assert np.array_equal(adaptive_blur(crop, BlurBase(), 1.0, A), gaussian_blur(crop, k, k))


# -- pixelize branches --------------------------------------------------------


def test_pixel_params_cap_case():
    assert pixelize_parameters((60, 20), PixelizeBase(4), 2.30, A) == (9, 9)
    assert pixelize_parameters((20, 60), PixelizeBase(4), 2.30, A) == (9, 9)


def test_pixel_params_base_and_ismax():
    assert pixelize_parameters((100, 50), PixelizeBase(4), 1.0, A) == (4, 4)
    assert pixelize_parameters((17, 5), PixelizeBase(4), 3.0, AdaptiveParams(ismax=True)) == (17, 5)


def test_adaptive_pixelize_r1_equals_fixed(rng):
    crop = random_frame(rng, 40, 24)
    assert np.array_equal(adaptive_pixelize(crop, PixelizeBase(4), 1.0, A), pixelize(crop, 4))


@settings(max_examples=50)
@given(st.integers(1, 40), st.integers(1, 40))
def test_ismax_pixelize_is_mean_color(h, w):
    rng = np.random.default_rng(h * 100 + w)
    crop = random_frame(rng, h, w)
    out = adaptive_pixelize(crop, PixelizeBase(4), 1.7, AdaptiveParams(ismax=True))
    assert np.all(out == np.array(mean_color_naive(crop), np.uint8))


# -- boundary conditions ------------------------------------------------------


@settings(max_examples=300)
@given(
    st.integers(1, 300),
    st.integers(1, 300),
    st.floats(1.0, 12.0),
    st.floats(0.01, 1.0),
    st.sampled_from([1, 3, 5, 13, 21]),
    st.sampled_from([1, 2, 4, 8]),
)
def test_boundaries_hold(h, w, r, alpha_b, kb, d):
    params = AdaptiveParams(alpha_b=alpha_b)
    k, _ = blur_parameters((h, w), BlurBase((kb, kb), 10.0), r, params)
    for ka, dim in zip(k, (h, w)):
        cap = odd_floor(max(alpha_b * dim, 1.0), 1)
        assert ka % 2 == 1
        if cap >= kb:
            assert kb <= ka <= cap
        else:
            assert ka == cap
    da = pixelize_parameters((h, w), PixelizeBase(d), r, params)
    for dv, dim in zip(da, (h, w)):
        cap = max(math.floor(alpha_b * dim), 1)
        if cap >= d:
            assert d <= dv <= cap
        else:
            assert dv == cap


def test_kernel_grows_with_resolution_when_alpha_r_tracks_size():
    base = BlurBase((3, 3), 2.0)
    params = AdaptiveParams(alpha_b=1.0, z_ref=(64, 48))
    sizes = []
    for s in (1, 2):
        h, w = 48 * s, 64 * s
        frame = np.zeros((h, w, 3), np.uint8)
        mask = np.zeros((h, w), bool)
        mask[: 16 * s, : 40 * s] = True  # ~20% of the frame
        r = adaptive_scaler(frame, mask, params.alpha_r_for(w, h))
        k, _ = blur_parameters((16 * s, 40 * s), base, r, params)
        sizes.append(k[1])
    assert sizes[1] > sizes[0]


# -- instance loop ------------------------------------------------------------


def disk(h, w, cy, cx, rad):
    yy, xx = np.mgrid[0:h, 0:w]
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= rad**2


def test_no_instances_is_identity(rng):
    f = random_frame(rng, 20, 20)
    assert np.array_equal(anonymize_instances(f, [], resolve_preset("BLURRED_A")), f)


def test_full_frame_blackened(rng):
    f = random_frame(rng, 12, 9)
    inst = InstanceMask.from_mask(np.ones((12, 9), bool))
    assert not anonymize_instances(f, [inst], resolve_preset("BLACKENED")).any()


def test_empty_masks_are_skipped(rng):
    f = random_frame(rng, 10, 10)
    empty = InstanceMask(np.zeros((10, 10), bool), BBox(0, 0, 10, 10))
    for name in ("BLURRED_A", "PIXELIZED_D4_A", "BLACKENED"):
        assert np.array_equal(anonymize_instances(f, [empty], resolve_preset(name)), f)


def test_two_disjoint_instances_follow_composition(rng):
    f = random_frame(rng, 60, 80)
    a = InstanceMask.from_mask(disk(60, 80, 20, 20, 12))
    b = InstanceMask.from_mask(disk(60, 80, 35, 60, 15))
    spec = resolve_preset("PIXELIZED_D4_A")
    out = anonymize_instances(f, [a, b], spec)
    # per-pixel oracle: each instance independently cropped, transformed, composed
    expected = f.copy()
    for inst in (a, b):
        r = adaptive_scaler(f, inst.mask, 1.0)
        ys, xs = inst.box.slices
        t = np.zeros_like(f)
        t[ys, xs] = transform_crop(f[ys, xs], spec, r)
        expected = compose_masked(expected, inst.mask, t)
    assert np.array_equal(out, expected)
    union = a.mask | b.mask
    assert np.array_equal(out[~union], f[~union])
    assert np.any(out[union] != f[union])


def test_overlap_order_matters(rng):
    f = random_frame(rng, 50, 50)
    a = InstanceMask.from_mask(disk(50, 50, 22, 22, 14))
    b = InstanceMask.from_mask(disk(50, 50, 28, 28, 14))
    spec = resolve_preset("BLURRED")
    ab = anonymize_instances(f, [a, b], spec)
    ba = anonymize_instances(f, [b, a], spec)
    assert not np.array_equal(ab, ba)
    # the second instance reads pixels the first already rewrote
    first = anonymize_instances(f, [a], spec)
    assert np.array_equal(ab, anonymize_instances(first, [b], spec))


def test_mask_size_mismatch(rng):
    f = random_frame(rng, 10, 10)
    inst = InstanceMask.from_mask(np.ones((10, 11), bool))
    with pytest.raises(ContractError):
        anonymize_instances(f, [inst], resolve_preset("BLACKENED"))


def _mse(frame, out, mask):
    d = frame[mask].astype(np.int64) - out[mask].astype(np.int64)
    return float((d**2).mean())


def test_upper_cap_can_undercut_base_blur(rng):
    # a 25x33 box has height cap odd_floor(12.5) = 11 < 13, so the adaptive kernel is smaller
    assert blur_parameters((25, 33), BlurBase(), 1.46, A)[0] == (11, 15)
    frame = random_frame(rng, 120, 160)
    mask = np.zeros((120, 160), bool)
    mask[40:65, 50:83] = True
    inst = [InstanceMask.from_mask(mask)]
    adaptive = anonymize_instances(frame, inst, resolve_preset("BLURRED_A"))
    fixed = anonymize_instances(frame, inst, resolve_preset("BLURRED"))
    assert _mse(frame, adaptive, mask) < _mse(frame, fixed, mask)


@settings(max_examples=60, deadline=None)
@given(st.integers(26, 120), st.integers(26, 160), st.integers(0, 2**32 - 1))
def test_adaptive_at_least_fixed_when_caps_allow_base(bh, bw, seed):
    r = np.random.default_rng(seed)
    frame = r.integers(0, 256, size=(120, 160, 3), dtype=np.uint8)
    mask = np.zeros((120, 160), bool)
    mask[:bh, :bw] = True
    inst = [InstanceMask.from_mask(mask)]
    for a, f in [("BLURRED_A", "BLURRED"), ("PIXELIZED_D4_A", "PIXELIZED_D4"), ("PIXELIZED_D8_A", "PIXELIZED_D8")]:
        ma = _mse(frame, anonymize_instances(frame, inst, resolve_preset(a)), mask)
        mf = _mse(frame, anonymize_instances(frame, inst, resolve_preset(f)), mask)
        assert ma >= mf, (a, bh, bw)
