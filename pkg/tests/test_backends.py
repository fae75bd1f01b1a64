"""The compiled kernels and the numpy fallback must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from la3d import _backend
from la3d.filters import build_gaussian_kernel, canny_edges, gaussian_blur, pixelize

pytestmark = pytest.mark.skipif(not _backend.has_compiled(), reason="compiled kernels not built")

frames = arrays(np.uint8, st.tuples(st.integers(1, 40), st.integers(1, 40), st.just(3)))


@settings(max_examples=60, deadline=None)
@given(frames, st.sampled_from([1, 3, 5, 13, 25]), st.sampled_from([1, 3, 7]), st.floats(0.3, 12.0))
def test_blur_identical(f, kx, ky, sigma):
    kh, kv = build_gaussian_kernel(kx, sigma), build_gaussian_kernel(ky, sigma)
    assert np.array_equal(gaussian_blur(f, kh, kv, backend="cython"), gaussian_blur(f, kh, kv, backend="python"))


@settings(max_examples=60, deadline=None)
@given(frames, st.integers(1, 45), st.integers(1, 45))
def test_pixelize_identical(f, dx, dy):
    assert np.array_equal(pixelize(f, dx, dy, backend="cython"), pixelize(f, dx, dy, backend="python"))


@settings(max_examples=60, deadline=None)
@given(frames, st.integers(1, 300), st.integers(0, 400))
def test_canny_identical(f, low, extra):
    from la3d.filters import CannyParams

    p = CannyParams(low, low + extra)
    assert np.array_equal(canny_edges(f, p, backend="cython"), canny_edges(f, p, backend="python"))


def test_canny_identical_on_structured_images(rng):
    for _ in range(10):
        small = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
        f = np.repeat(np.repeat(small, 5, axis=0), 5, axis=1)
        assert np.array_equal(canny_edges(f, backend="cython"), canny_edges(f, backend="python"))


def test_env_var_forces_fallback():
    code = "import la3d._backend as b; print(b.BACKEND)"
    env = dict(os.environ, LA3D_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("LA3D_BACKEND")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "cython"


def test_backend_benchmark_script_runs(capsys):
    import runpy
    from pathlib import Path

    import pytest

    from la3d import _backend

    if not _backend.has_compiled():
        pytest.skip("compiled extension not built")
    mod = runpy.run_path(str(Path(__file__).parent.parent / "benchmarks" / "bench_backends.py"))
    assert mod["main"](["--repeats", "1"]) == 0
    assert "speedup" in capsys.readouterr().out
