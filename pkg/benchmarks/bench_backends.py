"""Compare the compiled and numpy kernels on 320x240 frames.

usage: python3 benchmarks/bench_backends.py [--repeats N] [--csv PATH]
"""
import argparse
import csv
import statistics
import sys
import time

import numpy as np

from la3d import _backend
from la3d.filters import CannyParams, build_gaussian_kernel, canny_edges, gaussian_blur, pixelize


def cases(frame):
    k13 = build_gaussian_kernel(13, 10.0)
    k25 = build_gaussian_kernel(25, 10.0)
    crop = np.ascontiguousarray(frame[40:200, 100:180])
    return {
        "blur k13 frame": lambda b: gaussian_blur(frame, k13, k13, backend=b),
        "blur k25 crop": lambda b: gaussian_blur(crop, k25, k25, backend=b),
        "pixelize d4 frame": lambda b: pixelize(frame, 4, backend=b),
        "pixelize d16 crop": lambda b: pixelize(crop, 16, backend=b),
        "canny frame": lambda b: canny_edges(frame, CannyParams(100, 200), backend=b),
    }


def time_us(fn, repeats):
    fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e6)
    return statistics.median(samples)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=50)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    if not _backend.has_compiled():
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(240, 320, 3), dtype=np.uint8)
    rows = []
    for name, run in cases(frame).items():
        assert np.array_equal(run("python"), run("cython")), name
        py = time_us(lambda: run("python"), args.repeats)
        cy = time_us(lambda: run("cython"), args.repeats)
        rows.append({"case": name, "python_us": round(py, 1), "cython_us": round(cy, 1), "speedup": round(py / cy, 2)})
    print(f"{'case':<20}{'numpy us':>12}{'cython us':>12}{'speedup':>9}")
    for r in rows:
        print(f"{r['case']:<20}{r['python_us']:>12.1f}{r['cython_us']:>12.1f}{r['speedup']:>8.2f}x")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
