"""Benchmark the compiled kernels against the pure-NumPy fallback.

Run: python benchmarks/bench_kernels.py
Asserts exact numerical agreement between the two paths, then reports
wall-clock times.
"""

import time

import numpy as np

from ldiphoto._kernels import BACKEND, pyref
from ldiphoto.inpaint import usable_neighbors

try:
    from ldiphoto._kernels import _native as native
except ImportError:
    native = None


def timed(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    if native is None:
        print("compiled extension not built; nothing to compare")
        return
    rng = np.random.default_rng(0)
    rows = []

    m = rng.random((512, 512)).astype(np.float32)
    a, ta = timed(native.bilateral_median, m, 7, 4.0, 0.5)
    b, tb = timed(pyref.bilateral_median, m, 7, 4.0, 0.5, repeat=1)
    assert np.array_equal(a, b)
    rows.append(("bilateral_median 512x512 w7", ta, tb))

    plane = rng.random((256, 256))
    mask = np.zeros((256, 256), dtype=bool)
    mask[64:192, 64:192] = True
    usable = usable_neighbors(mask, np.zeros_like(mask), np.zeros_like(mask))
    (pa, ia, da), ta = timed(native.diffusion_solve, plane, mask, usable, 1e-6, 4000)
    (pb, ib, db), tb = timed(pyref.diffusion_solve, plane, mask, usable, 1e-6, 4000, repeat=1)
    assert ia == ib and np.array_equal(pa, pb)
    rows.append((f"diffusion_solve 128^2 cells ({ia} sweeps)", ta, tb))

    n = 120 * 120
    grid = np.stack(np.meshgrid(np.arange(120.0), np.arange(120.0)), -1).reshape(-1, 2)
    sx, sy = grid[:, 0] * 4.0, grid[:, 1] * 4.0
    sz = rng.uniform(1, 3, n)
    colors = rng.random((n, 3))
    idx = np.arange(n).reshape(120, 120)
    quads = np.stack(
        [idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[1:, 1:].ravel()], axis=1
    )
    tris = np.concatenate(
        [quads, np.stack([idx[:-1, :-1].ravel(), idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()], 1)]
    ).astype(np.int64)
    a, ta = timed(native.rasterize, sx, sy, sz, colors, tris, 480, 480)
    b, tb = timed(pyref.rasterize, sx, sy, sz, colors, tris, 480, 480, repeat=1)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    rows.append((f"rasterize {tris.shape[0]} tris -> 480^2", ta, tb))

    print(f"active backend: {BACKEND}\n")
    print(f"{'kernel':<42} {'native':>10} {'numpy':>10} {'speedup':>8}")
    for name, ta, tb in rows:
        print(f"{name:<42} {ta * 1e3:>8.1f}ms {tb * 1e3:>8.1f}ms {tb / ta:>7.1f}x")


if __name__ == "__main__":
    main()
