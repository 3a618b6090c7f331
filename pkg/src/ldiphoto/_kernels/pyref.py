"""Pure-NumPy reference implementations of the hot kernels.

These mirror the compiled versions in ``_native`` operation for operation
(same accumulation order, same float64 intermediates) so the two backends
produce bit-identical results; the test suite and the benchmark assert exact
equality. The one caveat: numpy's vectorised ``exp`` may differ from libm by
an ulp, which could in principle flip a weighted-median pick when the
cumulative weight lands exactly on the half-total boundary; picked values are
always input samples and agreement has been exact on all fuzzed inputs.
"""

import math

import numpy as np


def bilateral_median(values, window, sigma_spatial, sigma_intensity):
    """Weighted-median filter of a 2-D float map.

    Weight of sample q in the window around p:
    exp(-dist(p,q)^2 / 2*ss^2) * exp(-(v(p)-v(q))^2 / 2*si^2).
    Border windows are clipped to the image. The output value at p is the
    smallest sample value whose cumulative (value-ascending) weight reaches
    half of the total window weight.
    """
    h, w = values.shape
    r = window // 2
    v64 = values.astype(np.float64)
    padded = np.full((h + 2 * r, w + 2 * r), np.nan)
    padded[r : r + h, r : r + w] = v64

    k = window * window
    samples = np.empty((k, h, w))
    spatial = np.empty(k)
    i = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            samples[i] = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            spatial[i] = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial))
            i += 1

    diff = samples - v64[None]
    weights = spatial[:, None, None] * np.exp(-(diff * diff) / (2.0 * sigma_intensity * sigma_intensity))
    oob = np.isnan(samples)
    weights[oob] = 0.0
    samples = np.where(oob, np.inf, samples)

    order = np.argsort(samples, axis=0, kind="stable")
    svals = np.take_along_axis(samples, order, 0)
    swts = np.take_along_axis(weights, order, 0)
    cum = np.cumsum(swts, axis=0)
    half = 0.5 * cum[-1]
    pick = np.argmax(cum >= half[None], axis=0)
    out = np.take_along_axis(svals, pick[None], 0)[0]
    return out.astype(values.dtype)


def diffusion_solve(plane, solve_mask, usable, tol, max_iter):
    """Red-black Gauss-Seidel solve of the masked Laplace system.

    plane: float64 (H, W); values at ~solve_mask are Dirichlet data, values at
    solve_mask are the initial guess and get relaxed in place.
    usable: bool (4, H, W); usable[d, y, x] says the neighbor one step in
    direction d (0=left 1=right 2=up 3=down) participates in (y, x)'s stencil.
    Cells with zero usable neighbors keep their initial value.
    Returns (plane, sweeps, last_max_update).
    """
    p = plane.astype(np.float64).copy()
    h, w = p.shape
    yy, xx = np.mgrid[0:h, 0:w]
    parity = (xx + yy) & 1
    colors = (solve_mask & (parity == 0), solve_mask & (parity == 1))

    cnt = usable[0].astype(np.float64)
    for d in range(1, 4):
        cnt = cnt + usable[d]

    def half_sweep(cells):
        acc = np.zeros((h, w))
        nb = np.empty((h, w))
        # left, right, up, down; accumulate in this fixed order
        nb[:, 0] = 0.0
        nb[:, 1:] = p[:, :-1]
        acc += np.where(usable[0], nb, 0.0)
        nb[:, -1] = 0.0
        nb[:, :-1] = p[:, 1:]
        acc += np.where(usable[1], nb, 0.0)
        nb[0, :] = 0.0
        nb[1:, :] = p[:-1, :]
        acc += np.where(usable[2], nb, 0.0)
        nb[-1, :] = 0.0
        nb[:-1, :] = p[1:, :]
        acc += np.where(usable[3], nb, 0.0)
        newv = np.where(cnt > 0, acc / np.maximum(cnt, 1.0), p)
        upd = cells & (cnt > 0)
        if not upd.any():
            return 0.0
        delta = np.abs(newv[upd] - p[upd]).max()
        p[upd] = newv[upd]
        return delta

    sweeps = 0
    delta = np.inf
    while sweeps < max_iter:
        d0 = half_sweep(colors[0])
        d1 = half_sweep(colors[1])
        sweeps += 1
        delta = max(d0, d1)
        if delta < tol:
            break
    return p, sweeps, delta


def rasterize(sx, sy, sz, colors, tris, width, height):
    """Z-buffered triangle fill with affine barycentric interpolation.

    sx, sy: float64 screen coordinates (pixel units, samples at integer
    coordinates); sz: float64 camera-space depth per vertex; colors float64
    (N, 3). Triangles are processed in order; equal-depth contested pixels
    keep the earlier triangle (strict less-than test). Boundary-inclusive
    edge test, so shared edges are claimed by both triangles.
    """
    img = np.zeros((height, width, 3))
    depth = np.full((height, width), np.inf)
    cover = np.zeros((height, width), dtype=bool)
    for t in range(tris.shape[0]):
        a, b, c = tris[t]
        x0, y0, z0 = sx[a], sy[a], sz[a]
        x1, y1, z1 = sx[b], sy[b], sz[b]
        x2, y2, z2 = sx[c], sy[c], sz[c]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        s = 1.0 if area > 0.0 else -1.0
        aa = area * s
        xmin = max(0, int(math.ceil(min(x0, x1, x2) - 1e-6)))
        xmax = min(width - 1, int(math.floor(max(x0, x1, x2) + 1e-6)))
        ymin = max(0, int(math.ceil(min(y0, y1, y2) - 1e-6)))
        ymax = min(height - 1, int(math.floor(max(y0, y1, y2) + 1e-6)))
        if xmin > xmax or ymin > ymax:
            continue
        px, py = np.meshgrid(
            np.arange(xmin, xmax + 1, dtype=np.float64),
            np.arange(ymin, ymax + 1, dtype=np.float64),
        )
        w0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) * s
        w1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) * s
        w2 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) * s
        eps = -1e-6 * aa  # tolerate float round-trip error at shared borders
        inside = (w0 >= eps) & (w1 >= eps) & (w2 >= eps)
        if not inside.any():
            continue
        z = (w0 * z0 + w1 * z1 + w2 * z2) / aa
        zwin = depth[ymin : ymax + 1, xmin : xmax + 1]
        upd = inside & (z < zwin)
        if not upd.any():
            continue
        r = (w0 * colors[a, 0] + w1 * colors[b, 0] + w2 * colors[c, 0]) / aa
        g = (w0 * colors[a, 1] + w1 * colors[b, 1] + w2 * colors[c, 1]) / aa
        bl = (w0 * colors[a, 2] + w1 * colors[b, 2] + w2 * colors[c, 2]) / aa
        zwin[upd] = z[upd]
        iwin = img[ymin : ymax + 1, xmin : xmax + 1]
        iwin[..., 0][upd] = r[upd]
        iwin[..., 1][upd] = g[upd]
        iwin[..., 2][upd] = bl[upd]
        cover[ymin : ymax + 1, xmin : xmax + 1] |= upd
    return img, depth, cover
