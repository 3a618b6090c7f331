# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels.

Semantics match ``pyref`` exactly (same accumulation order, float64
intermediates); see that module for the contract of each function.
"""

import math

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, floor, ceil, fabs, INFINITY

cnp.import_array()


def bilateral_median(values, int window, double sigma_spatial, double sigma_intensity):
    cdef int h = values.shape[0]
    cdef int w = values.shape[1]
    cdef int r = window // 2
    cdef int k = window * window
    cdef cnp.ndarray[cnp.float64_t, ndim=2] v64 = np.ascontiguousarray(values, dtype=np.float64)
    out64 = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] v = v64
    cdef double[:, ::1] out = out64

    # spatial weights in window scan order (dy outer, dx inner), same as pyref
    spat_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] spatial = spat_arr
    cdef int dy, dx, i = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            spatial[i] = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma_spatial * sigma_spatial))
            i += 1

    sv_arr = np.empty(k, dtype=np.float64)
    sw_arr = np.empty(k, dtype=np.float64)
    cdef double[::1] sv = sv_arr
    cdef double[::1] sw = sw_arr
    cdef double inv2si = 1.0 / (2.0 * sigma_intensity * sigma_intensity)
    cdef int y, x, n, j, m
    cdef int yy, xx
    cdef double center, val, wt, total, half, cum, d
    cdef double tv, tw

    for y in range(h):
        for x in range(w):
            center = v[y, x]
            n = 0
            i = 0
            for dy in range(-r, r + 1):
                yy = y + dy
                for dx in range(-r, r + 1):
                    xx = x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        val = v[yy, xx]
                        d = val - center
                        wt = spatial[i] * exp(-(d * d) * inv2si)
                        # stable insertion sort by value, scan order preserved on ties
                        j = n
                        while j > 0 and sv[j - 1] > val:
                            sv[j] = sv[j - 1]
                            sw[j] = sw[j - 1]
                            j -= 1
                        sv[j] = val
                        sw[j] = wt
                        n += 1
                    i += 1
            total = 0.0
            for j in range(n):
                total += sw[j]
            half = 0.5 * total
            cum = 0.0
            for j in range(n):
                cum += sw[j]
                if cum >= half:
                    out[y, x] = sv[j]
                    break
    return out64.astype(values.dtype)


def diffusion_solve(plane, solve_mask, usable, double tol, int max_iter):
    cdef int h = plane.shape[0]
    cdef int w = plane.shape[1]
    p_arr = np.array(plane, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] p = p_arr
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m8 = np.ascontiguousarray(solve_mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] u8 = np.ascontiguousarray(usable, dtype=np.uint8)
    cdef unsigned char[:, ::1] mask = m8
    cdef unsigned char[:, :, ::1] u = u8

    cdef int sweeps = 0, color, y, x, cnt
    cdef double acc, newv, d0, d1, delta, dmax
    delta = INFINITY
    while sweeps < max_iter:
        dmax = 0.0
        for color in range(2):
            d0 = 0.0
            for y in range(h):
                for x in range(w):
                    if mask[y, x] and ((x + y) & 1) == color:
                        acc = 0.0
                        cnt = 0
                        if u[0, y, x]:
                            acc += p[y, x - 1]
                            cnt += 1
                        if u[1, y, x]:
                            acc += p[y, x + 1]
                            cnt += 1
                        if u[2, y, x]:
                            acc += p[y - 1, x]
                            cnt += 1
                        if u[3, y, x]:
                            acc += p[y + 1, x]
                            cnt += 1
                        if cnt > 0:
                            newv = acc / cnt
                            if fabs(newv - p[y, x]) > d0:
                                d0 = fabs(newv - p[y, x])
                            p[y, x] = newv
            if d0 > dmax:
                dmax = d0
        sweeps += 1
        delta = dmax
        if delta < tol:
            break
    return p_arr, sweeps, delta


def rasterize(sx, sy, sz, colors, tris, int width, int height):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x_ = np.ascontiguousarray(sx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y_ = np.ascontiguousarray(sy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z_ = np.ascontiguousarray(sz, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] col = np.ascontiguousarray(colors, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] tr = np.ascontiguousarray(tris, dtype=np.int64)

    img_arr = np.zeros((height, width, 3), dtype=np.float64)
    depth_arr = np.full((height, width), np.inf, dtype=np.float64)
    cover_arr = np.zeros((height, width), dtype=np.uint8)
    cdef double[:, :, ::1] img = img_arr
    cdef double[:, ::1] depth = depth_arr
    cdef unsigned char[:, ::1] cover = cover_arr

    cdef Py_ssize_t t, a, b, c
    cdef double x0, y0, z0, x1, y1, z1, x2, y2, z2
    cdef double area, s, aa, w0, w1, w2, z, mn, mx, eps
    cdef int xmin, xmax, ymin, ymax, px, py
    for t in range(tr.shape[0]):
        a = tr[t, 0]
        b = tr[t, 1]
        c = tr[t, 2]
        x0 = x_[a]; y0 = y_[a]; z0 = z_[a]
        x1 = x_[b]; y1 = y_[b]; z1 = z_[b]
        x2 = x_[c]; y2 = y_[c]; z2 = z_[c]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        s = 1.0 if area > 0.0 else -1.0
        aa = area * s
        mn = x0
        if x1 < mn: mn = x1
        if x2 < mn: mn = x2
        mx = x0
        if x1 > mx: mx = x1
        if x2 > mx: mx = x2
        xmin = <int>ceil(mn - 1e-6)
        if xmin < 0: xmin = 0
        xmax = <int>floor(mx + 1e-6)
        if xmax > width - 1: xmax = width - 1
        mn = y0
        if y1 < mn: mn = y1
        if y2 < mn: mn = y2
        mx = y0
        if y1 > mx: mx = y1
        if y2 > mx: mx = y2
        ymin = <int>ceil(mn - 1e-6)
        if ymin < 0: ymin = 0
        ymax = <int>floor(mx + 1e-6)
        if ymax > height - 1: ymax = height - 1
        if xmin > xmax or ymin > ymax:
            continue
        eps = -1e-6 * aa
        for py in range(ymin, ymax + 1):
            for px in range(xmin, xmax + 1):
                w0 = ((x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)) * s
                if w0 < eps:
                    continue
                w1 = ((x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)) * s
                if w1 < eps:
                    continue
                w2 = ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) * s
                if w2 < eps:
                    continue
                z = (w0 * z0 + w1 * z1 + w2 * z2) / aa
                if z < depth[py, px]:
                    depth[py, px] = z
                    img[py, px, 0] = (w0 * col[a, 0] + w1 * col[b, 0] + w2 * col[c, 0]) / aa
                    img[py, px, 1] = (w0 * col[a, 1] + w1 * col[b, 1] + w2 * col[c, 1]) / aa
                    img[py, px, 2] = (w0 * col[a, 2] + w1 * col[b, 2] + w2 * col[c, 2]) / aa
                    cover[py, px] = 1
    return img_arr, depth_arr, cover_arr.view(bool)
