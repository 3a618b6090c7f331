"""Depth-map preparation: normalization, sharpening, and depth-edge linking.

All spatial parameters (filter window, minimum edge length) are tuned for
images around 1024 px on the long side; `scaled_min_edge_length` applies the
assumed-linear adjustment for other sizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, InputError

_NEIGHBORS8 = tuple(
    (dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dx, dy) != (0, 0)
)


@dataclass
class DepthEdge:
    """One linked chain of depth-discontinuity sites.

    sites are path-ordered (endpoint to endpoint; loops start at the
    topmost-leftmost site). cut_pairs hold ((far_x, far_y), (near_x, near_y))
    position pairs whose disparity difference exceeded the threshold, far side
    first (the marked side). pid_pairs, when set, pin the exact pixel pairs
    (far, near) of a recursion-level edge. level counts inpainting recursion
    depth, 0 for edges detected on the input.
    """

    id: int
    sites: list = field(default_factory=list)
    cut_pairs: list = field(default_factory=list)
    pid_pairs: list | None = None
    level: int = 0

    def __len__(self):
        return len(self.sites)


def normalize_disparity(values, mode="disparity"):
    """Map the input affinely onto [0, 1] disparity.

    mode="depth" converts via 1/depth first (depths must be positive and
    finite). A constant input maps to all 0.5.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-D map, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError("map contains non-finite values")
    if mode == "depth":
        if arr.min() <= 0.0:
            raise InputError("depths must be positive")
        arr = 1.0 / arr
    elif mode != "disparity":
        raise ConfigError(f"unknown normalize mode {mode!r}")
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.full(arr.shape, 0.5, dtype=np.float32)
    return ((arr - lo) / (hi - lo)).astype(np.float32)


def bilateral_median_filter(disparity, window=7, sigma_spatial=4.0, sigma_intensity=0.5):
    """Edge-aware weighted-median filter of a disparity map.

    Sample q in the window around p weighs
    exp(-|p-q|^2 / 2*ss^2) * exp(-(d(p)-d(q))^2 / 2*si^2); the output is the
    weighted median of the (border-clipped) window. Output values are always
    drawn from the input window, so plateaus survive untouched.
    """
    if window % 2 == 0 or window < 1:
        raise ConfigError(f"window must be odd and positive, got {window}")
    if sigma_spatial <= 0 or sigma_intensity <= 0:
        raise ConfigError("filter sigmas must be positive")
    arr = np.asarray(disparity, dtype=np.float32)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-D map, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InputError("map contains non-finite values")
    return _kernels.bilateral_median(arr, window, sigma_spatial, sigma_intensity)


def detect_discontinuities(disparity, threshold, valid=None):
    """Threshold 4-neighbor disparity differences.

    Returns (binary_map, pairs). The farther pixel of each exceeding pair is
    marked on the binary map, and the pair is recorded far side first.
    Horizontal pairs come first in row-major order, then vertical ones.
    `valid` restricts detection to pairs whose two endpoints are both set.
    """
    if threshold <= 0:
        raise ConfigError(f"threshold must be positive, got {threshold}")
    d = np.asarray(disparity, dtype=np.float32)
    h, w = d.shape
    bmap = np.zeros((h, w), dtype=bool)
    pairs = []

    def scan(a_idx, b_idx):
        da = d[a_idx]
        db = d[b_idx]
        hit = np.abs(da.astype(np.float64) - db.astype(np.float64)) > threshold
        if valid is not None:
            hit &= valid[a_idx] & valid[b_idx]
        ys, xs = np.nonzero(hit)
        return ys, xs, da[hit] <= db[hit]  # True: a side is farther

    ys, xs, a_far = scan((slice(None), slice(0, w - 1)), (slice(None), slice(1, w)))
    for y, x, af in zip(ys.tolist(), xs.tolist(), a_far.tolist()):
        far, near = ((x, y), (x + 1, y)) if af else ((x + 1, y), (x, y))
        bmap[far[1], far[0]] = True
        pairs.append((far, near))
    ys, xs, a_far = scan((slice(0, h - 1), slice(None)), (slice(1, h), slice(None)))
    for y, x, af in zip(ys.tolist(), xs.tolist(), a_far.tolist()):
        far, near = ((x, y), (x, y + 1)) if af else ((x, y + 1), (x, y))
        bmap[far[1], far[0]] = True
        pairs.append((far, near))
    return bmap, pairs


def _marked_neighbor_count(bmap):
    h, w = bmap.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.int32)
    padded[1:-1, 1:-1] = bmap
    count = np.zeros((h, w), dtype=np.int32)
    for dx, dy in _NEIGHBORS8:
        count += padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
    return count


def _order_component(component):
    """Path-order a component whose sites all have <= 2 neighbors."""
    sites = set(component)
    degree = {}
    for x, y in sites:
        degree[(x, y)] = sum((x + dx, y + dy) in sites for dx, dy in _NEIGHBORS8)
    endpoints = sorted(p for p, deg in degree.items() if deg <= 1)
    start = endpoints[0] if endpoints else min(component, key=lambda p: (p[1], p[0]))
    ordered = [start]
    seen = {start}
    cur = start
    while True:
        x, y = cur
        nxt = None
        for dx, dy in _NEIGHBORS8:
            q = (x + dx, y + dy)
            if q in sites and q not in seen:
                nxt = q
                break
        if nxt is None:
            break
        ordered.append(nxt)
        seen.add(nxt)
        cur = nxt
    return ordered


def link_depth_edges(bmap, pairs=None, min_edge_length=10):
    """Group discontinuity sites into linked depth edges.

    Junction sites (3 or more marked 8-neighbors) are dropped so edges never
    merge across junctions; the remaining 8-connected components with fewer
    than min_edge_length sites (isolated specks and dangling stubs alike) are
    removed. Components are ordered by their topmost-leftmost site; an edge
    owns the recorded pairs whose far (marked) site it contains.
    """
    bmap = np.asarray(bmap, dtype=bool)
    junctions = bmap & (_marked_neighbor_count(bmap) >= 3)
    keep = bmap & ~junctions

    h, w = keep.shape
    labels = np.full((h, w), -1, dtype=np.int64)
    components = []
    for y, x in zip(*np.nonzero(keep)):
        if labels[y, x] >= 0:
            continue
        comp = []
        stack = [(int(x), int(y))]
        labels[y, x] = len(components)
        while stack:
            cx, cy = stack.pop()
            comp.append((cx, cy))
            for dx, dy in _NEIGHBORS8:
                nx, ny = cx + dx, cy + dy
                if 0 <= nx < w and 0 <= ny < h and keep[ny, nx] and labels[ny, nx] < 0:
                    labels[ny, nx] = len(components)
                    stack.append((nx, ny))
        components.append(comp)

    components = [c for c in components if len(c) >= min_edge_length]
    components.sort(key=lambda c: min((y, x) for x, y in c))

    by_site = {}
    for i, comp in enumerate(components):
        for site in comp:
            by_site[site] = i

    edges = [
        DepthEdge(id=i, sites=_order_component(comp)) for i, comp in enumerate(components)
    ]
    for far, near in pairs or ():
        i = by_site.get(far)
        if i is not None:
            edges[i].cut_pairs.append((far, near))
    return edges


def scaled_min_edge_length(base, width, height, reference=1024):
    """Assumed-linear rescale of the minimum edge length with image size."""
    scale = max(width, height) / reference
    return max(1, int(round(base * scale)))
