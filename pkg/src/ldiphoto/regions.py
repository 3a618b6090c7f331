"""Synthesis/context region growing around a cut edge, flattening to image
patches, and merging synthesized pixels back into the LDI.

Region growth alternates one context ring (over live links, barred by the
foreground silhouette) and one synthesis ring (over lattice positions, barred
by claimed context positions) per iteration, context first. Positions are
exclusive between the two regions and within each region; ties resolve in
deterministic BFS order (pixels by id, positions by (y, x)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConsistencyError, InputError
from .ldi import DOWN, OPPOSITE, RIGHT, STEP, SilhouettePair
from .preprocess import detect_discontinuities, link_depth_edges


@dataclass
class RegionPair:
    """Synthesis slots plus the context pixels feeding one inpainting call."""

    edge_id: int
    level: int
    synthesis: set = field(default_factory=set)  # lattice positions
    context: set = field(default_factory=set)  # pixel ids
    seed_sources: dict = field(default_factory=dict)  # slot -> background pid
    silhouette: SilhouettePair = field(default_factory=SilhouettePair)

    @property
    def empty(self):
        return not self.synthesis

    @property
    def slot_order(self):
        return sorted(self.synthesis, key=lambda p: (p[1], p[0]))


@dataclass
class InpaintRequest:
    """Flattened rectangular view of one region pair.

    All planes share the patch rectangle anchored at (x0, y0). Color and
    disparity are zero at synthesis and excluded positions; the edge map marks
    farther-side discontinuity sites recomputed from the context disparities;
    seed planes carry per-slot initialization copied from the nearest
    background silhouette pixel. Backends must never read excluded positions.
    """

    x0: int
    y0: int
    color: np.ndarray  # (H, W, 3) float32 in [0, 1]
    disparity: np.ndarray  # (H, W) float32
    edges: np.ndarray  # (H, W) bool
    mask: np.ndarray  # (H, W) bool, synthesis slots
    excluded: np.ndarray  # (H, W) bool
    seed_color: np.ndarray  # (H, W, 3) float32
    seed_disparity: np.ndarray  # (H, W) float32

    @property
    def shape(self):
        return self.mask.shape


@dataclass
class SynthesizedValues:
    """Per-slot inpainting output in RegionPair.slot_order."""

    color: np.ndarray  # (S, 3) float32 in [0, 1]
    disparity: np.ndarray  # (S,) float32 in [0, 1]


def extract_regions(ldi, silhouettes, n_syn=40, n_ctx=100, dilate=5, edge_id=-1, level=0):
    """Grow the synthesis and context regions for one cut.

    Context starts at the background silhouette and follows live links for
    n_ctx rings, never entering foreground-silhouette pixels or claimed
    positions. Synthesis starts one step across the cut and grows over free
    lattice positions for n_syn rings. Afterwards the first `dilate` context
    rings (counted from the silhouette ring itself) convert into synthesis
    slots. Every slot's seed is its nearest background silhouette pixel
    (BFS distance over the slot set, ties to the smaller pixel id).
    """
    bg = sorted(silhouettes.background)
    if not bg:
        return RegionPair(edge_id=edge_id, level=level, silhouette=silhouettes)
    fg = silhouettes.foreground
    w, h = ldi.width, ldi.height

    ctx_ring: dict[int, int] = {}
    ctx_pos: dict[tuple, int] = {}
    for b in bg:
        p = ldi.pos(b)
        if p not in ctx_pos:
            ctx_ring[b] = 0
            ctx_pos[p] = b

    syn_ring: dict[tuple, int] = {}
    for pid, d in sorted(silhouettes.open_directions):
        if pid not in silhouettes.background:
            continue
        x, y = ldi.pos(pid)
        dx, dy = STEP[d]
        q = (x + dx, y + dy)
        if 0 <= q[0] < w and 0 <= q[1] < h and q not in ctx_pos and q not in syn_ring:
            syn_ring[q] = 0

    ctx_frontier = sorted(ctx_ring)
    syn_frontier = sorted(syn_ring, key=lambda p: (p[1], p[0]))
    for ring in range(1, max(n_ctx, n_syn) + 1):
        if ring <= n_ctx and ctx_frontier:
            nxt = []
            for pid in ctx_frontier:
                for d in range(4):
                    q = ldi.link(pid, d)
                    if q is None or q in ctx_ring or q in fg:
                        continue
                    qp = ldi.pos(q)
                    if qp in ctx_pos or qp in syn_ring:
                        continue
                    ctx_ring[q] = ring
                    ctx_pos[qp] = q
                    nxt.append(q)
            ctx_frontier = sorted(nxt)
        if ring <= n_syn and syn_frontier:
            nxt = []
            for x, y in syn_frontier:
                for dx, dy in STEP:
                    q = (x + dx, y + dy)
                    if not (0 <= q[0] < w and 0 <= q[1] < h):
                        continue
                    if q in syn_ring or q in ctx_pos:
                        continue
                    syn_ring[q] = ring
                    nxt.append(q)
            syn_frontier = sorted(nxt, key=lambda p: (p[1], p[0]))

    converted = [pid for pid, ring in ctx_ring.items() if ring < dilate]
    context = set(ctx_ring) - set(converted)
    slots = set(syn_ring)
    slots.update(ldi.pos(pid) for pid in converted)

    seeds = _assign_seeds(ldi, bg, slots)
    return RegionPair(
        edge_id=edge_id,
        level=level,
        synthesis=slots,
        context=context,
        seed_sources=seeds,
        silhouette=silhouettes,
    )


def _assign_seeds(ldi, bg_sorted, slots):
    """Multi-source BFS over the slot set; min (distance, source pid) wins."""
    seeds: dict[tuple, int] = {}
    if not slots:
        return seeds
    current: dict[tuple, int] = {}
    for b in bg_sorted:  # ascending pid: first write per position is minimal
        current.setdefault(ldi.pos(b), b)
    visited = set(current)
    while current and len(seeds) < len(slots):
        for pos, src in current.items():
            if pos in slots and pos not in seeds:
                seeds[pos] = src
        nxt: dict[tuple, int] = {}
        for (x, y), src in current.items():
            for dx, dy in STEP:
                q = (x + dx, y + dy)
                if q in visited or q not in slots:
                    continue
                prev = nxt.get(q)
                if prev is None or src < prev:
                    nxt[q] = src
        visited.update(nxt)
        current = nxt
    if len(seeds) != len(slots):
        missing = sorted(set(slots) - set(seeds))[:5]
        raise ConsistencyError(f"unseedable synthesis slots, e.g. {missing}")
    return seeds


def flatten_regions(ldi, region, threshold=0.04):
    """Rasterize a region pair into the minimal bounding patch.

    Synthesis and excluded positions hold zeros in the color/disparity planes;
    the context edge map is recomputed from the context disparity plane so it
    always describes the layer actually present in the patch.
    """
    positions = [ldi.pos(pid) for pid in sorted(region.context)]
    all_pos = positions + list(region.synthesis)
    if not all_pos:
        zero = np.zeros((0, 0), dtype=np.float32)
        return InpaintRequest(
            x0=0,
            y0=0,
            color=np.zeros((0, 0, 3), dtype=np.float32),
            disparity=zero,
            edges=zero.astype(bool),
            mask=zero.astype(bool),
            excluded=zero.astype(bool),
            seed_color=np.zeros((0, 0, 3), dtype=np.float32),
            seed_disparity=zero.copy(),
        )
    xs = [p[0] for p in all_pos]
    ys = [p[1] for p in all_pos]
    x0, y0 = min(xs), min(ys)
    pw, ph = max(xs) - x0 + 1, max(ys) - y0 + 1

    color = np.zeros((ph, pw, 3), dtype=np.float32)
    disparity = np.zeros((ph, pw), dtype=np.float32)
    ctx_mask = np.zeros((ph, pw), dtype=bool)
    mask = np.zeros((ph, pw), dtype=bool)
    seed_color = np.zeros((ph, pw, 3), dtype=np.float32)
    seed_disparity = np.zeros((ph, pw), dtype=np.float32)

    for pid in sorted(region.context):
        x, y = ldi.pos(pid)
        px, py = x - x0, y - y0
        if ctx_mask[py, px]:
            raise ConsistencyError(f"two context pixels share position ({x},{y})")
        ctx_mask[py, px] = True
        color[py, px] = ldi.color(pid).astype(np.float32) / 255.0
        disparity[py, px] = ldi.disparity(pid)

    for (x, y) in region.synthesis:
        px, py = x - x0, y - y0
        mask[py, px] = True
        src = region.seed_sources[(x, y)]
        seed_color[py, px] = ldi.color(src).astype(np.float32) / 255.0
        seed_disparity[py, px] = ldi.disparity(src)

    if (mask & ctx_mask).any():
        raise ConsistencyError("synthesis slot coincides with a context position")

    edges, _ = detect_discontinuities(disparity, threshold, valid=ctx_mask)
    return InpaintRequest(
        x0=x0,
        y0=y0,
        color=color,
        disparity=disparity,
        edges=edges,
        mask=mask,
        excluded=~(ctx_mask | mask),
        seed_color=seed_color,
        seed_disparity=seed_disparity,
    )


def dump_region_overlay(ldi, region, path, base=None):
    """Debug PNG: context pixels blue, synthesis slots red over the scene."""
    from .fileio import write_color_png

    img = np.zeros((ldi.height, ldi.width, 3), dtype=np.uint8) if base is None else np.asarray(base).copy()
    for pid in region.context:
        x, y = ldi.pos(pid)
        img[y, x] = (64, 64, 255)
    for x, y in region.synthesis:
        img[y, x] = (255, 64, 64)
    write_color_png(path, img)
    return img


def merge_synthesized(ldi, region, values, edge_sites, threshold, min_edge_length=10):
    """Add one pixel per synthesis slot and wire it into the LDI.

    New pixels link to adjacent new pixels and, through the directions freed
    by the cut, to the background silhouette — but never across an inpainted
    edge (edge-mark mismatch with a disparity jump above the threshold).
    Returns the depth edges induced by the inpainted edge map, grouped with
    the same junction/length rules as detection; they are born unlinked.
    """
    slots = region.slot_order
    if not slots:
        return []
    if values.color.shape[0] != len(slots) or values.disparity.shape[0] != len(slots):
        raise InputError(
            f"expected values for {len(slots)} slots, got {values.color.shape[0]}"
        )
    if not (np.isfinite(values.color).all() and np.isfinite(values.disparity).all()):
        raise InputError("synthesized values contain non-finite entries")

    marks = set(edge_sites)
    new_pid: dict[tuple, int] = {}
    for i, (x, y) in enumerate(slots):
        c = np.clip(np.rint(values.color[i] * 255.0), 0, 255).astype(np.uint8)
        d = float(np.clip(values.disparity[i], 0.0, 1.0))
        new_pid[(x, y)] = ldi.add_pixel(x, y, c, d)

    def blocked(pa, pb):
        if ((pa in marks) == (pb in marks)):
            return False
        da = ldi.disparity(new_pid[pa]) if pa in new_pid else None
        db = ldi.disparity(new_pid[pb]) if pb in new_pid else None
        if da is None or db is None:
            return False
        return abs(da - db) > threshold

    # silhouette attachments first: they own the freed link slots
    for pid, d in sorted(region.silhouette.open_directions):
        if pid not in region.silhouette.background or not ldi.alive(pid):
            continue
        x, y = ldi.pos(pid)
        dx, dy = STEP[d]
        q = (x + dx, y + dy)
        if q not in new_pid or ldi.link(pid, d) is not None:
            continue
        b = new_pid[q]
        if ldi.link(b, OPPOSITE[d]) is not None:
            continue  # another stacked silhouette pixel claimed it first
        mark_self = (x, y) in marks
        mark_q = q in marks
        if mark_self != mark_q and abs(ldi.disparity(pid) - ldi.disparity(b)) > threshold:
            continue
        ldi.set_link(pid, b, d)

    cut_pairs = []  # ((far_pos, near_pos), (far_pid, near_pid))
    for (x, y) in slots:
        a = new_pid[(x, y)]
        for d in (RIGHT, DOWN):
            dx, dy = STEP[d]
            q = (x + dx, y + dy)
            if q not in new_pid:
                continue
            b = new_pid[q]
            if blocked((x, y), q):
                da, db = ldi.disparity(a), ldi.disparity(b)
                if da <= db:
                    cut_pairs.append((((x, y), q), (a, b)))
                else:
                    cut_pairs.append(((q, (x, y)), (b, a)))
                continue
            if ldi.link(a, d) is None and ldi.link(b, OPPOSITE[d]) is None:
                ldi.set_link(a, b, d)

    if not cut_pairs:
        return []
    bmap = np.zeros((ldi.height, ldi.width), dtype=bool)
    for (far, _near), _pids in cut_pairs:
        bmap[far[1], far[0]] = True
    edges = link_depth_edges(
        bmap,
        pairs=[pp for pp, _ in cut_pairs],
        min_edge_length=min_edge_length,
    )
    for edge in edges:
        edge.level = region.level + 1
        edge.pid_pairs = []
        site_set = set(edge.sites)
        for (far, near), pids in cut_pairs:
            if far in site_set:
                edge.pid_pairs.append(pids)
    return edges
