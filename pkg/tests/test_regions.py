import numpy as np
import pytest

from ldiphoto import (
    SilhouettePair,
    cut_edge,
    detect_discontinuities,
    extract_regions,
    flatten_regions,
    lift_image,
    link_depth_edges,
)

from oracles import extract_regions_reference
from scenes import random_layered_scene, square_scene


def cut_scene(color, disp, threshold=0.04, min_edge_length=1, edge_index=0):
    ldi = lift_image(color, disp)
    bmap, pairs = detect_discontinuities(disp, threshold)
    edges = link_depth_edges(bmap, pairs, min_edge_length=min_edge_length)
    sil = cut_edge(ldi, edges[edge_index], threshold)
    return ldi, edges[edge_index], sil


def vertical_cut_scene(h=64, w=64, col=20, height=8, top=28):
    """Open vertical cut of the given height in an otherwise flat plane."""
    color = np.zeros((h, w, 3), dtype=np.uint8)
    disp = np.full((h, w), 0.2, dtype=np.float32)
    disp[top : top + height, col:] = 0.8
    return color, disp


class TestExtractRegions:
    def test_empty_silhouettes_give_empty_regions(self):
        color, disp, _ = square_scene(h=16, w=16, x0=4, y0=4, x1=12, y1=12)
        ldi = lift_image(color, disp)
        region = extract_regions(ldi, SilhouettePair())
        assert region.empty and not region.context

    def test_matches_oracle_on_straight_cut(self):
        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        for n_syn, n_ctx, dilate in [(3, 3, 0), (3, 3, 2), (8, 5, 1), (1, 1, 0)]:
            region = extract_regions(ldi, sil, n_syn=n_syn, n_ctx=n_ctx, dilate=dilate)
            slots, ctx, seeds = extract_regions_reference(ldi, sil, n_syn, n_ctx, dilate)
            assert region.synthesis == slots
            assert region.context == ctx
            assert region.seed_sources == seeds

    def test_dilation_converts_exactly_the_first_rings(self):
        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        base = extract_regions(ldi, sil, n_syn=3, n_ctx=3, dilate=0)
        dil = extract_regions(ldi, sil, n_syn=3, n_ctx=3, dilate=2)
        converted_ctx = base.context - dil.context
        grown_syn = dil.synthesis - base.synthesis
        assert len(converted_ctx) == len(grown_syn) > 0
        assert {p for p in ([ldi.pos(pid) for pid in converted_ctx])} == grown_syn

    def test_monotone_in_iterations(self):
        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        sizes_syn = [
            len(extract_regions(ldi, sil, n_syn=k, n_ctx=5, dilate=0).synthesis)
            for k in range(1, 12)
        ]
        sizes_ctx = [
            len(extract_regions(ldi, sil, n_syn=5, n_ctx=k, dilate=0).context)
            for k in range(1, 12)
        ]
        assert sizes_syn == sorted(sizes_syn)
        assert sizes_ctx == sorted(sizes_ctx)

    def test_synthesis_disjoint_from_context_positions(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            color, disp = random_layered_scene(rng, 16, 40)
            ldi = lift_image(color, disp)
            bmap, pairs = detect_discontinuities(disp, 0.04)
            edges = link_depth_edges(bmap, pairs, min_edge_length=3)
            if not edges:
                continue
            sil = cut_edge(ldi, edges[0], 0.04)
            region = extract_regions(ldi, sil, n_syn=6, n_ctx=8, dilate=2)
            ctx_pos = {ldi.pos(pid) for pid in region.context}
            assert not (region.synthesis & ctx_pos)

    def test_determinism(self):
        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        a = extract_regions(ldi, sil, n_syn=7, n_ctx=9, dilate=3)
        b = extract_regions(ldi, sil, n_syn=7, n_ctx=9, dilate=3)
        assert a.synthesis == b.synthesis
        assert a.context == b.context
        assert a.seed_sources == b.seed_sources

    def test_randomized_scenes_match_oracle(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 25:
            color, disp = random_layered_scene(rng, 16, 48)
            ldi = lift_image(color, disp)
            bmap, pairs = detect_discontinuities(disp, 0.04)
            edges = link_depth_edges(bmap, pairs, min_edge_length=3)
            if not edges:
                continue
            sil = cut_edge(ldi, edges[int(rng.integers(len(edges)))], 0.04)
            if sil.empty:
                continue
            n_syn = int(rng.integers(1, 12))
            n_ctx = int(rng.integers(1, 16))
            dilate = int(rng.integers(0, 6))
            region = extract_regions(ldi, sil, n_syn=n_syn, n_ctx=n_ctx, dilate=dilate)
            slots, ctx, seeds = extract_regions_reference(ldi, sil, n_syn, n_ctx, dilate)
            assert region.synthesis == slots
            assert region.context == ctx
            assert region.seed_sources == seeds
            checked += 1


class TestFlatten:
    def test_empty_region_zero_area(self):
        color, disp, _ = square_scene(h=16, w=16, x0=4, y0=4, x1=12, y1=12)
        ldi = lift_image(color, disp)
        req = flatten_regions(ldi, extract_regions(ldi, SilhouettePair()))
        assert req.shape == (0, 0)

    def test_minimal_bounding_patch_and_single_mask_bit(self):
        # hand construction: 3x3 context block, one slot just right of it
        from ldiphoto import RegionPair

        color, disp = vertical_cut_scene(h=16, w=16)
        ldi = lift_image(color, disp)
        ctx = {ldi.pixels_at(x, y)[0] for x in (2, 3, 4) for y in (4, 5, 6)}
        seed = ldi.pixels_at(4, 5)[0]
        region = RegionPair(
            edge_id=0, level=0, synthesis={(5, 5)}, context=ctx,
            seed_sources={(5, 5): seed},
        )
        req = flatten_regions(ldi, region)
        assert req.mask.sum() == 1
        assert req.shape == (3, 4)  # rows 4..6, cols 2..5: minimal box
        assert (req.x0, req.y0) == (2, 4)

    def test_planes_zeroed_on_mask_and_excluded_flagged(self):
        color, disp, _ = square_scene(h=32, w=32, x0=10, y0=10, x1=22, y1=22)
        ldi, edge, sil = cut_scene(color, disp, min_edge_length=10)
        region = extract_regions(ldi, sil, n_syn=4, n_ctx=4, dilate=1)
        req = flatten_regions(ldi, region)
        assert req.color[req.mask].sum() == 0
        assert req.disparity[req.mask].sum() == 0
        assert req.color[req.excluded].sum() == 0
        assert not (req.mask & req.excluded).any()
        assert req.mask.sum() == len(region.synthesis)
        ctx_count = (~req.mask & ~req.excluded).sum()
        assert ctx_count == len(region.context)

    def test_seeds_copied_from_nearest_silhouette_pixel(self):
        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        region = extract_regions(ldi, sil, n_syn=2, n_ctx=2, dilate=0)
        req = flatten_regions(ldi, region)
        for (x, y), src in region.seed_sources.items():
            px, py = x - req.x0, y - req.y0
            assert req.seed_disparity[py, px] == ldi.disparity(src)
            assert np.allclose(
                req.seed_color[py, px], ldi.color(src).astype(np.float32) / 255.0
            )

    def test_context_edge_map_marks_farther_side_of_context_jumps(self):
        # scene with a second discontinuity inside the context area
        h = w = 48
        color = np.zeros((h, w, 3), dtype=np.uint8)
        disp = np.full((h, w), 0.1, dtype=np.float32)
        disp[:, 24:] = 0.5  # mid plane on the right
        disp[8:16, 36:] = 0.9  # near strip whose cut we extract
        ldi = lift_image(color, disp)
        bmap, pairs = detect_discontinuities(disp, 0.04)
        edges = link_depth_edges(bmap, pairs, min_edge_length=5)
        near_edge = next(
            e for e in edges if any(36 <= x for x, _y in e.sites)
        )
        sil = cut_edge(ldi, near_edge, 0.04)
        region = extract_regions(ldi, sil, n_syn=3, n_ctx=40, dilate=0)
        req = flatten_regions(ldi, region, threshold=0.04)
        marked = {(x + req.x0, y + req.y0) for y, x in zip(*np.nonzero(req.edges))}
        # the 0.1|0.5 boundary crosses the context: farther (0.1) side marked
        assert any(x == 23 for x, _ in marked)
        assert all(disp[y, x] <= 0.5 for x, y in marked)


class TestMerge:
    def test_empty_region_no_mutation_empty_edges(self):
        from ldiphoto import RegionPair, SilhouettePair, SynthesizedValues, merge_synthesized

        color, disp = vertical_cut_scene(h=8, w=8)
        ldi = lift_image(color, disp)
        before = ldi.to_bytes()
        region = RegionPair(edge_id=0, level=0, silhouette=SilhouettePair())
        values = SynthesizedValues(
            color=np.zeros((0, 3), dtype=np.float32),
            disparity=np.zeros(0, dtype=np.float32),
        )
        out = merge_synthesized(ldi, region, values, set(), threshold=0.04)
        assert out == []
        assert ldi.to_bytes() == before

    def test_missing_values_rejected(self):
        from ldiphoto import DiffusionBackend, InputError, SynthesizedValues, merge_synthesized
        from ldiphoto.regions import extract_regions

        color, disp = vertical_cut_scene()
        ldi, edge, sil = cut_scene(color, disp)
        region = extract_regions(ldi, sil, n_syn=2, n_ctx=2, dilate=0)
        short = SynthesizedValues(
            color=np.zeros((1, 3), dtype=np.float32), disparity=np.zeros(1, dtype=np.float32)
        )
        with pytest.raises(InputError):
            merge_synthesized(ldi, region, short, set(), threshold=0.04)


def test_double_role_pixel_lands_in_background_only():
    # three vertical slabs 0.9 | 0.5 | 0.1: the 0.5 column is farther than the
    # 0.9 side and nearer than the 0.1 side within one linked edge
    color = np.zeros((6, 9, 3), dtype=np.uint8)
    disp = np.full((6, 9), 0.9, dtype=np.float32)
    disp[:, 3:6] = 0.5
    disp[:, 6:] = 0.1
    ldi = lift_image(color, disp)
    bmap, pairs = detect_discontinuities(disp, 0.04)
    edges = link_depth_edges(bmap, pairs, min_edge_length=1)
    for edge in edges:
        sil = cut_edge(ldi, edge, 0.04)
        assert not (sil.foreground & sil.background)
        mid = {ldi.pixels_at(x, y)[0] for x in (3, 6) for y in range(6)}
        doubled = {p for p in mid if p in sil.background}
        for p in doubled:
            assert p not in sil.foreground
    ldi.validate()


def test_multilayer_extraction_matches_oracle_mid_pipeline():
    """Oracle equality on merged (multi-layer) LDI states, not just fresh ones."""
    from collections import deque

    from ldiphoto import DiffusionBackend
    from ldiphoto.inpaint import inpaint_stage_order
    from ldiphoto.regions import SynthesizedValues

    from scenes import random_layered_scene

    rng = np.random.default_rng(99)
    backend = DiffusionBackend()
    checked = 0
    runs = 0
    while checked < 40 and runs < 60:
        runs += 1
        color, disp = random_layered_scene(rng, 16, 48)
        ldi = lift_image(color, disp)
        bmap, pairs = detect_discontinuities(disp, 0.04)
        min_len = int(rng.integers(3, 9))
        edges = link_depth_edges(bmap, pairs, min_edge_length=min_len)
        queue = deque(sorted(edges, key=lambda e: e.id))
        next_id = max((e.id for e in edges), default=-1) + 1
        n_syn = int(rng.integers(1, 10))
        n_ctx = int(rng.integers(1, 16))
        dil = int(rng.integers(0, 6))
        while queue:
            edge = queue.popleft()
            if edge.level >= 8:
                continue
            sil = cut_edge(ldi, edge, 0.04)
            ldi.validate()
            if sil.empty:
                continue
            region = extract_regions(
                ldi, sil, n_syn=n_syn, n_ctx=n_ctx, dilate=dil,
                edge_id=edge.id, level=edge.level,
            )
            slots, ctx, seeds = extract_regions_reference(ldi, sil, n_syn, n_ctx, dil)
            assert region.synthesis == slots
            assert region.context == ctx
            assert region.seed_sources == seeds
            checked += 1
            if region.empty:
                continue
            req = flatten_regions(ldi, region, threshold=0.04)
            res = inpaint_stage_order(req, backend)
            order = region.slot_order
            sy = np.asarray([p[1] - req.y0 for p in order])
            sx = np.asarray([p[0] - req.x0 for p in order])
            vals = SynthesizedValues(color=res.color[sy, sx], disparity=res.disparity[sy, sx])
            sites = {
                (int(x + req.x0), int(y + req.y0))
                for y, x in zip(*np.nonzero(res.edges))
            }
            from ldiphoto import merge_synthesized as merge

            for ne in merge(ldi, region, vals, sites, threshold=0.04, min_edge_length=min_len):
                ne.id = next_id
                next_id += 1
                queue.append(ne)
            ldi.validate()
    assert checked >= 40


def test_degenerate_region_configs_match_oracle():
    from scenes import random_layered_scene

    rng = np.random.default_rng(123)
    cases = [(0, 5, 0), (5, 0, 0), (0, 0, 0), (3, 2, 5), (1, 1, 5), (0, 3, 5)]
    checked = 0
    while checked < 18:
        color, disp = random_layered_scene(rng, 16, 40)
        ldi = lift_image(color, disp)
        bmap, pairs = detect_discontinuities(disp, 0.04)
        edges = link_depth_edges(bmap, pairs, min_edge_length=3)
        if not edges:
            continue
        sil = cut_edge(ldi, edges[0], 0.04)
        if sil.empty:
            continue
        n_syn, n_ctx, dil = cases[checked % len(cases)]
        region = extract_regions(ldi, sil, n_syn=n_syn, n_ctx=n_ctx, dilate=dil)
        slots, ctx, seeds = extract_regions_reference(ldi, sil, n_syn, n_ctx, dil)
        assert region.synthesis == slots
        assert region.context == ctx
        assert region.seed_sources == seeds
        checked += 1
