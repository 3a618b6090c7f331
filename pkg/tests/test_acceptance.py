"""Acceptance gate: one test per criterion, each printing a PASS line.

Run `pytest tests/test_acceptance.py -v -s` for the per-criterion report.
The bilateral ramp-sharpening check is a documented expected failure (see
the repository notes): a single-pass self-weighted median is the identity on
a clean monotone ramp, so the stated width reduction cannot occur; the test
asserts the criterion faithfully and is marked strict-xfail.
"""

import json
import math
import time

import numpy as np
import pytest

import ldiphoto as lp
from ldiphoto.cli import main as cli_main
from ldiphoto.fileio import write_color_png, write_pfm
from ldiphoto.inpaint import usable_neighbors
from ldiphoto.mesh_render import depth_from_disparity

from oracles import (
    bilateral_median_reference,
    diffusion_direct_solve,
    extract_regions_reference,
    perceptual_reference,
    ssim_reference,
    style_reference,
    tv_reference,
    warp_coverage_reference,
)
from scenes import nested_scene, ramp_map, random_layered_scene, smooth_texture, square_scene, transition_width
from test_mesh_render import measure_shift


def report(line):
    print(f"\n[ACCEPTANCE] {line}")


def test_ldi_validator_1000_randomized_runs_under_60s():
    rng = np.random.default_rng(20260811)
    t0 = time.perf_counter()
    runs = 1000
    mutations = 0
    for _ in range(runs):
        color, disp = random_layered_scene(rng, 16, 64)
        filtered = lp.bilateral_median_filter(disp)
        bmap, pairs = lp.detect_discontinuities(filtered, 0.04)
        edges = lp.link_depth_edges(bmap, pairs, min_edge_length=int(rng.integers(4, 11)))
        ldi = lp.lift_image(color, filtered)
        ldi, rep = lp.run_pipeline(
            ldi,
            edges,
            lp.DiffusionBackend(),
            n_syn=int(rng.integers(1, 16)),
            n_ctx=int(rng.integers(1, 24)),
            dilate=int(rng.integers(0, 6)),
            validate_every_mutation=True,
        )
        mutations += 1 + 2 * rep.edges_processed
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"validator sweep took {elapsed:.1f}s"
    report(
        f"LDI validator: PASS - {runs} randomized runs, ~{mutations} validated "
        f"mutations, {elapsed:.1f}s (< 60s)"
    )


def _single_edge_scene(rng):
    h = int(rng.integers(16, 65))
    w = int(rng.integers(16, 65))
    color = smooth_texture(rng, h, w)
    near, far = 0.85, 0.15
    disp = np.full((h, w), far, dtype=np.float32)
    kind = int(rng.integers(0, 3))
    if kind == 0:  # vertical step
        col = int(rng.integers(4, w - 4))
        disp[:, col:] = near
    elif kind == 1:  # horizontal step
        row = int(rng.integers(4, h - 4))
        disp[row:, :] = near
    else:  # rectangle occluder strictly inside
        rw = int(rng.integers(8, max(9, w - 8)))
        rh = int(rng.integers(8, max(9, h - 8)))
        x0 = int(rng.integers(2, w - rw - 1))
        y0 = int(rng.integers(2, h - rh - 1))
        disp[y0 : y0 + rh, x0 : x0 + rw] = near
    return color, disp


def test_region_extraction_equals_oracle_on_200_scenes():
    rng = np.random.default_rng(7)
    corner_params = [
        (1, 1, 0), (1, 100, 5), (40, 1, 0), (40, 100, 5),
        (1, 1, 5), (40, 100, 0), (40, 1, 5), (1, 100, 0),
    ]
    seen_syn, seen_ctx, seen_dil = set(), set(), set()
    checked = 0
    while checked < 200:
        color, disp = _single_edge_scene(rng)
        ldi = lp.lift_image(color, disp)
        bmap, pairs = lp.detect_discontinuities(disp, 0.04)
        edges = lp.link_depth_edges(bmap, pairs, min_edge_length=10)
        if len(edges) != 1:
            continue
        sil = lp.cut_edge(ldi, edges[0], 0.04)
        if sil.empty:
            continue
        if checked < len(corner_params):
            n_syn, n_ctx, dilate = corner_params[checked]
        else:
            n_syn = int(rng.integers(1, 41))
            n_ctx = int(rng.integers(1, 101))
            dilate = int(rng.integers(0, 6))
        seen_syn.add(n_syn)
        seen_ctx.add(n_ctx)
        seen_dil.add(dilate)
        region = lp.extract_regions(ldi, sil, n_syn=n_syn, n_ctx=n_ctx, dilate=dilate)
        slots, ctx, seeds = extract_regions_reference(ldi, sil, n_syn, n_ctx, dilate)
        assert region.synthesis == slots
        assert region.context == ctx
        assert region.seed_sources == seeds
        checked += 1
    assert {1, 40} <= seen_syn and {1, 100} <= seen_ctx and seen_dil == set(range(6))
    report(
        "region extraction: PASS - exact set equality with the brute-force BFS "
        f"oracle on {checked} randomized single-edge scenes "
        f"(n_syn 1..40, n_ctx 1..100, dilate 0..5 all covered)"
    )


def test_diffusion_mean_value_max_principle_and_strip():
    # 3-slot strip: exact harmonic values
    plane = np.array([[0.0, 0.0, 0.0, 0.0, 1.0]])
    mask = np.array([[False, True, True, True, False]])
    out = lp.diffusion_inpaint(plane, mask)
    assert np.abs(out[0, 1:4] - [0.25, 0.5, 0.75]).max() < 1e-6

    rng = np.random.default_rng(5)
    worst_residual = 0.0
    for case in range(6):
        h, w = int(rng.integers(8, 20)), int(rng.integers(8, 20))
        plane = rng.random((h, w))
        mask = np.zeros((h, w), dtype=bool)
        mask[2 : h - 2, 2 : w - 2] = rng.random((h - 4, w - 4)) > 0.2
        if not mask.any():
            continue
        barriers = np.zeros((h, w), dtype=bool)
        if case >= 3:
            barriers[:, w // 2] = True
        solved = lp.diffusion_inpaint(plane.copy(), mask, barriers=barriers)
        usable = usable_neighbors(mask, np.zeros_like(mask), barriers)
        direct = diffusion_direct_solve(plane, mask, usable, seed=plane)
        assert np.abs(solved[mask] - direct[mask]).max() < 1e-5
        # mean-value property at every solve cell with usable neighbors
        for y, x in zip(*np.nonzero(mask)):
            nbrs = []
            for d, (dx, dy) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
                if usable[d, y, x]:
                    nbrs.append(solved[y + dy, x + dx])
            if nbrs:
                worst_residual = max(worst_residual, abs(solved[y, x] - np.mean(nbrs)))
        # maximum principle against the participating boundary values
        boundary = []
        for y, x in zip(*np.nonzero(mask)):
            for d, (dx, dy) in enumerate(((-1, 0), (1, 0), (0, -1), (0, 1))):
                if usable[d, y, x] and not mask[y + dy, x + dx]:
                    boundary.append(plane[y + dy, x + dx])
        if boundary:
            assert solved[mask].min() >= min(boundary) - 1e-6
            assert solved[mask].max() <= max(boundary) + 1e-6
    assert worst_residual < 1e-5
    report(
        "diffusion inpainting: PASS - strip {0.25, 0.5, 0.75} within 1e-6, "
        f"mean-value residual {worst_residual:.2e} (< 1e-5), maximum principle held"
    )


def test_disocclusion_vs_naive_warp_128px_scene_under_10s():
    t0 = time.perf_counter()
    color, disp, _rect = square_scene(h=128, w=128, x0=40, y0=40, x1=88, y1=88)
    filtered = lp.bilateral_median_filter(disp)
    bmap, pairs = lp.detect_discontinuities(filtered, 0.04)
    edges = lp.link_depth_edges(bmap, pairs, min_edge_length=10)
    ldi = lp.lift_image(color, filtered)
    ldi, _report = lp.run_pipeline(ldi, edges, lp.DiffusionBackend())
    cam = lp.Camera.default(128, 128)
    mesh = lp.ldi_to_mesh(ldi, cam)
    bg_depth = depth_from_disparity(0.2)
    max_naive = 0
    for shift_px in range(1, 11):
        t = shift_px * bg_depth / cam.fx
        dst = lp.Camera(
            fx=cam.fx, fy=cam.fy, cx=cam.cx + cam.fx * t / bg_depth, cy=cam.cy,
            translation=np.array([t, 0.0, 0.0]),
        )
        _warped, holes = lp.naive_warp(color, filtered, cam, dst)
        covered = warp_coverage_reference(
            filtered, cam.fx, cam.fy, cam.cx, cam.cy, dst.cx, dst.cy, t, 0.9, 0.1
        )
        naive_holes = int(holes.sum())
        assert naive_holes == 128 * 128 - len(covered), "naive holes != geometric oracle"
        assert naive_holes > 0
        max_naive = max(max_naive, naive_holes)
        _img, _depth, cover = lp.render_view(mesh, dst, 128, 128)
        assert int((~cover).sum()) == 0, f"pipeline left holes at {shift_px}px"
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"took {elapsed:.1f}s"
    report(
        "disocclusion filling: PASS - naive warp holes match the geometric oracle "
        f"exactly (up to {max_naive} px), pipeline renders 0 holes at all baselines "
        f"1..10 px, {elapsed:.1f}s (< 10s)"
    )


def test_nested_occluders_exactly_two_recursion_levels():
    color, disp, _near, _mid = nested_scene()
    filtered = lp.bilateral_median_filter(disp)
    bmap, pairs = lp.detect_discontinuities(filtered, 0.04)
    edges = lp.link_depth_edges(bmap, pairs, min_edge_length=10)
    ldi = lp.lift_image(color, filtered)
    ldi, rep = lp.run_pipeline(ldi, edges, lp.DiffusionBackend())
    assert rep.recursion_levels == 2, f"needed {rep.recursion_levels} levels"
    assert rep.edges_by_level.get(1, 0) >= 1
    cam = lp.Camera.default(128, 128)
    mesh = lp.ldi_to_mesh(ldi, cam)
    bg_depth = depth_from_disparity(0.1)
    for shift_px in (5, 10):
        t = shift_px * bg_depth / cam.fx
        dst = lp.Camera(
            fx=cam.fx, fy=cam.fy, cx=cam.cx + cam.fx * t / bg_depth, cy=cam.cy,
            translation=np.array([t, 0.0, 0.0]),
        )
        _img, _depth, cover = lp.render_view(mesh, dst, 128, 128)
        assert int((~cover).sum()) == 0
    report(
        "multi-layer recursion: PASS - nested two-occluder scene resolved in "
        f"exactly 2 levels ({rep.edges_by_level}), renders hole-free"
    )


def test_parallax_shift_matches_fx_t_over_d():
    pairs = [(t, d) for t in (0.02, 0.05, 0.11) for d in (0.3, 0.6)]
    pairs += [(0.08, 0.45), (0.03, 0.8), (0.12, 0.55), (0.06, 0.25)]
    assert len(pairs) == 10
    worst = 0.0
    for t, disp_val in pairs:
        rng = np.random.default_rng(int(disp_val * 100))
        color = smooth_texture(rng, 48, 48, blur=1)
        disp = np.full((48, 48), disp_val, dtype=np.float32)
        ldi = lp.lift_image(color, disp)
        cam = lp.Camera.default(48, 48)
        mesh = lp.ldi_to_mesh(ldi, cam)
        base, _, _ = lp.render_view(mesh, cam, 48, 48)
        moved, _, cover = lp.render_view(
            mesh, cam.moved(translation=np.array([t, 0.0, 0.0])), 48, 48
        )
        expected = cam.fx * t / depth_from_disparity(disp_val)
        err = abs(measure_shift(base, moved, cover) - expected)
        assert err <= 0.5, f"(t={t}, d={disp_val}): error {err:.3f}px"
        worst = max(worst, err)
    report(
        f"parallax: PASS - rendered shift within {worst:.2f}px of fx*t/d "
        "across 10 (t, d) pairs (tolerance 0.5px)"
    )


def test_metrics_and_losses_match_oracles():
    rng = np.random.default_rng(3)
    a8 = rng.integers(0, 256, (14, 15)).astype(np.float64)
    b8 = np.clip(a8 + rng.normal(0, 10, a8.shape), 0, 255)
    d_ssim = abs(lp.ssim(a8, b8) - ssim_reference(a8, b8))
    assert d_ssim < 1e-6

    img = rng.random((7, 8, 3))
    s = rng.random((7, 8)) > 0.5
    d_tv = abs(lp.tv_loss(img, s) - tv_reference(img, s))
    assert d_tv < 1e-6

    fa = [rng.random((2, 3, 3)), rng.random((3, 2, 4))]
    fb = [rng.random((2, 3, 3)), rng.random((3, 2, 4))]
    d_style = abs(lp.style_loss(fa, fb) - style_reference(fa, fb))
    d_perc = abs(lp.perceptual_loss(fa, fb) - perceptual_reference(fa, fb))
    assert d_style < 1e-6 and d_perc < 1e-6

    assert lp.combined_color_objective(1, 0, 0, 0, 0) == 1.0
    assert lp.combined_color_objective(0, 1, 0, 0, 0) == 6.0
    assert lp.combined_color_objective(0, 0, 1, 0, 0) == 0.05
    assert lp.combined_color_objective(0, 0, 0, 1, 0) == 120.0
    assert lp.combined_color_objective(0, 0, 0, 0, 1) == 0.01
    assert lp.combined_color_objective(1, 1, 1, 1, 1) == pytest.approx(127.06)
    assert lp.psnr(np.zeros((8, 8)), np.ones((8, 8))) == pytest.approx(10 * math.log10(255**2))
    report(
        "metrics/losses: PASS - SSIM/TV/style/perceptual within 1e-6 of brute-force "
        f"oracles (max dev {max(d_ssim, d_tv, d_style, d_perc):.2e}); objective "
        "weights (1, 6, 0.05, 120, 0.01) exact"
    )


def test_bilateral_filter_equals_reference_exactly():
    rng = np.random.default_rng(6)
    for _ in range(3):
        h, w = rng.integers(8, 24, size=2)
        m = rng.random((h, w)).astype(np.float32)
        out = lp.bilateral_median_filter(m)
        assert np.array_equal(out.astype(np.float64), bilateral_median_reference(m, 7, 4.0, 0.5))
    ramp = ramp_map(h=16, plateau=12, ramp=5)
    out = lp.bilateral_median_filter(ramp)
    assert np.array_equal(out.astype(np.float64), bilateral_median_reference(ramp, 7, 4.0, 0.5))
    report(
        "bilateral median (equality clause): PASS - output equals the O(window^2) "
        "reference exactly on random maps and the ramp scene"
    )


@pytest.mark.xfail(
    strict=True,
    reason=(
        "unattainable as stated: a self-weighted median is the identity on a clean "
        "monotone ramp (no window side ever reaches half the total weight with "
        "sigma_intensity=0.5), so a 5px transition cannot shrink; the brute-force "
        "oracle confirms output == input. Kept as a faithful assertion of the "
        "stated property; see the repository notes for the full analysis."
    ),
)
def test_bilateral_filter_sharpens_ramp_to_2px():
    ramp = ramp_map(h=16, plateau=12, ramp=5)
    assert transition_width(ramp[8]) >= 5
    out = lp.bilateral_median_filter(ramp, window=7, sigma_spatial=4.0, sigma_intensity=0.5)
    width = transition_width(out[8])
    report(f"bilateral median (sharpening clause): width after filter = {width}")
    assert width <= 2


def test_determinism_bit_identical_containers_and_glb(tmp_path):
    color, disp, _rect = square_scene(h=48, w=48, x0=14, y0=14, x1=34, y1=34)
    write_color_png(tmp_path / "c.png", color)
    write_pfm(tmp_path / "d.pfm", disp)
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        code = cli_main(
            ["build", "--color", str(tmp_path / "c.png"), "--depth", str(tmp_path / "d.pfm"),
             "--out", str(out)]
        )
        assert code == 0
        outs.append(out)
    ldi_same = (outs[0] / "ldi.bin").read_bytes() == (outs[1] / "ldi.bin").read_bytes()
    glb_same = (outs[0] / "mesh.glb").read_bytes() == (outs[1] / "mesh.glb").read_bytes()
    assert ldi_same and glb_same
    report("determinism: PASS - two identical runs produced bit-identical ldi.bin and mesh.glb")
