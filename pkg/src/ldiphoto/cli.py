"""Command-line driver.

Subcommands:
    build    RGB + depth -> LDI container, glb/obj mesh, run report
    render   glb or LDI container + trajectory JSON -> PNG frames
    compare  scene -> naive-warp vs pipeline side-by-side frames + hole stats
    metrics  two images (+ optional masks) -> JSON metric report

Exit codes: 0 ok, 2 input error, 3 config error, 4 internal invariant
failure. All artifacts of a run land in one output directory with a
manifest.json. Given identical inputs, config and seed, the binary artifacts
are bit-identical across runs (report timings excluded).
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .errors import ConfigError, ConsistencyError, InputError
from .fileio import read_color_png, read_depth_png16, read_pfm, write_color_png, write_pfm
from .inpaint import DiffusionBackend, SubprocessBackend, run_pipeline
from .ldi import Ldi, lift_image
from .mesh_render import (
    Camera,
    export_glb,
    export_obj,
    import_glb,
    ldi_to_mesh,
    naive_warp,
    parse_trajectory,
    render_view,
    trajectory_cameras,
)
from .metrics import masked_recon_losses, psnr, ssim, tv_loss
from .preprocess import (
    bilateral_median_filter,
    detect_discontinuities,
    link_depth_edges,
    normalize_disparity,
    scaled_min_edge_length,
)


def _load_config(args):
    path = getattr(args, "config", None) or os.environ.get("LDIPHOTO_CONFIG")
    cfg = PipelineConfig.from_file(path) if path else PipelineConfig()
    for name in ("threshold", "n_syn", "n_ctx", "dilate", "depth_cap", "seed", "min_edge_length"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "shuffle_edges", False):
        cfg.shuffle_edges = True
    return cfg.validate()


def _read_depth(path, kind):
    path = str(path)
    if path.endswith(".pfm"):
        return read_pfm(path).astype(np.float64), kind
    return read_depth_png16(path).astype(np.float64), kind


def _make_backend(cfg, out_dir):
    if cfg.backend == "diffusion":
        return DiffusionBackend(tol=cfg.diffusion_tol, max_iter=cfg.diffusion_max_iter)
    command = os.environ.get("LDIPHOTO_BACKEND_CMD")
    if not command:
        raise ConfigError("backend=subprocess requires LDIPHOTO_BACKEND_CMD")
    return SubprocessBackend(command.split(), Path(out_dir) / "backend_io")


def _build_scene(args, cfg, out):
    color = read_color_png(args.color)
    raw_depth, kind = _read_depth(args.depth, args.depth_kind)
    if raw_depth.shape != color.shape[:2]:
        raise InputError(
            f"color {color.shape[:2]} and depth {raw_depth.shape} dimensions differ"
        )
    disparity = normalize_disparity(raw_depth, mode=kind)
    filtered = bilateral_median_filter(
        disparity, cfg.filter_window, cfg.sigma_spatial, cfg.sigma_intensity
    )
    min_len = cfg.min_edge_length
    if cfg.scale_edge_length:
        min_len = scaled_min_edge_length(min_len, color.shape[1], color.shape[0])
    bmap, pairs = detect_discontinuities(filtered, cfg.threshold)
    edges = link_depth_edges(bmap, pairs, min_edge_length=min_len)
    ldi = lift_image(color, filtered)
    if args.dump_intermediates:
        write_pfm(out / "disparity_normalized.pfm", disparity)
        write_pfm(out / "disparity_filtered.pfm", filtered)
        overlay = np.stack([filtered] * 3, axis=-1)
        overlay = (overlay * 255).astype(np.uint8)
        for edge in edges:
            for x, y in edge.sites:
                overlay[y, x] = (255, 64, 64)
        write_color_png(out / "edges_overlay.png", overlay)
    rng = random.Random(cfg.seed) if cfg.shuffle_edges else None
    backend = _make_backend(cfg, out)
    ldi, report = run_pipeline(
        ldi,
        edges,
        backend,
        threshold=cfg.threshold,
        n_syn=cfg.n_syn,
        n_ctx=cfg.n_ctx,
        dilate=cfg.dilate,
        depth_cap=cfg.depth_cap,
        min_edge_length=min_len,
        rng=rng,
        debug_dir=str(out) if args.dump_intermediates else None,
    )
    return ldi, report, filtered, color


def cmd_build(args):
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ldi, report, filtered, color = _build_scene(args, cfg, out)
    h, w = filtered.shape
    camera = Camera.default(w, h, cfg.focal_factor)
    mesh = ldi_to_mesh(ldi, camera, cfg.disp_a, cfg.disp_b)
    ldi.save(out / "ldi.bin")
    export_glb(mesh, out / "mesh.glb")
    export_obj(mesh, out / "mesh.obj")
    layer_max = max((ldi.layer_count(x, y) for y in range(h) for x in range(w)))
    doc = report.to_dict()
    doc.update(
        {
            "input": {"color": str(args.color), "depth": str(args.depth), "width": w, "height": h},
            "config": cfg.to_dict(),
            "ldi_pixels": len(ldi),
            "max_layers": int(layer_max),
            "mesh": {"vertices": int(mesh.vertices.shape[0]), "triangles": mesh.triangle_count},
        }
    )
    doc["timings_ms"]["total"] = round((time.perf_counter() - t0) * 1000.0, 3)
    (out / "report.json").write_text(json.dumps(doc, indent=2))
    manifest = {
        "version": __version__,
        "artifacts": {
            "ldi": "ldi.bin",
            "glb": "mesh.glb",
            "obj": "mesh.obj",
            "report": "report.json",
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(
        f"built {out}: {report.edges_processed} edges over "
        f"{report.recursion_levels} level(s), {report.synthesis_pixels} synthesized px, "
        f"{len(ldi)} LDI px, {mesh.triangle_count} triangles"
    )
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _load_mesh(path, cfg):
    path = Path(path)
    if path.suffix == ".glb":
        return import_glb(path)
    ldi = Ldi.load(path)
    camera = Camera.default(ldi.width, ldi.height, cfg.focal_factor)
    return ldi_to_mesh(ldi, camera, cfg.disp_a, cfg.disp_b)


def cmd_render(args):
    cfg = _load_config(args)
    mesh = _load_mesh(args.scene, cfg)
    spec = parse_trajectory(Path(args.trajectory).read_text())
    width = int(spec.get("width", args.width))
    height = int(spec.get("height", args.height))
    intr = spec.get("intrinsics")
    if intr:
        camera = Camera(fx=intr["fx"], fy=intr["fy"], cx=intr["cx"], cy=intr["cy"])
    else:
        camera = Camera.default(width, height, cfg.focal_factor)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cams = trajectory_cameras(spec, camera)
    for i, cam in enumerate(cams):
        img, _depth, _cover = render_view(mesh, cam, width, height)
        write_color_png(out / f"frame_{i:04d}.png", img)
    print(f"rendered {len(cams)} frame(s) to {out}")
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ldi, report, filtered, color = _build_scene(args, cfg, out)
    h, w = filtered.shape
    camera = Camera.default(w, h, cfg.focal_factor)
    mesh = ldi_to_mesh(ldi, camera, cfg.disp_a, cfg.disp_b)

    # hole comparison isolates disocclusions: the target principal point
    # tracks the dominant (farthest) plane so borders stay covered
    bg_disp = float(np.quantile(filtered, 0.05))
    bg_depth = 1.0 / (cfg.disp_a * bg_disp + cfg.disp_b)
    stats = []
    baselines = np.linspace(0, args.baseline_px, args.frames)
    for i, shift_px in enumerate(baselines):
        t = shift_px * bg_depth / camera.fx
        dst = Camera(
            fx=camera.fx,
            fy=camera.fy,
            cx=camera.cx + camera.fx * t / bg_depth,
            cy=camera.cy,
            translation=np.array([t, 0.0, 0.0]),
        )
        warped, holes = naive_warp(color, filtered, camera, dst, cfg.disp_a, cfg.disp_b)
        rendered, _depth, cover = render_view(mesh, dst, w, h)
        side = np.concatenate([warped, rendered], axis=1)
        write_color_png(out / f"compare_{i:04d}.png", side)
        stats.append(
            {
                "baseline_px": float(shift_px),
                "naive_holes": int(holes.sum()),
                "pipeline_holes": int((~cover).sum()),
            }
        )
    doc = {"frames": stats, "report": report.to_dict()}
    (out / "holes.json").write_text(json.dumps(doc, indent=2))
    print(json.dumps(stats, indent=2))
    return 0


def cmd_metrics(args):
    a = read_color_png(args.image)
    b = read_color_png(args.target)
    doc = {"psnr": psnr(a, b), "ssim": ssim(a, b)}
    if args.synthesis_mask:
        s = read_color_png(args.synthesis_mask)[..., 0] > 127
        c = (
            read_color_png(args.context_mask)[..., 0] > 127
            if args.context_mask
            else ~s
        )
        l_syn, l_ctx = masked_recon_losses(
            a.astype(np.float64) / 255.0, b.astype(np.float64) / 255.0, s, c
        )
        doc.update(
            {
                "l_synthesis": l_syn,
                "l_context": l_ctx,
                "l_tv": tv_loss(a.astype(np.float64) / 255.0, s),
            }
        )
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="ldiphoto",
        description="Turn an RGB-D image into a layered, inpainted 3D photo.",
    )
    p.add_argument("--version", action="version", version=f"ldiphoto {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="config file (key = value lines); or $LDIPHOTO_CONFIG")
        sp.add_argument("--threshold", type=float, default=None)
        sp.add_argument("--min-edge-length", dest="min_edge_length", type=int, default=None)
        sp.add_argument("--n-syn", dest="n_syn", type=int, default=None)
        sp.add_argument("--n-ctx", dest="n_ctx", type=int, default=None)
        sp.add_argument("--dilate", type=int, default=None)
        sp.add_argument("--depth-cap", dest="depth_cap", type=int, default=None)
        sp.add_argument("--shuffle-edges", dest="shuffle_edges", action="store_true")
        sp.add_argument("--seed", type=int, default=None)

    b = sub.add_parser("build", help="build a 3D photo from RGB + depth")
    b.add_argument("--color", required=True)
    b.add_argument("--depth", required=True)
    b.add_argument("--depth-kind", choices=("disparity", "depth"), default="disparity")
    b.add_argument("--out", required=True)
    b.add_argument("--dump-intermediates", action="store_true")
    add_common(b)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("render", help="render trajectory frames from a glb or LDI container")
    r.add_argument("scene", help="mesh.glb or ldi.bin")
    r.add_argument("trajectory", help="trajectory spec JSON")
    r.add_argument("--out", required=True)
    r.add_argument("--width", type=int, default=512)
    r.add_argument("--height", type=int, default=512)
    add_common(r)
    r.set_defaults(func=cmd_render)

    c = sub.add_parser("compare", help="naive warp vs full pipeline, hole statistics")
    c.add_argument("--color", required=True)
    c.add_argument("--depth", required=True)
    c.add_argument("--depth-kind", choices=("disparity", "depth"), default="disparity")
    c.add_argument("--out", required=True)
    c.add_argument("--baseline-px", dest="baseline_px", type=float, default=10.0)
    c.add_argument("--frames", type=int, default=5)
    c.add_argument("--dump-intermediates", action="store_true")
    add_common(c)
    c.set_defaults(func=cmd_compare)

    m = sub.add_parser("metrics", help="PSNR/SSIM (+ masked losses) between two images")
    m.add_argument("image")
    m.add_argument("target")
    m.add_argument("--synthesis-mask")
    m.add_argument("--context-mask")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metrics)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except ConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
