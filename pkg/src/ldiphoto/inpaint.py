"""Three-stage inpainting (structure -> color, structure -> depth) and the
multi-layer driver loop.

Backends fill only the synthesis slots, may read only context, masks and
earlier-stage outputs, and are exchangeable: the built-in one solves the
masked Laplace equation (isotropic diffusion) with inpainted edges acting as
barriers; external models attach through a subprocess/file contract
(PFM planes plus a JSON sidecar, see SubprocessBackend).
"""

from __future__ import annotations

import json
import subprocess
import time
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BackendError, ConfigError, InputError
from .ldi import cut_edge
from .regions import SynthesizedValues, extract_regions, flatten_regions, merge_synthesized


@dataclass
class InpaintResult:
    """Stage outputs, defined on the synthesis slots of the request."""

    edges: np.ndarray  # (H, W) bool
    color: np.ndarray  # (H, W, 3) float32 in [0, 1]
    disparity: np.ndarray  # (H, W) float32 in [0, 1]


class InpaintBackend(ABC):
    """Contract for the three inpainting stages.

    Stage order is fixed: edges first, then color and depth conditioned on
    the inpainted edges (color and depth are mutually independent).
    """

    name = "abstract"

    @abstractmethod
    def inpaint_edges(self, request) -> np.ndarray: ...

    @abstractmethod
    def inpaint_color(self, request, inpainted_edges) -> np.ndarray: ...

    @abstractmethod
    def inpaint_depth(self, request, inpainted_edges) -> np.ndarray: ...


def usable_neighbors(mask, excluded, barriers):
    """Stencil usability per direction (left, right, up, down).

    A neighbor participates when it exists, is not excluded, and shares the
    barrier mark with the cell (marked cells diffuse along the wall, unmarked
    ones around it).
    """
    h, w = mask.shape
    valid = ~excluded
    usable = np.zeros((4, h, w), dtype=bool)
    if h == 0 or w == 0:
        return usable
    usable[0, :, 1:] = valid[:, :-1] & (barriers[:, 1:] == barriers[:, :-1])
    usable[1, :, :-1] = valid[:, 1:] & (barriers[:, :-1] == barriers[:, 1:])
    usable[2, 1:, :] = valid[:-1, :] & (barriers[1:, :] == barriers[:-1, :])
    usable[3, :-1, :] = valid[1:, :] & (barriers[:-1, :] == barriers[1:, :])
    usable &= valid[None]
    return usable


def diffusion_inpaint(plane, mask, barriers=None, tol=1e-6, max_iter=10000, excluded=None):
    """Fill masked cells by solving the discrete Laplace equation.

    Context values (cells neither masked nor excluded) are the fixed
    boundary; the 4-neighbor stencil skips neighbors across a barrier edge.
    Masked cells keep their incoming value as the initial guess, and a cell
    left with no usable neighbor keeps it outright (seed fallback).
    Converged when the largest update of a red-black Gauss-Seidel sweep drops
    below tol.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise InputError("diffusion mask is empty")
    plane = np.asarray(plane, dtype=np.float64)
    if barriers is None:
        barriers = np.zeros_like(mask)
    if excluded is None:
        excluded = np.zeros_like(mask)
    usable = usable_neighbors(mask, np.asarray(excluded, dtype=bool), np.asarray(barriers, dtype=bool))
    out, _sweeps, _delta = _kernels.diffusion_solve(plane, mask, usable, tol, max_iter)
    return out


def edge_diffusion_stub(edge_map, mask):
    """Baseline structure stage: straight continuation of edge endpoints.

    Each marked chain endpoint (exactly one marked 8-neighbor) extends along
    its last direction through the synthesis mask until it leaves the mask or
    meets another edge, original or previously drawn. Endpoints are processed
    top-to-bottom, left-to-right.
    """
    edge_map = np.asarray(edge_map, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    h, w = edge_map.shape
    out = np.zeros_like(edge_map)
    if h == 0 or w == 0:
        return out
    ys, xs = np.nonzero(edge_map)
    marked = set(zip(xs.tolist(), ys.tolist()))
    endpoints = []
    for x, y in sorted(marked, key=lambda p: (p[1], p[0])):
        nbrs = [
            (x + dx, y + dy)
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dx, dy) != (0, 0) and (x + dx, y + dy) in marked
        ]
        if len(nbrs) == 1:
            nx, ny = nbrs[0]
            endpoints.append(((x, y), (x - nx, y - ny)))
    for (x, y), (dx, dy) in endpoints:
        cx, cy = x + dx, y + dy
        while 0 <= cx < w and 0 <= cy < h and mask[cy, cx] and not edge_map[cy, cx] and not out[cy, cx]:
            out[cy, cx] = True
            cx += dx
            cy += dy
    return out


class DiffusionBackend(InpaintBackend):
    """Built-in baseline: straight-line edges plus isotropic diffusion.

    Original and inpainted edge sites both act as diffusion barriers, so the
    filled depth (and color) respect the continued structure.
    """

    name = "diffusion"

    def __init__(self, tol=1e-6, max_iter=10000):
        self.tol = tol
        self.max_iter = max_iter

    def inpaint_edges(self, request):
        return edge_diffusion_stub(request.edges, request.mask)

    def _solve(self, plane, seeds, request, inpainted_edges):
        barriers = request.edges | inpainted_edges
        work = plane.astype(np.float64).copy()
        work[request.mask] = seeds[request.mask]
        return diffusion_inpaint(
            work,
            request.mask,
            barriers=barriers,
            tol=self.tol,
            max_iter=self.max_iter,
            excluded=request.excluded,
        )

    def inpaint_color(self, request, inpainted_edges):
        out = np.zeros_like(request.color)
        for c in range(3):
            solved = self._solve(
                request.color[..., c], request.seed_color[..., c], request, inpainted_edges
            )
            out[..., c] = np.clip(solved, 0.0, 1.0)
        return out

    def inpaint_depth(self, request, inpainted_edges):
        solved = self._solve(
            request.disparity, request.seed_disparity, request, inpainted_edges
        )
        return np.clip(solved, 0.0, 1.0).astype(np.float32)


def inpaint_stage_order(request, backend):
    """Run the three stages in order and validate the outputs.

    An empty synthesis mask short-circuits without touching the backend.
    Backend failures propagate as BackendError tagged with the stage.
    """
    h, w = request.shape
    if not request.mask.any():
        return InpaintResult(
            edges=np.zeros((h, w), dtype=bool),
            color=np.zeros((h, w, 3), dtype=np.float32),
            disparity=np.zeros((h, w), dtype=np.float32),
        )

    def run(stage, fn, *args):
        try:
            return fn(request, *args)
        except Exception as exc:  # noqa: BLE001 - tag and rethrow
            raise BackendError(stage, str(exc)) from exc

    edges = np.asarray(run("edge", backend.inpaint_edges), dtype=bool) & request.mask
    color = np.asarray(run("color", backend.inpaint_color, edges), dtype=np.float32)
    disparity = np.asarray(run("depth", backend.inpaint_depth, edges), dtype=np.float32)
    if color.shape != (h, w, 3) or disparity.shape != (h, w):
        raise BackendError(backend.name, "backend returned wrong plane shapes")
    for name, plane in (("color", color), ("depth", disparity)):
        vals = plane[request.mask]
        if not np.isfinite(vals).all():
            raise BackendError(name, "non-finite values on synthesis slots")
        if vals.size and (vals.min() < -1e-6 or vals.max() > 1.0 + 1e-6):
            raise BackendError(name, "values outside [0, 1] on synthesis slots")
    color = np.where(request.mask[..., None], np.clip(color, 0.0, 1.0), 0.0).astype(np.float32)
    disparity = np.where(request.mask, np.clip(disparity, 0.0, 1.0), 0.0).astype(np.float32)
    return InpaintResult(edges=edges, color=color, disparity=disparity)


@dataclass
class RunReport:
    """Bookkeeping for one pipeline run."""

    edges_initial: int = 0
    edges_processed: int = 0
    edges_by_level: dict = field(default_factory=dict)
    recursion_levels: int = 0
    synthesis_pixels: int = 0
    warnings: list = field(default_factory=list)
    timings_ms: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "edges_initial": self.edges_initial,
            "edges_processed": self.edges_processed,
            "edges_by_level": {str(k): v for k, v in sorted(self.edges_by_level.items())},
            "recursion_levels": self.recursion_levels,
            "synthesis_pixels": self.synthesis_pixels,
            "warnings": list(self.warnings),
            "timings_ms": dict(self.timings_ms),
        }


def run_pipeline(
    ldi,
    edges,
    backend,
    threshold=0.04,
    n_syn=40,
    n_ctx=100,
    dilate=5,
    depth_cap=8,
    min_edge_length=10,
    validate_every_mutation=False,
    rng=None,
    debug_dir=None,
):
    """Cut, extract, inpaint and merge every depth edge until none remain.

    Edges are processed in id order (optionally shuffled once by `rng`);
    merge-induced edges join the back of the queue one recursion level
    deeper. The level cap is a backstop: edges at or beyond it are dropped
    with a warning. `debug_dir` dumps a color-coded region overlay (context
    blue, synthesis red) per processed edge. Returns (ldi, RunReport).
    """
    if depth_cap < 1:
        raise ConfigError(f"depth_cap must be >= 1, got {depth_cap}")
    t0 = time.perf_counter()
    report = RunReport(edges_initial=len(edges))
    queue = deque(sorted(edges, key=lambda e: e.id))
    if rng is not None:
        order = list(queue)
        rng.shuffle(order)
        queue = deque(order)
    levels = set()
    next_id = max((e.id for e in edges), default=-1) + 1
    while queue:
        edge = queue.popleft()
        if edge.level >= depth_cap:
            report.warnings.append(
                f"edge {edge.id}: recursion level {edge.level} hit the cap {depth_cap}"
            )
            continue
        silhouettes = cut_edge(ldi, edge, threshold)
        if validate_every_mutation:
            ldi.validate()
        report.edges_processed += 1
        report.edges_by_level[edge.level] = report.edges_by_level.get(edge.level, 0) + 1
        levels.add(edge.level)
        if silhouettes.empty:
            continue
        region = extract_regions(
            ldi, silhouettes, n_syn=n_syn, n_ctx=n_ctx, dilate=dilate,
            edge_id=edge.id, level=edge.level,
        )
        if region.empty:
            continue
        if debug_dir is not None:
            from .regions import dump_region_overlay

            dump_region_overlay(
                ldi, region, f"{debug_dir}/regions_edge{edge.id:04d}_lvl{edge.level}.png"
            )
        request = flatten_regions(ldi, region, threshold=threshold)
        result = inpaint_stage_order(request, backend)
        slots = region.slot_order
        sy = np.asarray([p[1] - request.y0 for p in slots])
        sx = np.asarray([p[0] - request.x0 for p in slots])
        values = SynthesizedValues(
            color=result.color[sy, sx], disparity=result.disparity[sy, sx]
        )
        edge_sites = {
            (int(x + request.x0), int(y + request.y0))
            for y, x in zip(*np.nonzero(result.edges))
        }
        new_edges = merge_synthesized(
            ldi, region, values, edge_sites,
            threshold=threshold, min_edge_length=min_edge_length,
        )
        if validate_every_mutation:
            ldi.validate()
        report.synthesis_pixels += len(slots)
        for ne in new_edges:
            ne.id = next_id
            next_id += 1
            queue.append(ne)
    ldi.validate()
    report.recursion_levels = len(levels)
    report.timings_ms["run_pipeline"] = round((time.perf_counter() - t0) * 1000.0, 3)
    return ldi, report


class SubprocessBackend(InpaintBackend):
    """File/subprocess contract for external (e.g. learned) inpainting models.

    Per stage, a work directory receives little-endian PFM planes (grayscale
    "Pf", scale -1.0, bottom-up rows) named color_r/g/b.pfm, disparity.pfm,
    edges.pfm, mask.pfm, excluded.pfm, and for the content stages
    inpainted_edges.pfm, plus request.json:

        {"stage": "edge"|"color"|"depth",
         "bbox": {"x": x0, "y": y0, "width": W, "height": H},
         "mask": "mask.pfm"}

    The command is invoked as `command <workdir>` and must write result.pfm
    (edge/depth: one plane; color: result_r/g/b.pfm). Outputs are validated
    exactly like the built-in backend's.
    """

    name = "subprocess"

    def __init__(self, command, workdir):
        from pathlib import Path

        self.command = list(command)
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._calls = 0

    def _write_request(self, stage, request, inpainted_edges=None):
        from .fileio import write_pfm

        self._calls += 1
        d = self.workdir / f"{stage}_{self._calls:04d}"
        d.mkdir(parents=True, exist_ok=True)
        h, w = request.shape
        for c, name in enumerate(("color_r", "color_g", "color_b")):
            write_pfm(d / f"{name}.pfm", request.color[..., c])
        write_pfm(d / "disparity.pfm", request.disparity)
        write_pfm(d / "edges.pfm", request.edges.astype(np.float32))
        write_pfm(d / "mask.pfm", request.mask.astype(np.float32))
        write_pfm(d / "excluded.pfm", request.excluded.astype(np.float32))
        if inpainted_edges is not None:
            write_pfm(d / "inpainted_edges.pfm", inpainted_edges.astype(np.float32))
        sidecar = {
            "stage": stage,
            "bbox": {"x": request.x0, "y": request.y0, "width": w, "height": h},
            "mask": "mask.pfm",
        }
        (d / "request.json").write_text(json.dumps(sidecar, indent=2))
        return d

    def _invoke(self, stage, directory):
        proc = subprocess.run(
            [*self.command, str(directory)], capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise BackendError(stage, f"backend command failed: {proc.stderr.strip()}")

    def inpaint_edges(self, request):
        from .fileio import read_pfm

        d = self._write_request("edge", request)
        self._invoke("edge", d)
        return read_pfm(d / "result.pfm") > 0.5

    def inpaint_color(self, request, inpainted_edges):
        from .fileio import read_pfm

        d = self._write_request("color", request, inpainted_edges)
        self._invoke("color", d)
        out = np.stack(
            [read_pfm(d / f"result_{c}.pfm") for c in ("r", "g", "b")], axis=-1
        )
        return out.astype(np.float32)

    def inpaint_depth(self, request, inpainted_edges):
        from .fileio import read_pfm

        d = self._write_request("depth", request, inpainted_edges)
        self._invoke("depth", d)
        return read_pfm(d / "result.pfm").astype(np.float32)
