"""Textured-mesh conversion of an LDI and a small software renderer.

Conventions: the camera looks down +z with x right and y down (image order);
a pixel (x, y) with disparity d unprojects through depth = 1 / (a*d + b).
Projected coordinates are in pixel units and the rasterizer samples at
integer coordinates, so an identity render reproduces the source lattice.
glTF export flips to the glTF axis convention (x, -y, -z); import inverts.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, InputError
from .ldi import DOWN, RIGHT

GLTF_FLIP = np.diag([1.0, -1.0, -1.0])


def _rotation_valid(r):
    return np.allclose(r @ r.T, np.eye(3), atol=1e-6) and abs(np.linalg.det(r) - 1.0) < 1e-6


@dataclass
class Camera:
    """Pinhole intrinsics plus a camera-to-world rigid pose."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if self.rotation.shape != (3, 3) or not _rotation_valid(self.rotation):
            raise ConfigError("camera rotation is not orthonormal")

    @classmethod
    def default(cls, width, height, focal_factor=0.8):
        f = focal_factor * max(width, height)
        return cls(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0)

    def moved(self, translation=None, rotation=None):
        return Camera(
            fx=self.fx,
            fy=self.fy,
            cx=self.cx,
            cy=self.cy,
            rotation=self.rotation if rotation is None else rotation,
            translation=self.translation if translation is None else np.asarray(translation, dtype=np.float64),
        )

    def unproject(self, xs, ys, depths):
        """Pixel coordinates + depth -> world points (N, 3)."""
        zc = np.asarray(depths, dtype=np.float64)
        xc = (np.asarray(xs, dtype=np.float64) - self.cx) / self.fx * zc
        yc = (np.asarray(ys, dtype=np.float64) - self.cy) / self.fy * zc
        cam = np.stack([xc, yc, zc], axis=-1)
        return cam @ self.rotation.T + self.translation

    def project(self, points):
        """World points (N, 3) -> (u, v, camera-space depth)."""
        cam = (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation
        z = cam[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.fx * cam[..., 0] / z + self.cx
            v = self.fy * cam[..., 1] / z + self.cy
        return u, v, z


@dataclass
class TexturedMesh:
    """Vertex positions (N, 3) float64, colors (N, 3) float32 in [0, 1],
    triangle index triples (M, 3) int64. layers holds each vertex's stacking
    index at its lattice position (0 = captured surface, 1+ = synthesized
    sheets); viewers use it for per-layer visibility."""

    vertices: np.ndarray
    colors: np.ndarray
    triangles: np.ndarray
    layers: np.ndarray | None = None

    @property
    def triangle_count(self):
        return int(self.triangles.shape[0])


def depth_from_disparity(disparity, a=0.9, b=0.1):
    """depth = 1 / (a * disparity + b); a > 0, b >= 0 keeps depth finite."""
    if a <= 0 or b < 0:
        raise ConfigError(f"disparity-to-depth coefficients invalid: a={a}, b={b}")
    return 1.0 / (a * np.asarray(disparity, dtype=np.float64) + b)


def ldi_to_mesh(ldi, camera, disp_a=0.9, disp_b=0.1):
    """One vertex per LDI pixel; two triangles per 2x2 cell of mutually
    linked pixels, split along the top-left -> bottom-right diagonal."""
    ids = ldi.alive_ids()
    remap = np.full(ids.max() + 1 if ids.size else 1, -1, dtype=np.int64)
    remap[ids] = np.arange(ids.size)
    xs = ldi._x[ids].astype(np.float64)
    ys = ldi._y[ids].astype(np.float64)
    depths = depth_from_disparity(ldi._disp[ids], disp_a, disp_b)
    vertices = camera.unproject(xs, ys, depths)
    colors = ldi._color[ids].astype(np.float32) / 255.0
    layers = np.zeros(ids.size, dtype=np.float32)
    for stack in ldi.index.values():
        for depth_idx, pid in enumerate(stack):
            if remap[pid] >= 0:
                layers[remap[pid]] = depth_idx

    links = ldi._links
    tris = []
    for p in ids.tolist():
        r = links[p, RIGHT]
        d = links[p, DOWN]
        if r == 0xFFFFFFFF or d == 0xFFFFFFFF:
            continue
        rd = links[r, DOWN]
        dr = links[d, RIGHT]
        if rd == 0xFFFFFFFF or rd != dr:
            continue
        a, b, c, e = remap[p], remap[r], remap[d], remap[rd]
        tris.append((a, c, e))  # top-left, bottom-left, bottom-right
        tris.append((a, e, b))  # top-left, bottom-right, top-right
    triangles = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
    if triangles.size:
        v = vertices
        ab = v[triangles[:, 1]] - v[triangles[:, 0]]
        ac = v[triangles[:, 2]] - v[triangles[:, 0]]
        area2 = np.linalg.norm(np.cross(ab, ac), axis=1)
        triangles = triangles[area2 > 1e-12]
    return TexturedMesh(vertices=vertices, colors=colors, triangles=triangles, layers=layers)


def render_view(mesh, camera, width, height, near=1e-6):
    """Z-buffered perspective render.

    Returns (image uint8 (H, W, 3), depth float64 (H, W) with +inf at
    uncovered pixels, coverage bool). Triangles with any vertex at or behind
    the near plane are dropped.
    """
    img = np.zeros((height, width, 3), dtype=np.uint8)
    depth = np.full((height, width), np.inf)
    cover = np.zeros((height, width), dtype=bool)
    if mesh.triangle_count == 0 or mesh.vertices.shape[0] == 0:
        return img, depth, cover
    u, v, z = camera.project(mesh.vertices)
    ok = z > near
    tri_ok = ok[mesh.triangles].all(axis=1)
    tris = mesh.triangles[tri_ok]
    if tris.shape[0] == 0:
        return img, depth, cover
    fimg, depth, cover = _kernels.rasterize(
        u, v, z, mesh.colors.astype(np.float64), tris, width, height
    )
    img = np.clip(np.rint(fimg * 255.0), 0, 255).astype(np.uint8)
    return img, depth, cover


def naive_warp(color, disparity, camera_src, camera_dst, disp_a=0.9, disp_b=0.1):
    """Forward point-splat of an RGB-D image to a target view.

    Each source pixel lands on its rounded target pixel; the nearest
    candidate wins. Returns (image uint8, hole mask bool: uncovered pixels).
    """
    color = np.asarray(color)
    disparity = np.asarray(disparity, dtype=np.float32)
    h, w = disparity.shape
    ys, xs = np.mgrid[0:h, 0:w]
    depths = depth_from_disparity(disparity.reshape(-1), disp_a, disp_b)
    world = camera_src.unproject(xs.reshape(-1), ys.reshape(-1), depths)
    u, v, z = camera_dst.project(world)
    ui = np.rint(u).astype(np.int64)
    vi = np.rint(v).astype(np.int64)
    keep = (z > 1e-6) & (ui >= 0) & (ui < w) & (vi >= 0) & (vi < h)
    ui, vi, z = ui[keep], vi[keep], z[keep]
    cols = color.reshape(-1, 3)[keep]
    # stable far-to-near ordering: later (nearer) writes win deterministically
    order = np.argsort(-z, kind="stable")
    out = np.zeros((h, w, 3), dtype=np.uint8)
    covered = np.zeros((h, w), dtype=bool)
    out[vi[order], ui[order]] = cols[order]
    covered[vi[order], ui[order]] = True
    return out, ~covered


def parse_trajectory(spec):
    """Validated trajectory dict from JSON text or a dict.

    Types: lateral (x sweep), dolly (z sweep), orbit (yaw arc around a focus
    point), poses (explicit list of {rotation, translation}).
    """
    if isinstance(spec, (str, bytes)):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InputError(f"trajectory is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict) or "type" not in spec:
        raise InputError("trajectory spec needs a 'type' field")
    kind = spec["type"]
    if kind not in ("lateral", "dolly", "orbit", "poses"):
        raise InputError(f"unknown trajectory type {kind!r}")
    frames = int(spec.get("frames", 1 if kind == "poses" else 0))
    if kind == "poses":
        poses = spec.get("poses")
        if not isinstance(poses, list) or not poses:
            raise InputError("poses trajectory needs a non-empty 'poses' list")
    elif frames < 0:
        raise InputError("frames must be >= 0")
    return spec


def trajectory_cameras(spec, base_camera):
    """Deterministic camera sequence for a parsed trajectory spec."""
    spec = parse_trajectory(spec)
    kind = spec["type"]
    if kind == "poses":
        cams = []
        for pose in spec["poses"]:
            cams.append(
                base_camera.moved(
                    rotation=np.asarray(pose["rotation"], dtype=np.float64),
                    translation=np.asarray(pose["translation"], dtype=np.float64),
                )
            )
        return cams
    frames = int(spec.get("frames", 0))
    if frames == 0:
        return []
    if kind in ("lateral", "dolly"):
        amplitude = float(spec.get("amplitude", 0.05))
        offsets = np.linspace(-amplitude, amplitude, frames) if frames > 1 else np.zeros(1)
        axis = 0 if kind == "lateral" else 2
        cams = []
        for t in offsets:
            delta = np.zeros(3)
            delta[axis] = t
            cams.append(base_camera.moved(translation=base_camera.translation + delta))
        return cams
    # orbit: yaw around the focus point on the base camera's optical axis
    degrees = float(spec.get("degrees", 20.0))
    focus = float(spec.get("focus_depth", 2.0))
    pivot = base_camera.translation + base_camera.rotation @ np.array([0.0, 0.0, focus])
    angles = np.linspace(-degrees / 2.0, degrees / 2.0, frames) if frames > 1 else np.zeros(1)
    cams = []
    for deg in angles:
        a = math.radians(deg)
        yaw = np.array(
            [[math.cos(a), 0.0, math.sin(a)], [0.0, 1.0, 0.0], [-math.sin(a), 0.0, math.cos(a)]]
        )
        rot = yaw @ base_camera.rotation
        trans = pivot - rot @ np.array([0.0, 0.0, focus])
        cams.append(base_camera.moved(rotation=rot, translation=trans))
    return cams


def render_trajectory(mesh, spec, base_camera, width, height):
    """Render every camera on the trajectory; returns a list of
    (image, depth, coverage) triples."""
    return [
        render_view(mesh, cam, width, height)
        for cam in trajectory_cameras(spec, base_camera)
    ]


# -- export -------------------------------------------------------------------


def _pad_to(data, multiple, filler):
    rem = len(data) % multiple
    return data if rem == 0 else data + filler * (multiple - rem)


def export_glb(mesh, path=None):
    """Binary glTF 2.0 with float32 POSITION/COLOR_0 and u32 indices.

    Vertices are converted to the glTF axis convention. Per-vertex layer
    indices, when the mesh carries them, travel as a custom float scalar
    attribute `_LAYER`. Returns the bytes; writes them when a path is given.
    Output bytes are a pure function of the mesh.
    """
    verts = (mesh.vertices @ GLTF_FLIP).astype("<f4")
    colors = mesh.colors.astype("<f4")
    indices = mesh.triangles.astype("<u4")
    layers = None if mesh.layers is None else np.asarray(mesh.layers, dtype="<f4")
    blobs = [verts.tobytes(), colors.tobytes()]
    if layers is not None:
        blobs.append(layers.tobytes())
    blobs.append(indices.tobytes())
    offsets = np.cumsum([0] + [len(b) for b in blobs])[:-1].tolist()
    bin_chunk = _pad_to(b"".join(blobs), 4, b"\x00")

    n = int(verts.shape[0])
    if n:
        vmin = verts.min(axis=0).astype(float).tolist()
        vmax = verts.max(axis=0).astype(float).tolist()
    else:
        vmin = vmax = [0.0, 0.0, 0.0]
    attributes = {"POSITION": 0, "COLOR_0": 1}
    views = [
        {"buffer": 0, "byteOffset": offsets[0], "byteLength": len(blobs[0]), "target": 34962},
        {"buffer": 0, "byteOffset": offsets[1], "byteLength": len(blobs[1]), "target": 34962},
    ]
    accessors = [
        {"bufferView": 0, "componentType": 5126, "count": n, "type": "VEC3", "min": vmin, "max": vmax},
        {"bufferView": 1, "componentType": 5126, "count": n, "type": "VEC3"},
    ]
    if layers is not None:
        attributes["_LAYER"] = 2
        views.append(
            {"buffer": 0, "byteOffset": offsets[2], "byteLength": len(blobs[2]), "target": 34962}
        )
        accessors.append({"bufferView": 2, "componentType": 5126, "count": n, "type": "SCALAR"})
    idx_view = len(views)
    idx_accessor = len(accessors)
    views.append(
        {"buffer": 0, "byteOffset": offsets[-1], "byteLength": len(blobs[-1]), "target": 34963}
    )
    accessors.append(
        {"bufferView": idx_view, "componentType": 5125, "count": int(indices.size), "type": "SCALAR"}
    )
    gltf = {
        "asset": {"version": "2.0", "generator": "ldiphoto"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [
            {
                "primitives": [
                    {"attributes": attributes, "indices": idx_accessor, "mode": 4}
                ]
            }
        ],
        "buffers": [{"byteLength": len(bin_chunk)}],
        "bufferViews": views,
        "accessors": accessors,
    }
    json_chunk = _pad_to(json.dumps(gltf, separators=(",", ":")).encode("utf-8"), 4, b" ")
    total = 12 + 8 + len(json_chunk) + 8 + len(bin_chunk)
    blob = b"".join(
        [
            struct.pack("<III", 0x46546C67, 2, total),
            struct.pack("<II", len(json_chunk), 0x4E4F534A),
            json_chunk,
            struct.pack("<II", len(bin_chunk), 0x004E4942),
            bin_chunk,
        ]
    )
    if path is not None:
        with open(path, "wb") as f:
            f.write(blob)
    return blob


def import_glb(data):
    """Read back a glb produced by export_glb (axis flip inverted)."""
    if not isinstance(data, bytes):
        with open(data, "rb") as f:
            data = f.read()
    if len(data) < 12 or struct.unpack_from("<I", data, 0)[0] != 0x46546C67:
        raise InputError("not a glb file")
    off = 12
    json_chunk = bin_chunk = None
    while off + 8 <= len(data):
        length, kind = struct.unpack_from("<II", data, off)
        off += 8
        payload = data[off : off + length]
        off += length
        if kind == 0x4E4F534A:
            json_chunk = payload
        elif kind == 0x004E4942:
            bin_chunk = payload
    if json_chunk is None or bin_chunk is None:
        raise InputError("glb missing JSON or BIN chunk")
    gltf = json.loads(json_chunk)
    prim = gltf["meshes"][0]["primitives"][0]

    def accessor_array(idx, dtype, width):
        acc = gltf["accessors"][idx]
        view = gltf["bufferViews"][acc["bufferView"]]
        start = view.get("byteOffset", 0) + acc.get("byteOffset", 0)
        count = acc["count"] * width
        arr = np.frombuffer(bin_chunk, dtype=dtype, count=count, offset=start)
        return arr.reshape(acc["count"], width) if width > 1 else arr

    verts = accessor_array(prim["attributes"]["POSITION"], "<f4", 3).astype(np.float64)
    colors = accessor_array(prim["attributes"]["COLOR_0"], "<f4", 3).astype(np.float32)
    tris = accessor_array(prim["indices"], "<u4", 1).astype(np.int64).reshape(-1, 3)
    layers = None
    if "_LAYER" in prim["attributes"]:
        layers = accessor_array(prim["attributes"]["_LAYER"], "<f4", 1).astype(np.float32)
    return TexturedMesh(vertices=verts @ GLTF_FLIP, colors=colors, triangles=tris, layers=layers)


def export_obj(mesh, path):
    """OBJ with per-vertex colors appended to `v` lines (common extension)."""
    lines = []
    for pos, col in zip(mesh.vertices, mesh.colors):
        lines.append(
            "v "
            + " ".join(f"{v:.9g}" for v in pos)
            + " "
            + " ".join(f"{float(c):.9g}" for c in col)
        )
    for a, b, c in mesh.triangles:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as f:
        f.write(text)
    return text
