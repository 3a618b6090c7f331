"""Regenerate the viewer test fixtures through the ldiphoto CLI.

Creates a synthetic two-layer scene, builds it with `ldiphoto build`,
renders one frame at a viewer-style exported pose with `ldiphoto render`,
and records the metadata the tests assert against. The viewer is developed
and tested purely against these documented artifacts.

Run from frontend/:  python3 scripts/make_fixtures.py
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SIZE = 128


def write_pfm(path, arr):
    arr = np.asarray(arr, dtype=np.float32)
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode())
        f.write(b"-1.0\n")
        f.write(arr[::-1].tobytes())


def make_scene(tmp):
    rng = np.random.default_rng(17)
    color = rng.uniform(40, 220, size=(SIZE, SIZE, 3))
    for _ in range(2):
        color = (
            color
            + np.roll(color, 1, 0)
            + np.roll(color, -1, 0)
            + np.roll(color, 1, 1)
            + np.roll(color, -1, 1)
        ) / 5.0
    color = color.astype(np.uint8)
    color[40:88, 40:88] = rng.integers(120, 255, size=(48, 48, 3), dtype=np.uint8)
    disp = np.full((SIZE, SIZE), 0.2, dtype=np.float32)
    disp[40:88, 40:88] = 0.8
    Image.fromarray(color, "RGB").save(tmp / "color.png")
    write_pfm(tmp / "depth.pfm", disp)


def viewer_style_pose():
    """Small yaw+pitch orbit around the scene, like a viewer export."""
    focus = 2.0
    ya, pa = 0.10, 0.04
    yaw = np.array(
        [[math.cos(ya), 0, math.sin(ya)], [0, 1, 0], [-math.sin(ya), 0, math.cos(ya)]]
    )
    pitch = np.array(
        [[1, 0, 0], [0, math.cos(pa), -math.sin(pa)], [0, math.sin(pa), math.cos(pa)]]
    )
    rot = yaw @ pitch
    pivot = np.array([0.0, 0.0, focus])
    trans = pivot + rot @ np.array([0.0, 0.0, -focus])
    return rot, trans


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    f = 0.8 * SIZE
    intrinsics = {"fx": f, "fy": f, "cx": SIZE / 2, "cy": SIZE / 2}
    rot, trans = viewer_style_pose()
    trajectory = {
        "type": "poses",
        "frames": 1,
        "width": SIZE,
        "height": SIZE,
        "intrinsics": intrinsics,
        "poses": [{"rotation": rot.tolist(), "translation": trans.tolist()}],
    }

    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        make_scene(tmp)
        run = tmp / "run"
        subprocess.run(
            [
                "ldiphoto", "build",
                "--color", str(tmp / "color.png"),
                "--depth", str(tmp / "depth.pfm"),
                "--out", str(run),
            ],
            check=True,
        )
        (tmp / "pose.json").write_text(json.dumps(trajectory, indent=2))
        frames = tmp / "frames"
        subprocess.run(
            ["ldiphoto", "render", str(run / "mesh.glb"), str(tmp / "pose.json"),
             "--out", str(frames)],
            check=True,
        )
        report = json.loads((run / "report.json").read_text())
        shutil.copy(run / "mesh.glb", FIXTURES / "scene.glb")
        shutil.copy(frames / "frame_0000.png", FIXTURES / "frame.png")
        (FIXTURES / "pose.json").write_text(json.dumps(trajectory, indent=2))
        (FIXTURES / "meta.json").write_text(
            json.dumps(
                {
                    "triangles": report["mesh"]["triangles"],
                    "vertices": report["mesh"]["vertices"],
                    "width": SIZE,
                    "height": SIZE,
                    "intrinsics": intrinsics,
                },
                indent=2,
            )
        )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    sys.exit(main())
