import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from ldiphoto.cli import main
from ldiphoto.fileio import parse_config_text, read_pfm, write_color_png, write_pfm

from scenes import flat_scene, square_scene


@pytest.fixture()
def scene_files(tmp_path):
    color, disp, _rect = square_scene(h=48, w=48, x0=14, y0=14, x1=34, y1=34)
    cpath = tmp_path / "color.png"
    dpath = tmp_path / "depth.pfm"
    write_color_png(cpath, color)
    write_pfm(dpath, disp)
    return cpath, dpath


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestBuild:
    def test_flat_scene_zero_edges_single_layer(self, tmp_path):
        color, disp = flat_scene(h=32, w=32)
        write_color_png(tmp_path / "c.png", color)
        write_pfm(tmp_path / "d.pfm", disp)
        out = tmp_path / "run"
        assert run_cli("build", "--color", tmp_path / "c.png", "--depth", tmp_path / "d.pfm", "--out", out) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["edges_initial"] == 0
        assert report["max_layers"] == 1
        assert report["ldi_pixels"] == 32 * 32

    def test_two_layer_scene_artifacts_and_report(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        out = tmp_path / "run"
        assert run_cli(
            "build", "--color", cpath, "--depth", dpath, "--out", out,
            "--dump-intermediates",
        ) == 0
        for name in ("ldi.bin", "mesh.glb", "mesh.obj", "report.json", "manifest.json",
                     "disparity_normalized.pfm", "disparity_filtered.pfm", "edges_overlay.png"):
            assert (out / name).exists(), name
        assert list(out.glob("regions_edge*.png")), "region overlay dumps missing"
        report = json.loads((out / "report.json").read_text())
        assert report["edges_initial"] == 1
        assert report["max_layers"] == 2
        assert report["recursion_levels"] == 1
        assert set(report["mesh"]) == {"vertices", "triangles"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["artifacts"]["glb"] == "mesh.glb"

    def test_corrupt_png_exit_2(self, tmp_path):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"not a png")
        write_pfm(tmp_path / "d.pfm", np.full((8, 8), 0.5, dtype=np.float32))
        assert run_cli("build", "--color", bad, "--depth", tmp_path / "d.pfm", "--out", tmp_path / "o") == 2

    def test_bad_config_exit_3(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("threshold = -1\n")
        assert run_cli("build", "--color", cpath, "--depth", dpath, "--out", tmp_path / "o", "--config", cfg) == 3

    def test_unknown_config_key_exit_3(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("no_such_key = 1\n")
        assert run_cli("build", "--color", cpath, "--depth", dpath, "--out", tmp_path / "o", "--config", cfg) == 3

    def test_determinism_bit_identical_artifacts(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli("build", "--color", cpath, "--depth", dpath, "--out", out1) == 0
        assert run_cli("build", "--color", cpath, "--depth", dpath, "--out", out2) == 0
        assert (out1 / "ldi.bin").read_bytes() == (out2 / "ldi.bin").read_bytes()
        assert (out1 / "mesh.glb").read_bytes() == (out2 / "mesh.glb").read_bytes()

    def test_depth_png16_input(self, tmp_path):
        color, disp, _ = square_scene(h=32, w=32, x0=8, y0=8, x1=22, y1=22)
        write_color_png(tmp_path / "c.png", color)
        d16 = (disp * 65535).astype(np.uint16)
        Image.fromarray(d16).save(tmp_path / "d.png")
        out = tmp_path / "run"
        assert run_cli("build", "--color", tmp_path / "c.png", "--depth", tmp_path / "d.png", "--out", out) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["edges_initial"] == 1


class TestRender:
    def test_render_from_glb_and_ldi(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        out = tmp_path / "run"
        run_cli("build", "--color", cpath, "--depth", dpath, "--out", out)
        traj = tmp_path / "traj.json"
        traj.write_text(json.dumps({"type": "orbit", "frames": 30, "degrees": 8, "width": 48, "height": 48}))
        frames = tmp_path / "frames"
        assert run_cli("render", out / "mesh.glb", traj, "--out", frames) == 0
        assert len(list(frames.glob("frame_*.png"))) == 30
        frames2 = tmp_path / "frames_ldi"
        assert run_cli("render", out / "ldi.bin", traj, "--out", frames2) == 0
        a = (frames / "frame_0000.png").read_bytes()
        b = (frames2 / "frame_0000.png").read_bytes()
        assert a == b  # same scene through either container

    def test_lateral_endpoints_match_direct(self, scene_files, tmp_path):
        import ldiphoto as lp

        cpath, dpath = scene_files
        out = tmp_path / "run"
        run_cli("build", "--color", cpath, "--depth", dpath, "--out", out)
        traj = tmp_path / "traj.json"
        traj.write_text(json.dumps({"type": "lateral", "frames": 2, "amplitude": 0.03,
                                    "width": 48, "height": 48}))
        frames = tmp_path / "frames"
        assert run_cli("render", out / "mesh.glb", traj, "--out", frames) == 0
        mesh = lp.import_glb(out / "mesh.glb")
        cam = lp.Camera.default(48, 48)
        img, _, _ = lp.render_view(mesh, cam.moved(translation=np.array([-0.03, 0, 0])), 48, 48)
        saved = np.asarray(Image.open(frames / "frame_0000.png"))
        assert np.array_equal(saved, img)

    def test_empty_trajectory(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        out = tmp_path / "run"
        run_cli("build", "--color", cpath, "--depth", dpath, "--out", out)
        traj = tmp_path / "traj.json"
        traj.write_text(json.dumps({"type": "lateral", "frames": 0}))
        frames = tmp_path / "frames"
        assert run_cli("render", out / "mesh.glb", traj, "--out", frames) == 0
        assert list(frames.glob("frame_*.png")) == []


class TestCompare:
    def test_synthetic_scene_hole_statistics(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        out = tmp_path / "cmp"
        assert run_cli(
            "compare", "--color", cpath, "--depth", dpath, "--out", out,
            "--baseline-px", "8", "--frames", "3",
        ) == 0
        doc = json.loads((out / "holes.json").read_text())
        frames = doc["frames"]
        assert len(frames) == 3
        assert set(frames[0]) == {"baseline_px", "naive_holes", "pipeline_holes"}
        assert frames[0]["baseline_px"] == 0.0
        assert frames[0]["naive_holes"] == 0
        assert all(f["pipeline_holes"] == 0 for f in frames)
        assert frames[-1]["naive_holes"] > 0
        assert len(list(out.glob("compare_*.png"))) == 3


class TestMetricsCmd:
    def test_metrics_report(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        a = rng.integers(0, 256, (24, 24, 3)).astype(np.uint8)
        write_color_png(tmp_path / "a.png", a)
        write_color_png(tmp_path / "b.png", a)
        mask = np.zeros((24, 24, 3), dtype=np.uint8)
        mask[:12] = 255
        write_color_png(tmp_path / "s.png", mask)
        assert run_cli("metrics", tmp_path / "a.png", tmp_path / "b.png",
                       "--synthesis-mask", tmp_path / "s.png", "--out", tmp_path / "m.json") == 0
        doc = json.loads((tmp_path / "m.json").read_text())
        assert doc["ssim"] == pytest.approx(1.0)
        assert doc["psnr"] == float("inf") or doc["psnr"] == "Infinity"
        assert doc["l_synthesis"] == 0.0


class TestFileio:
    def test_pfm_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        arr = rng.random((9, 13)).astype(np.float32)
        write_pfm(tmp_path / "x.pfm", arr)
        assert np.array_equal(read_pfm(tmp_path / "x.pfm"), arr)

    def test_config_text_parsing(self):
        parsed = parse_config_text("# comment\nthreshold = 0.05\n\nn_syn = 12 # inline\n")
        assert parsed == {"threshold": "0.05", "n_syn": "12"}

    def test_config_file_values_applied(self, scene_files, tmp_path):
        cpath, dpath = scene_files
        cfg = tmp_path / "ok.cfg"
        cfg.write_text("n_syn = 4\nn_ctx = 6\ndilate = 1\n")
        out = tmp_path / "run"
        assert run_cli("build", "--color", cpath, "--depth", dpath, "--out", out, "--config", cfg) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["n_syn"] == 4
        assert report["config"]["dilate"] == 1
