import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from posebias.cli import main
from posebias.dataset import load_manifest
from posebias.pngio import read_png, write_png
from posebias.tensorfile import read_tensor, write_tensor

SPEC_TOML = """\
frame_count = 6
seed = 7
distance_range_mm = [800.0, 1000.0]
lateral_range_mm = 15.0
cone_half_angle_rad = 0.25

[intrinsics]
fx = 500.0
fy = 500.0
px = 160.0
py = 120.0
width = 320
height = 240

[board]
outer_offsets = [120.0, 100.0, 0.0]
inner_offsets = [70.0, 60.0, 0.0]
"""

CORNERS_TOML = """\
object_id = "synthetic_board"
outer_offsets = [120.0, 100.0, 0.0]
inner_offsets = [70.0, 60.0, 0.0]
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def synth_dir(tmp_path, runner):
    spec = tmp_path / "spec.toml"
    spec.write_text(SPEC_TOML)
    out = tmp_path / "synth"
    result = runner.invoke(main, ["synth", "--spec", str(spec), "--out", str(out)])
    assert result.exit_code == 0, result.output + str(result.exception)
    return out


@pytest.fixture
def corners_file(tmp_path):
    p = tmp_path / "corners.toml"
    p.write_text(CORNERS_TOML)
    return p


class TestSynth:
    def test_summary_and_frames(self, synth_dir, runner):
        m = load_manifest(synth_dir / "manifest.json")
        assert len(m.frames) == 6

    def test_seed_determinism(self, tmp_path, runner):
        spec = tmp_path / "spec.toml"
        spec.write_text(SPEC_TOML)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert runner.invoke(main, ["synth", "--spec", str(spec),
                                        "--out", str(out)]).exit_code == 0
            outs.append(out)
        for rel in sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file()):
            assert (outs[0] / rel).read_bytes() == (outs[1] / rel).read_bytes(), rel


class TestMask:
    def test_end_to_end(self, synth_dir, corners_file, runner, tmp_path):
        out = tmp_path / "masked"
        result = runner.invoke(main, ["mask", str(synth_dir / "manifest.json"),
                                      str(corners_file), "--out", str(out)])
        assert result.exit_code == 0
        summary = json.loads(result.output)
        assert summary["frames_masked"] == 6
        assert len(list(out.glob("*.png"))) >= 6

    def test_missing_corner_config_exit_1(self, synth_dir, runner, tmp_path):
        bad = tmp_path / "empty.toml"
        bad.write_text("object_id = 'x'\n")
        result = runner.invoke(main, ["mask", str(synth_dir / "manifest.json"),
                                      str(bad), "--out", str(tmp_path / "o")])
        assert result.exit_code == 1
        assert "error" in json.loads(result.stderr)

    def test_unknown_flag_exit_2(self, runner):
        result = runner.invoke(main, ["mask", "--no-such-flag"])
        assert result.exit_code == 2


class TestDensity:
    def test_single_mask_equals_binarized(self, runner, tmp_path, rng):
        masks_dir = tmp_path / "masks"
        masks_dir.mkdir()
        mask = (rng.integers(0, 2, size=(6, 8)) * 255).astype(np.uint8)
        write_png(mask, masks_dir / "m0.png")
        out = tmp_path / "density"
        result = runner.invoke(main, ["density", "--masks-dir", str(masks_dir),
                                      "--out", str(out)])
        assert result.exit_code == 0
        assert np.array_equal(read_png(out.with_suffix(".png")), mask)

    def test_two_disjoint_half_gray(self, runner, tmp_path):
        masks_dir = tmp_path / "masks"
        masks_dir.mkdir()
        a = np.zeros((4, 4), dtype=np.uint8)
        a[0, 0] = 255
        b = np.zeros((4, 4), dtype=np.uint8)
        b[3, 3] = 255
        write_png(a, masks_dir / "a.png")
        write_png(b, masks_dir / "b.png")
        out = tmp_path / "density"
        assert runner.invoke(main, ["density", "--masks-dir", str(masks_dir),
                                    "--out", str(out)]).exit_code == 0
        png = read_png(out.with_suffix(".png"))
        assert png[0, 0] == 128 and png[3, 3] == 128 and png.sum() == 256
        tensor = read_tensor(out.with_suffix(".f32t"))
        assert tensor[0, 0] == np.float32(0.5)

    def test_from_manifest_matches_library(self, synth_dir, corners_file, runner, tmp_path):
        from posebias.masking import accumulate_density, mask_for_pose, MaskGeometry
        from posebias.masking import load_corner_config
        out = tmp_path / "density"
        result = runner.invoke(main, ["density", "--manifest", str(synth_dir / "manifest.json"),
                                      "--corners", str(corners_file), "--out", str(out)])
        assert result.exit_code == 0
        manifest = load_manifest(synth_dir / "manifest.json")
        _, corners = load_corner_config(corners_file)
        k = manifest.intrinsics
        expected = accumulate_density(
            mask_for_pose(corners, MaskGeometry.FRAME, f.pose, k, k.width, k.height)
            for f in manifest.frames)
        got = read_tensor(out.with_suffix(".f32t"))
        assert np.max(np.abs(got - expected.values)) < 1e-7


def write_predictions(path, manifest, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for frame_id, pose in rows:
            w.writerow([frame_id, *pose.rotation.reshape(-1), *pose.translation])


class TestEval:
    def test_gt_predictions_accuracy_one(self, synth_dir, runner, tmp_path):
        manifest = load_manifest(synth_dir / "manifest.json")
        pred = tmp_path / "pred.csv"
        write_predictions(pred, manifest, [(f.frame_id, f.pose) for f in manifest.frames])
        result = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                      "--pred", str(pred)])
        assert result.exit_code == 0, result.output + str(result.exception)
        summary = json.loads(result.output)
        assert summary["accuracy"] == 1.0
        assert summary["metric"] == "ADD"

    def test_empty_predictions_accuracy_zero(self, synth_dir, runner, tmp_path):
        pred = tmp_path / "pred.csv"
        pred.write_text("")
        result = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                      "--pred", str(pred)])
        assert result.exit_code == 0
        assert json.loads(result.output)["accuracy"] == 0.0

    def test_planted_half_correct(self, synth_dir, runner, tmp_path):
        from posebias.geometry import Pose
        manifest = load_manifest(synth_dir / "manifest.json")
        d = manifest.model_info.diameter
        rows = []
        for i, f in enumerate(manifest.frames):
            if i % 2 == 0:
                rows.append((f.frame_id, f.pose))  # exact -> correct
            else:
                off = Pose(f.pose.rotation, f.pose.translation + np.array([d, 0, 0]))
                rows.append((f.frame_id, off))     # error d >> 0.1 d -> incorrect
        pred = tmp_path / "pred.csv"
        write_predictions(pred, manifest, rows)
        result = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                      "--pred", str(pred), "--out", str(tmp_path / "report")])
        assert result.exit_code == 0
        assert json.loads(result.output)["accuracy"] == 0.5
        with open(tmp_path / "report.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(manifest.frames)
        assert {r["correct"] for r in rows} == {"true", "false"}

    def test_skip_missing_flag(self, synth_dir, runner, tmp_path):
        manifest = load_manifest(synth_dir / "manifest.json")
        pred = tmp_path / "pred.csv"
        write_predictions(pred, manifest, [(manifest.frames[0].frame_id,
                                            manifest.frames[0].pose)])
        base = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                    "--pred", str(pred)])
        assert json.loads(base.output)["accuracy"] == pytest.approx(1 / 6)
        skip = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                    "--pred", str(pred), "--skip-missing"])
        assert json.loads(skip.output)["accuracy"] == 1.0

    def test_cross_average(self, synth_dir, runner, tmp_path):
        manifest = load_manifest(synth_dir / "manifest.json")
        pred = tmp_path / "pred.csv"
        write_predictions(pred, manifest, [(f.frame_id, f.pose) for f in manifest.frames])
        other = tmp_path / "other.json"
        other.write_text(json.dumps({"accuracy": 0.5}))
        result = runner.invoke(main, ["eval", str(synth_dir / "manifest.json"),
                                      "--pred", str(pred), "--cross-with", str(other)])
        assert json.loads(result.output)["cross_average"] == 0.75


class TestSaliency:
    def test_vanilla_zero_gradient_degenerate(self, runner, tmp_path):
        grad = tmp_path / "g.f32t"
        write_tensor(np.zeros((8, 10, 3), dtype=np.float32), grad)
        out = tmp_path / "map"
        result = runner.invoke(main, ["saliency", "--mode", "vanilla",
                                      "--grad", str(grad), "--out", str(out)])
        assert result.exit_code == 0
        meta = json.loads(result.output)
        assert meta["degenerate"] is True
        assert read_png(tmp_path / "map.png").sum() == 0

    def test_gradcam_reg_golden(self, runner, tmp_path, rng):
        # Golden bytes computed from the brute-force oracle, then frozen by
        # rendering through the same PNG writer.
        from test_saliency import gradcam_regression_bruteforce
        from posebias.saliency import finalize_map
        fs, gs = [], []
        for i in range(3):
            f = rng.normal(size=(4, 5, 2)).astype(np.float32)
            g = rng.normal(size=(4, 5, 2)).astype(np.float32)
            write_tensor(f, tmp_path / f"f{i}.f32t")
            write_tensor(g, tmp_path / f"g{i}.f32t")
            fs.append(f.astype(float))
            gs.append(g.astype(float))
        out = tmp_path / "map"
        args = ["saliency", "--mode", "gradcam-reg", "--size", "10x8", "--out", str(out)]
        for i in range(3):
            args += ["--features", str(tmp_path / f"f{i}.f32t"),
                     "--grad", str(tmp_path / f"g{i}.f32t")]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output + str(result.exception)
        f_t = np.concatenate(fs, axis=2)
        g_t = np.concatenate(gs, axis=2)
        expected_raw = gradcam_regression_bruteforce(f_t, g_t)
        expected = finalize_map(expected_raw, 10, 8)
        write_png(expected.rendered, tmp_path / "golden.png")
        assert (tmp_path / "map.png").read_bytes() == (tmp_path / "golden.png").read_bytes()

    def test_per_component_outputs(self, runner, tmp_path, rng):
        for i in range(3):
            write_tensor(rng.normal(size=(4, 4, 2)).astype(np.float32),
                         tmp_path / f"f{i}.f32t")
        for name in ("x", "y", "z"):
            for i in range(3):
                write_tensor(rng.normal(size=(4, 4, 2)).astype(np.float32),
                             tmp_path / f"g{name}{i}.f32t")
        out = tmp_path / "map"
        args = ["saliency", "--mode", "gradcam-reg", "--out", str(out)]
        for i in range(3):
            args += ["--features", str(tmp_path / f"f{i}.f32t")]
        for name in ("x", "y", "z"):
            for i in range(3):
                args += ["--grad", str(tmp_path / f"g{name}{i}.f32t")]
        result = runner.invoke(main, args)
        assert result.exit_code == 0, result.output + str(result.exception)
        meta = json.loads(result.output)
        assert meta["components"] == ["x", "y", "z", "l2-combined"]
        for name in ("x", "y", "z"):
            assert (tmp_path / f"map_{name}.png").exists()

    def test_mismatched_shapes_exit_1(self, runner, tmp_path, rng):
        write_tensor(rng.normal(size=(4, 4, 2)).astype(np.float32), tmp_path / "a.f32t")
        write_tensor(rng.normal(size=(4, 4, 3)).astype(np.float32), tmp_path / "b.f32t")
        result = runner.invoke(main, ["saliency", "--mode", "gradcam-cls",
                                      "--features", str(tmp_path / "a.f32t"),
                                      "--grad", str(tmp_path / "b.f32t"),
                                      "--out", str(tmp_path / "m")])
        assert result.exit_code == 1
        assert "error" in json.loads(result.stderr)

    def test_gradcam_cls(self, runner, tmp_path, rng):
        a = rng.normal(size=(3, 3, 4)).astype(np.float32)
        g = rng.normal(size=(3, 3, 4)).astype(np.float32)
        write_tensor(a, tmp_path / "a.f32t")
        write_tensor(g, tmp_path / "g.f32t")
        result = runner.invoke(main, ["saliency", "--mode", "gradcam-cls",
                                      "--features", str(tmp_path / "a.f32t"),
                                      "--grad", str(tmp_path / "g.f32t"),
                                      "--out", str(tmp_path / "m")])
        assert result.exit_code == 0
        assert (tmp_path / "m.png").exists() and (tmp_path / "m.json").exists()
