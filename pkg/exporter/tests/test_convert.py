import numpy as np
import pytest
import yaml
from PIL import Image

from gradexport.convert import ConversionError, convert_annotations, write_manifest

# Cross-component check only: the primary toolkit validates the produced
# manifest through its public loader.
from posebias.dataset import load_manifest


def build_legacy_fixture(root, n_frames=2, bad_rotation_frame=None):
    obj_dir = root / "data" / "01"
    (obj_dir / "rgb").mkdir(parents=True)
    models = root / "models"
    models.mkdir()

    gt = {}
    info = {}
    for f in range(n_frames):
        r = np.eye(3)
        if f == bad_rotation_frame:
            r = np.diag([1.0, 1.0, -1.0])  # det -1
        gt[f] = [{
            "cam_R_m2c": [float(x) for x in r.reshape(-1)],
            "cam_t_m2c": [0.0, 0.0, 900.0 + f],
            "obj_id": 1,
        }]
        info[f] = {"cam_K": [572.4, 0, 325.3, 0, 573.6, 242.0, 0, 0, 1]}
        Image.new("RGB", (64, 48), (90, 90, 90)).save(obj_dir / "rgb" / f"{f:04d}.png")
    (obj_dir / "gt.yml").write_text(yaml.safe_dump(gt))
    (obj_dir / "info.yml").write_text(yaml.safe_dump(info))
    (models / "models_info.yml").write_text(yaml.safe_dump({1: {"diameter": 120.5}}))
    (models / "obj_01.ply").write_text(
        "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\n"
        "property float y\nproperty float z\nend_header\n"
        "0 0 0\n10 0 0\n0 10 0\n")
    return root


class TestConvert:
    def test_fixture_round_trip_through_primary_loader(self, tmp_path):
        build_legacy_fixture(tmp_path / "legacy")
        out = tmp_path / "manifest.json"
        doc = convert_annotations(tmp_path / "legacy", 1, out)
        write_manifest(doc, out)
        manifest = load_manifest(out)
        assert len(manifest.frames) == 2
        assert manifest.model_info.diameter == 120.5
        assert manifest.intrinsics.fx == 572.4
        assert manifest.frames[0].image_path.exists()
        assert manifest.model_path.exists()
        assert np.allclose(manifest.frames[1].pose.translation, [0, 0, 901])

    def test_empty_gt_rejected(self, tmp_path):
        root = build_legacy_fixture(tmp_path / "legacy")
        (root / "data" / "01" / "gt.yml").write_text("")
        with pytest.raises(ConversionError, match="empty"):
            convert_annotations(root, 1, tmp_path / "m.json")

    def test_reflection_rotation_rejected(self, tmp_path):
        root = build_legacy_fixture(tmp_path / "legacy", bad_rotation_frame=1)
        with pytest.raises(ConversionError, match="determinant"):
            convert_annotations(root, 1, tmp_path / "m.json")

    def test_missing_diameter_rejected(self, tmp_path):
        root = build_legacy_fixture(tmp_path / "legacy")
        (root / "models" / "models_info.yml").write_text(yaml.safe_dump({2: {"diameter": 1.0}}))
        with pytest.raises(ConversionError, match="diameter"):
            convert_annotations(root, 1, tmp_path / "m.json")

    def test_symmetric_flag(self, tmp_path):
        build_legacy_fixture(tmp_path / "legacy")
        out = tmp_path / "manifest.json"
        doc = convert_annotations(tmp_path / "legacy", 1, out, symmetric=True)
        write_manifest(doc, out)
        assert load_manifest(out).model_info.symmetric is True
