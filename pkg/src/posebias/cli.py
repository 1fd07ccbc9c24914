"""Command-line entry point: mask / density / eval / saliency / synth.

Exit codes: 0 success, 1 domain error (machine-readable JSON on stderr),
2 usage error. stdout carries only the summary JSON.
"""

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset, masking, metrics, saliency
from .errors import PoseBiasError
from .geometry import Pose
from .pngio import read_png, write_png
from .plyio import read_ply
from .tensorfile import read_tensor, write_tensor


def _fail(message, **extra):
    err = {"error": message, **extra}
    print(json.dumps(err), file=sys.stderr)
    sys.exit(1)


def _emit(summary):
    print(json.dumps(summary, indent=2, sort_keys=True))


def _guard(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PoseBiasError as exc:
            _fail(str(exc), kind=type(exc).__name__)
        except OSError as exc:
            _fail(str(exc), kind="OSError")
    wrapper.__name__ = fn.__name__
    return wrapper


@click.group()
def main():
    """Audit marker-induced bias in 6-DoF pose datasets."""


@main.command("mask")
@click.argument("manifest_path", type=click.Path(exists=True))
@click.argument("corners_config", type=click.Path(exists=True))
@click.option("--geometry", type=click.Choice(["frame", "filled"]), default="frame",
              show_default=True, help="Mask the marker ring or the full board quad.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Output directory.")
@click.option("--jobs", default=1, show_default=True, help="Worker count (results identical for any N).")
@_guard
def cmd_mask(manifest_path, corners_config, geometry, out_dir, jobs):
    """Write marker-masked copies of every frame in MANIFEST_PATH."""
    manifest = dataset.load_manifest(manifest_path)
    _, corners = masking.load_corner_config(corners_config)
    geom = masking.MaskGeometry(geometry)
    summary, density = masking.mask_dataset(manifest, corners, geom, out_dir)
    if density is not None:
        masking.write_density_outputs(density, Path(out_dir) / "density")
    (Path(out_dir) / "run_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _emit(summary)


@main.command("density")
@click.option("--masks-dir", type=click.Path(exists=True), help="Directory of grayscale mask PNGs.")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True))
@click.option("--corners", "corners_config", type=click.Path(exists=True))
@click.option("--geometry", type=click.Choice(["frame", "filled"]), default="frame", show_default=True)
@click.option("--out", "out_prefix", required=True, type=click.Path(), help="Output path prefix.")
@_guard
def cmd_density(masks_dir, manifest_path, corners_config, geometry, out_prefix):
    """Accumulate per-pixel marker density from masks or from a manifest."""
    if masks_dir:
        paths = sorted(Path(masks_dir).glob("*.png"))
        if not paths:
            _fail(f"no PNG masks in {masks_dir}")
        masks = (read_png(p) > 0 for p in paths)
    elif manifest_path and corners_config:
        manifest = dataset.load_manifest(manifest_path)
        _, corners = masking.load_corner_config(corners_config)
        geom = masking.MaskGeometry(geometry)
        k = manifest.intrinsics
        masks = (masking.mask_for_pose(corners, geom, f.pose, k, k.width, k.height)
                 for f in manifest.frames)
    else:
        raise click.UsageError("need --masks-dir or both --manifest and --corners")
    density = masking.accumulate_density(masks)
    meta = masking.write_density_outputs(density, out_prefix)
    _emit(meta)


def _read_predictions(path):
    preds = {}
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip() == "frame_id":
                continue  # optional header
            if len(row) != 13:
                _fail(f"prediction row {row_no} has {len(row)} fields, expected 13")
            frame_id = row[0].strip()
            vals = [float(x) for x in row[1:]]
            r = np.array(vals[:9]).reshape(3, 3)
            t = np.array(vals[9:])
            r_fixed, residual = dataset._reorthonormalize(r)
            if residual > 1e-3:
                _fail(f"prediction row {row_no}: rotation deviates from SO(3) by {residual:.2e}")
            preds[frame_id] = Pose(r_fixed, t)
    return preds


@main.command("eval")
@click.argument("manifest_path", type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True),
              help="CSV: frame_id,r11..r33,tx,ty,tz")
@click.option("--k-m", default=metrics.DEFAULT_KM, show_default=True)
@click.option("--metric", type=click.Choice(["auto", "add", "adds"]), default="auto", show_default=True)
@click.option("--skip-missing", is_flag=True,
              help="Exclude frames without a prediction instead of counting them incorrect.")
@click.option("--out", "out_prefix", default=None, type=click.Path(),
              help="Write report CSV/JSON under this prefix.")
@click.option("--cross-with", type=click.Path(exists=True), default=None,
              help="Other run's summary JSON; adds the two-testset cross average.")
@_guard
def cmd_eval(manifest_path, pred_path, k_m, metric, skip_missing, out_prefix, cross_with):
    """Score predicted poses against MANIFEST_PATH ground truth."""
    manifest = dataset.load_manifest(manifest_path)
    if not manifest.frames:
        _fail("manifest has no frames")
    mesh = read_ply(manifest.model_path)
    info = manifest.model_info
    kind = metrics.metric_dispatch(info) if metric == "auto" else (
        metrics.MetricKind.ADD if metric == "add" else metrics.MetricKind.ADD_S)
    error_fn = metrics.add_error if kind == metrics.MetricKind.ADD else metrics.adds_error
    preds = _read_predictions(pred_path)
    threshold = k_m * info.diameter
    records = []
    n_missing = 0
    for frame in manifest.frames:
        pred = preds.get(frame.frame_id)
        if pred is None:
            n_missing += 1
            if skip_missing:
                continue
            records.append(metrics.ErrorRecord(frame.frame_id, float("inf"), kind, False))
            continue
        e = error_fn(mesh.vertices, pred, frame.pose)
        records.append(metrics.ErrorRecord(
            frame.frame_id, e, kind, metrics.is_correct(e, info, k_m)))
    accuracy = metrics.aggregate(records) if records else 0.0
    summary = {
        "accuracy": accuracy,
        "n_frames": len(records),
        "n_missing": n_missing,
        "metric": kind.value,
        "k_m": k_m,
        "diameter_mm": info.diameter,
    }
    if cross_with:
        other = json.loads(Path(cross_with).read_text())
        table = metrics.cross_table(accuracy, float(other["accuracy"]))
        summary["cross_average"] = table.cross_average
    if out_prefix:
        out_prefix = Path(out_prefix)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        with open(out_prefix.with_suffix(".csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame_id", "metric", "error_mm", "threshold_mm", "correct"])
            for r in records:
                w.writerow([r.frame_id, r.metric.value, repr(r.error), repr(threshold),
                            str(r.correct).lower()])
        out_prefix.with_suffix(".json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _emit(summary)


_COLORMAP = np.array([  # blue -> cyan -> yellow -> red, 5 anchors
    (0, 0, 128), (0, 128, 255), (0, 255, 128), (255, 255, 0), (255, 0, 0)
], dtype=float)


def _pseudocolor(values):
    x = np.clip(values, 0.0, 1.0) * (len(_COLORMAP) - 1)
    i0 = np.clip(np.floor(x).astype(int), 0, len(_COLORMAP) - 2)
    w = (x - i0)[..., None]
    rgb = _COLORMAP[i0] * (1 - w) + _COLORMAP[i0 + 1] * w
    return np.round(rgb).astype(np.uint8)


def _write_saliency_outputs(smap, out_prefix, meta, overlay_image=None):
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    write_png(smap.rendered, Path(str(out_prefix) + ".png"))
    if overlay_image is not None:
        base = read_png(overlay_image)
        if base.ndim == 2:
            base = np.stack([base] * 3, axis=2)
        if base.shape[:2] != smap.values.shape:
            _fail(f"overlay image size {base.shape[:2]} != map size {smap.values.shape}")
        color = _pseudocolor(smap.values)
        blended = np.round(0.5 * base.astype(float) + 0.5 * color).astype(np.uint8)
        write_png(blended, Path(str(out_prefix) + "_overlay.png"))
    Path(str(out_prefix) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


@main.command("saliency")
@click.option("--mode", type=click.Choice(["vanilla", "gradcam-reg", "gradcam-cls"]), required=True)
@click.option("--grad", "grad_paths", multiple=True, type=click.Path(exists=True),
              help="Gradient tensor file(s).")
@click.option("--features", "feature_paths", multiple=True, type=click.Path(exists=True),
              help="Feature-map tensor file(s).")
@click.option("--size", default=None, help="Output WxH; default keeps the raw map size.")
@click.option("--out", "out_prefix", required=True, type=click.Path(), help="Output path prefix.")
@click.option("--overlay", "overlay_image", default=None, type=click.Path(exists=True),
              help="Input image for a pseudo-color overlay (alpha 0.5).")
@_guard
def cmd_saliency(mode, grad_paths, feature_paths, size, out_prefix, overlay_image):
    """Compute a saliency map from exported tensors.

    vanilla: one --grad (HxWx3 input gradient).
    gradcam-cls: one --features + one --grad (same WxHxC shape).
    gradcam-reg: three --features (pyramid levels, pre-resized to a common
    WxHxC) plus either three --grad files (pre-scalarized, one per level)
    or nine (per rotation component: x1 x2 x3 y1 y2 y3 z1 z2 z3); the
    per-component mode also writes per-component maps and an L2-combined one.
    """
    if mode == "vanilla":
        if len(grad_paths) != 1 or feature_paths:
            raise click.UsageError("vanilla mode takes exactly one --grad and no --features")
        smap = saliency.vanilla_map(read_tensor(grad_paths[0]))
        if size:
            out_w, out_h = _parse_size(size)
            smap = saliency.finalize_map(smap.values, out_w, out_h)
        meta = {"mode": "vanilla", "components": ["signed-mean"],
                "min_raw": smap.min_raw, "max_raw": smap.max_raw,
                "degenerate": smap.degenerate}
        _write_saliency_outputs(smap, out_prefix, meta, overlay_image)
        _emit(meta)
        return

    if mode == "gradcam-cls":
        if len(feature_paths) != 1 or len(grad_paths) != 1:
            raise click.UsageError("gradcam-cls takes exactly one --features and one --grad")
        raw = saliency.gradcam_classification(read_tensor(feature_paths[0]),
                                              read_tensor(grad_paths[0]))
        out_w, out_h = _parse_size(size) if size else (raw.shape[1], raw.shape[0])
        smap = saliency.finalize_map(raw, out_w, out_h)
        meta = {"mode": "gradcam-cls", "components": ["class-score"],
                "min_raw": smap.min_raw, "max_raw": smap.max_raw,
                "degenerate": smap.degenerate}
        _write_saliency_outputs(smap, out_prefix, meta, overlay_image)
        _emit(meta)
        return

    # gradcam-reg
    if len(feature_paths) != 3:
        raise click.UsageError("gradcam-reg takes exactly three --features")
    f_t = saliency.concat_channels(*[read_tensor(p) for p in feature_paths])
    out_w, out_h = _parse_size(size) if size else (f_t.shape[1], f_t.shape[0])
    if len(grad_paths) == 3:
        g_t = saliency.concat_channels(*[read_tensor(p) for p in grad_paths])
        raw = saliency.gradcam_regression(f_t, g_t)
        smap = saliency.finalize_map(raw, out_w, out_h)
        meta = {"mode": "gradcam-reg", "components": ["scalarized"],
                "min_raw": smap.min_raw, "max_raw": smap.max_raw,
                "degenerate": smap.degenerate}
        _write_saliency_outputs(smap, out_prefix, meta, overlay_image)
        _emit(meta)
    elif len(grad_paths) == 9:
        component_raws = []
        for c, name in enumerate("xyz"):
            g_c = saliency.concat_channels(*[read_tensor(p) for p in grad_paths[3 * c:3 * c + 3]])
            raw_c = saliency.gradcam_regression(f_t, g_c)
            component_raws.append(raw_c)
            smap_c = saliency.finalize_map(raw_c, out_w, out_h)
            meta_c = {"mode": "gradcam-reg", "components": [name],
                      "min_raw": smap_c.min_raw, "max_raw": smap_c.max_raw,
                      "degenerate": smap_c.degenerate}
            _write_saliency_outputs(smap_c, f"{out_prefix}_{name}", meta_c)
        raw = saliency.combine_component_maps(component_raws)
        smap = saliency.finalize_map(raw, out_w, out_h)
        meta = {"mode": "gradcam-reg", "components": ["x", "y", "z", "l2-combined"],
                "min_raw": smap.min_raw, "max_raw": smap.max_raw,
                "degenerate": smap.degenerate}
        _write_saliency_outputs(smap, out_prefix, meta, overlay_image)
        _emit(meta)
    else:
        raise click.UsageError("gradcam-reg takes three or nine --grad files")


def _parse_size(size):
    try:
        w, h = size.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise click.UsageError(f"--size must look like 640x480, got {size!r}") from None


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="TOML synthetic-scene spec.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_guard
def cmd_synth(spec_path, out_dir):
    """Generate a deterministic synthetic board dataset."""
    spec = dataset.load_synth_spec(spec_path)
    manifest, ring_masks = dataset.generate_synthetic(spec, out_dir)
    density = masking.accumulate_density(iter(ring_masks))
    masking.write_density_outputs(density, Path(out_dir) / "board_density")
    _emit({"frames": len(manifest.frames), "out_dir": str(out_dir),
           "seed": spec.seed, "object_id": manifest.object_id})


if __name__ == "__main__":
    main()
