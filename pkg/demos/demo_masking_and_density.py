"""Walkthrough: generate a synthetic board dataset, mask the marker ring,
and accumulate a marker-density map.

Run:  python3 demos/demo_masking_and_density.py
Outputs land in demos/output/masking/.
"""

from pathlib import Path

from posebias.dataset import SyntheticSceneSpec, generate_synthetic, load_manifest
from posebias.geometry import CameraIntrinsics
from posebias.masking import (
    BoardCorners,
    MaskGeometry,
    corners_from_offsets,
    mask_dataset,
    write_density_outputs,
)

out = Path(__file__).parent / "output" / "masking"
out.mkdir(parents=True, exist_ok=True)

# A flat board: the outer quad bounds the full board, the inner quad bounds
# the marker-free center, so the ring between them stands in for markers.
corners = BoardCorners(outer=corners_from_offsets(120, 100, 0),
                       inner=corners_from_offsets(70, 60, 0))
spec = SyntheticSceneSpec(
    frame_count=20,
    intrinsics=CameraIntrinsics(fx=500, fy=500, px=160, py=120, width=320, height=240),
    corners=corners,
    distance_range_mm=(800.0, 1000.0),
    lateral_range_mm=15.0,
    cone_half_angle_rad=0.25,
    seed=42)

print("1. Generating 20 synthetic frames (deterministic for seed 42)...")
generate_synthetic(spec, out / "dataset")
manifest = load_manifest(out / "dataset" / "manifest.json")
print(f"   wrote {len(manifest.frames)} frames under {out / 'dataset'}")

print("2. Masking the marker ring in every frame...")
summary, density = mask_dataset(manifest, corners, MaskGeometry.FRAME, out / "masked")
print(f"   masked {summary['frames_masked']} frames, "
      f"{summary['masked_pixels_mean']:.0f} px blacked out per frame on average")

print("3. Accumulating the marker-density map...")
meta = write_density_outputs(density, out / "density")
print(f"   peak density {meta['max_density']:.2f} "
      f"(fraction of frames covering the hottest pixel)")
print(f"   see {out / 'density.png'}")
