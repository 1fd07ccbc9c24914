"""`gradexport` command line: annotation conversion and tensor export."""

import sys
from pathlib import Path

import click

from .convert import ConversionError, convert_annotations, write_manifest
from .export import ExportError, ExportSession, export_tensors
from .standin import load_model


@click.group()
def main():
    """Framework-side glue for the pose-bias toolkit."""


@main.command("convert")
@click.option("--root", "legacy_root", required=True, type=click.Path(exists=True),
              help="Legacy dataset root (data/NN/..., models/...).")
@click.option("--object", "object_id", required=True, type=int)
@click.option("--symmetric", is_flag=True, help="Mark the object symmetric (ADD-S).")
@click.option("--out", "out_path", required=True, type=click.Path())
def cmd_convert(legacy_root, object_id, symmetric, out_path):
    """Convert legacy YAML annotations into a canonical manifest."""
    try:
        doc = convert_annotations(legacy_root, object_id, out_path, symmetric=symmetric)
    except ConversionError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    write_manifest(doc, out_path)
    click.echo(f"wrote {out_path} ({len(doc['frames'])} frames)")


@main.command("export")
@click.option("--ckpt", "checkpoint", type=click.Path(exists=True), default=None,
              help="Model checkpoint (state dict); omitted = fresh random weights.")
@click.option("--arch", default="standin", show_default=True)
@click.option("--frames", "frame_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="Input frame PNG(s).")
@click.option("--taps", required=True, help="Comma-separated names of the three tap layers.")
@click.option("--scalarize", is_flag=True,
              help="Export the gradient of the rotation-vector norm instead of per-component gradients.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def cmd_export(checkpoint, arch, frame_paths, taps, scalarize, out_dir):
    """Export gradients, tapped features and candidates to tensor files."""
    tap_points = tuple(t.strip() for t in taps.split(","))
    try:
        model = load_model(arch, checkpoint)
        session = ExportSession(model=model, tap_points=tap_points,
                                frame_paths=[Path(p) for p in frame_paths],
                                out_dir=Path(out_dir), scalarize=scalarize,
                                metadata={"arch": arch, "checkpoint": checkpoint})
        results = export_tensors(session)
    except (ExportError, ValueError) as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    total = sum(len(v) for v in results.values())
    click.echo(f"exported {total} tensors for {len(results)} frame(s) to {out_dir}")


if __name__ == "__main__":
    main()
