"""gradexport: legacy annotation conversion and tensor export for the
pose-bias toolkit. Talks to the toolkit only through its file formats
(manifest JSON, float32 tensor containers)."""

from .convert import ConversionError, convert_annotations, write_manifest
from .export import ExportError, ExportSession, export_frame, export_tensors
from .standin import ARCHITECTURES, StandInPoseNet, load_model

__version__ = "0.1.0"

__all__ = [
    "ConversionError", "convert_annotations", "write_manifest",
    "ExportError", "ExportSession", "export_frame", "export_tensors",
    "ARCHITECTURES", "StandInPoseNet", "load_model", "__version__",
]
