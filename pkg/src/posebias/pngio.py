"""8-bit PNG read/write (grayscale and RGB) with deterministic encoding."""

import numpy as np
from PIL import Image, PngImagePlugin

from .errors import ParseError

_MODES = {"L": 1, "RGB": 3}


def read_png(path):
    """Load an 8-bit grayscale or RGB PNG as an HxW or HxWx3 uint8 array."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise ParseError(f"cannot decode PNG: {exc}") from None
    if img.format != "PNG":
        raise ParseError(f"not a PNG file (decoded as {img.format})")
    if img.mode not in _MODES:
        raise ParseError(f"unsupported PNG mode {img.mode!r}; only 8-bit L or RGB")
    return np.asarray(img, dtype=np.uint8)


def write_png(image, path):
    """Write uint8 HxW (grayscale) or HxWx3 (RGB) deterministically."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8:
        raise ParseError(f"image must be uint8, got {arr.dtype}")
    if arr.ndim == 2:
        mode = "L"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        mode = "RGB"
    else:
        raise ParseError(f"unsupported image shape {arr.shape}")
    img = Image.fromarray(arr, mode=mode)
    # Fixed encoder settings keep identical inputs byte-identical on disk.
    img.save(path, format="PNG", optimize=False, compress_level=6,
             pnginfo=PngImagePlugin.PngInfo())
