"""Tensor container files: NPY v1.0, little-endian float32, C-order only.

The format is the standard NumPy array file so deep-learning exporters can
emit it natively (numpy.save with a float32 C-contiguous array produces a
valid container). Reading is done with a strict hand-rolled parser so every
structural inconsistency is rejected with a located error instead of being
silently tolerated.

Grammar (v1.0):
    offset 0:  magic  b"\\x93NUMPY"
    offset 6:  major, minor version bytes (must be 1, 0)
    offset 8:  uint16 little-endian header length H
    offset 10: H bytes of ASCII python-literal dict, padded with spaces and
               terminated by \\n so that 10 + H is a multiple of 64; keys
               "descr" (must be "<f4"), "fortran_order" (must be False),
               "shape" (tuple of positive ints)
    offset 10+H: raw little-endian float32 payload, C order
"""

import ast
import struct

import numpy as np

from .errors import ParseError

_MAGIC = b"\x93NUMPY"
_HEADER_ALIGN = 64


def read_tensor(path):
    """Read a container file into a float32 ndarray."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:6] != _MAGIC:
        raise ParseError("bad magic (not a tensor container)", offset=0)
    if len(raw) < 10:
        raise ParseError("truncated before header length", offset=len(raw))
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise ParseError(f"unsupported version {major}.{minor}", offset=6)
    (hlen,) = struct.unpack_from("<H", raw, 8)
    if len(raw) < 10 + hlen:
        raise ParseError("truncated header", offset=len(raw))
    try:
        header = ast.literal_eval(raw[10:10 + hlen].decode("ascii"))
    except (ValueError, SyntaxError, UnicodeDecodeError) as exc:
        raise ParseError(f"unparseable header: {exc}", offset=10) from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise ParseError("header must be a dict with descr/fortran_order/shape", offset=10)
    if header["descr"] != "<f4":
        raise ParseError(f"unsupported dtype {header['descr']!r}; only little-endian f32", offset=10)
    if header["fortran_order"] is not False:
        raise ParseError("fortran-order payloads are not supported", offset=10)
    shape = header["shape"]
    if (not isinstance(shape, tuple) or len(shape) == 0
            or not all(isinstance(d, int) and d > 0 for d in shape)):
        raise ParseError(f"invalid shape {shape!r}; dims must be positive ints", offset=10)
    count = int(np.prod(shape))
    start = 10 + hlen
    expected = start + 4 * count
    if len(raw) != expected:
        raise ParseError(
            f"payload length mismatch: expected {4 * count} bytes, got {len(raw) - start}",
            offset=min(len(raw), expected))
    data = np.frombuffer(raw, dtype="<f4", offset=start, count=count)
    if not np.all(np.isfinite(data)):
        raise ParseError("payload contains non-finite values", offset=start)
    return data.reshape(shape).copy()


def write_tensor(tensor, path):
    """Write a float-valued array as a v1.0 container; deterministic bytes."""
    arr = np.ascontiguousarray(tensor, dtype="<f4")
    if arr.ndim == 0 or arr.size == 0:
        raise ParseError("tensor must have at least one dim, all positive")
    if not np.all(np.isfinite(arr)):
        raise ParseError("tensor values must be finite")
    header = {"descr": "<f4", "fortran_order": False, "shape": arr.shape}
    text = "{" + ", ".join(f"'{k}': {_fmt(v)}" for k, v in header.items()) + "}"
    pad = (-(10 + len(text) + 1)) % _HEADER_ALIGN
    text = text + " " * pad + "\n"
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(bytes([1, 0]))
        fh.write(struct.pack("<H", len(text)))
        fh.write(text.encode("ascii"))
        fh.write(arr.tobytes(order="C"))


def _fmt(v):
    if isinstance(v, str):
        return f"'{v}'"
    if isinstance(v, tuple):
        inner = ", ".join(str(d) for d in v)
        return f"({inner},)" if len(v) == 1 else f"({inner})"
    return str(v)
