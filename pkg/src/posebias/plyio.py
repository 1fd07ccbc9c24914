"""Minimal PLY reader: vertex positions only, ascii and binary_little_endian.

Faces and other elements are skipped; unknown vertex properties are skipped
by size (binary) or by column (ascii). Anything structurally inconsistent is
a ParseError, never a guess.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

_TYPE_SIZES = {
    "char": 1, "int8": 1, "uchar": 1, "uint8": 1,
    "short": 2, "int16": 2, "ushort": 2, "uint16": 2,
    "int": 4, "int32": 4, "uint": 4, "uint32": 4,
    "float": 4, "float32": 4,
    "double": 8, "float64": 8,
}
_STRUCT_CODES = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f",
    "double": "d", "float64": "d",
}


@dataclass(frozen=True)
class MeshFile:
    vertices: np.ndarray  # Nx3, mm
    diameter: float | None = None


def read_ply(path):
    with open(path, "rb") as fh:
        data = fh.read()

    # Header is ASCII lines terminated by "end_header".
    lines = []
    pos = 0
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise ParseError("header not terminated by end_header", offset=len(data))
        line = data[pos:nl].rstrip(b"\r").decode("ascii", errors="replace")
        lines.append(line)
        pos = nl + 1
        if line.strip() == "end_header":
            break

    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic", line=1)

    fmt = None
    elements = []  # (name, count, [(type, name)])
    for idx, line in enumerate(lines[1:-1], start=2):
        parts = line.split()
        if not parts or parts[0] == "comment" or parts[0] == "obj_info":
            continue
        if parts[0] == "format":
            if parts[1:] not in (["ascii", "1.0"], ["binary_little_endian", "1.0"]):
                raise ParseError(f"unsupported format {' '.join(parts[1:])}", line=idx)
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3:
                raise ParseError("malformed element declaration", line=idx)
            try:
                count = int(parts[2])
            except ValueError:
                raise ParseError(f"bad element count {parts[2]!r}", line=idx) from None
            elements.append((parts[1], count, []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError("property before any element", line=idx)
            if parts[1] == "list":
                if len(parts) != 5:
                    raise ParseError("malformed list property", line=idx)
                elements[-1][2].append(("list", (parts[2], parts[3]), parts[4]))
            else:
                if len(parts) != 3 or parts[1] not in _TYPE_SIZES:
                    raise ParseError(f"unsupported property {line!r}", line=idx)
                elements[-1][2].append(("scalar", parts[1], parts[2]))
        else:
            raise ParseError(f"unknown header keyword {parts[0]!r}", line=idx)

    if fmt is None:
        raise ParseError("missing format declaration", line=1)
    vertex_elems = [e for e in elements if e[0] == "vertex"]
    if not vertex_elems:
        raise ParseError("no vertex element", line=1)
    name, count, props = vertex_elems[0]
    if count < 1:
        raise ParseError("vertex count must be >= 1", line=1)
    if any(kind == "list" for kind, _, _ in props):
        raise ParseError("list properties on vertices are not supported", line=1)
    prop_names = [p[2] for p in props]
    try:
        xyz_cols = [prop_names.index(c) for c in ("x", "y", "z")]
    except ValueError:
        raise ParseError("vertex element lacks float x/y/z properties", line=1) from None
    for c in xyz_cols:
        if props[c][1] not in ("float", "float32", "double", "float64"):
            raise ParseError(f"coordinate property {prop_names[c]!r} is not float", line=1)

    # Elements preceding "vertex" would need to be skipped; restrict to the
    # common layout where vertex comes first.
    if elements[0][0] != "vertex":
        raise ParseError("vertex must be the first element", line=1)

    if fmt == "ascii":
        verts = _read_ascii_vertices(data, pos, count, len(props), xyz_cols)
    else:
        verts = _read_binary_vertices(data, pos, count, props, xyz_cols)
    if not np.all(np.isfinite(verts)):
        raise ParseError("non-finite vertex coordinates", offset=pos)
    return MeshFile(vertices=verts)


def _read_ascii_vertices(data, pos, count, n_props, xyz_cols):
    body = data[pos:].decode("ascii", errors="replace").splitlines()
    rows = [ln for ln in body if ln.strip()]
    if len(rows) < count:
        raise ParseError(f"header declares {count} vertices, body has {len(rows)} rows",
                         line=len(rows))
    verts = np.empty((count, 3))
    for i in range(count):
        fields = rows[i].split()
        if len(fields) < n_props:
            raise ParseError(f"vertex row {i} has {len(fields)} fields, expected {n_props}",
                             line=i + 1)
        try:
            verts[i] = [float(fields[c]) for c in xyz_cols]
        except ValueError:
            raise ParseError(f"non-numeric coordinate in vertex row {i}", line=i + 1) from None
    return verts


def _read_binary_vertices(data, pos, count, props, xyz_cols):
    sizes = [_TYPE_SIZES[t] for _, t, _ in props]
    stride = sum(sizes)
    offsets = np.cumsum([0] + sizes[:-1])
    needed = pos + stride * count
    if len(data) < needed:
        raise ParseError(
            f"header declares {count} vertices ({stride * count} bytes), "
            f"body has {len(data) - pos}", offset=len(data))
    verts = np.empty((count, 3))
    for j, c in enumerate(xyz_cols):
        code = _STRUCT_CODES[props[c][1]]
        col = np.frombuffer(data, dtype=np.dtype("<" + code), count=count,
                            offset=pos + int(offsets[c])) if stride == sizes[c] else None
        if col is None:
            dt = np.dtype({"names": ["v"], "formats": ["<" + code],
                           "offsets": [int(offsets[c])], "itemsize": stride})
            col = np.frombuffer(data, dtype=dt, count=count, offset=pos)["v"]
        verts[:, j] = col.astype(float)
    return verts
