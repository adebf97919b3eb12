"""Small serialization helpers: BSEG binary matrices, CSV, PGM images, JSON.

The BSEG format is a minimal binary matrix container: the magic bytes
``BSEG``, two little-endian u32 giving rows and cols, then row-major
little-endian float64 data.
"""

import struct

import numpy as np

BSEG_MAGIC = b"BSEG"


def write_bseg(path, matrix):
    """Write a 2-D array to `path` in the BSEG binary format."""
    m = np.ascontiguousarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"BSEG stores 2-D matrices, got shape {m.shape}")
    with open(path, "wb") as fh:
        fh.write(BSEG_MAGIC)
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.astype("<f8").tobytes())


def read_bseg(path):
    """Read a BSEG file back into a float64 matrix."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BSEG_MAGIC:
            raise ValueError(f"{path}: not a BSEG file (magic {magic!r})")
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated BSEG header")
        rows, cols = struct.unpack("<II", header)
        data = fh.read(rows * cols * 8)
        if len(data) != rows * cols * 8:
            raise ValueError(f"{path}: truncated BSEG payload")
    return np.frombuffer(data, dtype="<f8").reshape(rows, cols).copy()


def write_csv_matrix(path, matrix):
    """Write a matrix as plain CSV, one row per line."""
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def write_pgm(path, matrix):
    """Write a matrix of values in [-1, 1] as an 8-bit binary PGM (P5).

    Value v maps to round(255 * (v + 1) / 2), clipped to [0, 255].
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"PGM export needs a 2-D matrix, got shape {m.shape}")
    pixels = np.clip(np.rint(255.0 * (m + 1.0) / 2.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path):
    """Read a binary P5 PGM written by `write_pgm` (maxval 255)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5" or len(parts) != 4:
        raise ValueError(f"{path}: not a binary PGM")
    width, height = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pixels = np.frombuffer(parts[3][: width * height], dtype=np.uint8)
    return pixels.reshape(height, width).copy()


def _json_emit(obj, out, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format(float(obj), ".17g"))
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad_in + '"' + str(k) + '": ')
            _json_emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad_in)
            _json_emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r} to JSON")


def dumps_json(obj, indent=2):
    """Serialize to JSON with floats pinned to 17 significant digits.

    Pinning the float format keeps result files byte-identical across runs
    of the same pipeline configuration.
    """
    out = []
    _json_emit(obj, out, indent, 0)
    out.append("\n")
    return "".join(out)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps_json(obj))
