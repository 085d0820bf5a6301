"""Text and binary serialization of sampled functions.

Both formats store a header (dimension, points per axis, box center and half-width)
followed by nodal values in row-major order with axis 0 varying slowest.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from ..errors import ConfigurationError
from .functions import SampledFunction
from .grid import Box, Grid

_MAGIC = b"HJSF"
_VERSION = 1
_CSV_TAG = "# hjentropy sampled-function v1"


def to_csv(f: SampledFunction) -> str:
    g = f.grid
    center = ";".join(repr(c) for c in g.box.center)
    lines = [
        _CSV_TAG,
        "dim,points,half_width,center",
        f"{g.dim},{g.points},{g.box.half_width!r},{center}",
        "value",
    ]
    lines.extend(repr(float(v)) for v in f.values.ravel(order="C"))
    return "\n".join(lines) + "\n"


def from_csv(text: str, extension: str = "clamp") -> SampledFunction:
    rows = [r.strip() for r in text.strip().splitlines()]
    if len(rows) < 4 or rows[0] != _CSV_TAG or rows[1] != "dim,points,half_width,center":
        raise ConfigurationError("not a sampled-function CSV (missing or wrong header)")
    try:
        dim_s, points_s, hw_s, center_s = rows[2].split(",")
        dim, points = int(dim_s), int(points_s)
        center = tuple(float(c) for c in center_s.split(";"))
        values = np.array([float(v) for v in rows[4:]])
    except ValueError as exc:
        raise ConfigurationError(f"malformed sampled-function CSV: {exc}") from None
    if len(center) != dim:
        raise ConfigurationError(f"header declares dim={dim} but center has {len(center)} entries")
    grid = Grid(Box(center, float(hw_s)), points)
    if values.size != grid.size:
        raise ConfigurationError(f"expected {grid.size} values, found {values.size}")
    return SampledFunction(grid, values.reshape(grid.shape), extension)


def to_bytes(f: SampledFunction) -> bytes:
    g = f.grid
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<IIId", _VERSION, g.dim, g.points, g.box.half_width))
    buf.write(np.asarray(g.box.center, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return buf.getvalue()


def from_bytes(data: bytes, extension: str = "clamp") -> SampledFunction:
    if data[:4] != _MAGIC:
        raise ConfigurationError("not a sampled-function binary (bad magic)")
    head = struct.calcsize("<IIId")
    version, dim, points, half_width = struct.unpack("<IIId", data[4 : 4 + head])
    if version != _VERSION:
        raise ConfigurationError(f"unsupported binary version {version}")
    offset = 4 + head
    center = np.frombuffer(data, dtype="<f8", count=dim, offset=offset)
    offset += 8 * dim
    grid = Grid(Box(tuple(center), half_width), points)
    if len(data) - offset != 8 * grid.size:
        raise ConfigurationError("binary payload size does not match the header")
    values = np.frombuffer(data, dtype="<f8", offset=offset).reshape(grid.shape)
    return SampledFunction(grid, values.copy(), extension)


def save(f: SampledFunction, path) -> None:
    path = str(path)
    if path.endswith(".csv"):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(to_csv(f))
    else:
        with open(path, "wb") as fh:
            fh.write(to_bytes(f))


def load(path, extension: str = "clamp") -> SampledFunction:
    path = str(path)
    if path.endswith(".csv"):
        with open(path, encoding="utf-8") as fh:
            return from_csv(fh.read(), extension)
    with open(path, "rb") as fh:
        return from_bytes(fh.read(), extension)
