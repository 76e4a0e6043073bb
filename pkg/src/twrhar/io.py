"""Binary, raster and CSV formats used by the command line.

Echo files: ``b"TWRECHO1"``, uint32 N, uint32 M, then N*M little-endian
complex64 values in row-major (fast-time major) order.

Map files: ``b"TWRMAP01"``, uint32 rows, uint32 cols, then rows*cols
little-endian float32 values, row-major. Axes and the map kind travel in a
sidecar ``<name>.axes.csv``.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .echo import EchoMatrix, RadarParams
from .maps import RadarMap

__all__ = [
    "write_echo",
    "read_echo",
    "write_map",
    "read_map",
    "write_field",
    "read_field",
    "write_pgm",
    "read_pgm",
    "write_pbm",
    "read_pbm",
    "overlay_points",
    "write_points_csv",
    "write_rows_csv",
]

ECHO_MAGIC = b"TWRECHO1"
MAP_MAGIC = b"TWRMAP01"
_HEADER = struct.Struct("<8sII")


def write_echo(path, echo: EchoMatrix) -> Path:
    path = Path(path)
    n, m = echo.data.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(ECHO_MAGIC, n, m))
        fh.write(np.ascontiguousarray(echo.data, dtype="<c8").tobytes())
    return path


def _read_payload(path, magic, dtype):
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: file too short for header")
    tag, n, m = _HEADER.unpack_from(raw)
    if tag != magic:
        raise ValueError(f"{path}: bad magic {tag!r}, expected {magic!r}")
    body = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    if body.size != n * m:
        raise ValueError(f"{path}: expected {n * m} values, found {body.size}")
    return body.reshape(n, m)


def read_echo(path, params: RadarParams | None = None) -> EchoMatrix:
    """Load an echo file; ``params`` defaults to a RadarParams sized to the file."""
    data = _read_payload(path, ECHO_MAGIC, "<c8").astype(np.complex128)
    if params is None:
        params = RadarParams(fast_samples=data.shape[0], slow_samples=data.shape[1])
    return EchoMatrix(data, params)


def write_field(path, array) -> Path:
    """Any finite 2-D real array (for example a level set) in the map format."""
    path = Path(path)
    array = np.asarray(array, dtype=float)
    if array.ndim != 2:
        raise ValueError("fields must be 2-D")
    n, m = array.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAP_MAGIC, n, m))
        fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
    return path


def read_field(path) -> np.ndarray:
    return _read_payload(path, MAP_MAGIC, "<f4").astype(float)


def write_map(path, rmap: RadarMap) -> Path:
    path = write_field(path, rmap.pixels)
    with open(_axes_path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis", "index", "value", "kind"])
        for i, v in enumerate(rmap.row_axis):
            w.writerow(["row", i, repr(float(v)), rmap.kind])
        for i, v in enumerate(rmap.col_axis):
            w.writerow(["col", i, repr(float(v)), rmap.kind])
    return path


def _axes_path(path: Path) -> Path:
    return path.with_name(path.name + ".axes.csv")


def read_map(path) -> RadarMap:
    path = Path(path)
    pix = _read_payload(path, MAP_MAGIC, "<f4").astype(float)
    axes = _axes_path(path)
    if not axes.exists():
        return RadarMap(pix, np.arange(pix.shape[0], dtype=float),
                        np.arange(pix.shape[1], dtype=float), kind="rtm")
    rows, cols, kind = [], [], "rtm"
    with open(axes, newline="") as fh:
        for rec in csv.DictReader(fh):
            (rows if rec["axis"] == "row" else cols).append(float(rec["value"]))
            kind = rec["kind"]
    return RadarMap(pix, np.array(rows), np.array(cols), kind=kind)


def _to_uint8(image):
    image = np.asarray(image, dtype=float)
    peak = image.max() if image.size else 0.0
    if peak <= 0:
        return np.zeros(image.shape, dtype=np.uint8)
    return np.clip(np.rint(255.0 * np.clip(image, 0, None) / peak), 0, 255).astype(np.uint8)


def write_pgm(path, image, *, normalize: bool = True) -> Path:
    """Binary 8-bit PGM; by default scaled so the maximum maps to 255."""
    path = Path(path)
    img = _to_uint8(image) if normalize else np.asarray(image, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM images must be 2-D")
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        fh.write(img.tobytes())
    return path


def _parse_netpbm(raw: bytes, n_fields: int):
    # whitespace-separated header tokens, comments skipped
    tokens, pos = [], 0
    while len(tokens) < n_fields:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _parse_netpbm(raw, 4)
    if magic != b"P5" or int(maxval) > 255:
        raise ValueError(f"{path}: only 8-bit binary PGM is supported")
    return np.frombuffer(raw, dtype=np.uint8, count=int(w) * int(h), offset=pos).reshape(int(h), int(w))


def write_pbm(path, mask) -> Path:
    """Binary PBM (P4); nonzero pixels are written as 1 (black)."""
    path = Path(path)
    mask = np.asarray(mask).astype(bool)
    if mask.ndim != 2:
        raise ValueError("PBM images must be 2-D")
    packed = np.packbits(mask, axis=1)
    with open(path, "wb") as fh:
        fh.write(b"P4\n%d %d\n" % (mask.shape[1], mask.shape[0]))
        fh.write(packed.tobytes())
    return path


def read_pbm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    (magic, w, h), pos = _parse_netpbm(raw, 3)
    if magic != b"P4":
        raise ValueError(f"{path}: only binary PBM is supported")
    w, h = int(w), int(h)
    row_bytes = (w + 7) // 8
    packed = np.frombuffer(raw, dtype=np.uint8, count=row_bytes * h, offset=pos).reshape(h, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :w].astype(bool)


def overlay_points(image, points, *, arm: int = 2, value: int = 255) -> np.ndarray:
    """8-bit copy of ``image`` with a small cross drawn at each ``(row, col)``."""
    out = _to_uint8(image) // 2
    n, m = out.shape
    for r, c in np.asarray(points, dtype=int).reshape(-1, 2):
        out[max(r - arm, 0):min(r + arm + 1, n), min(max(c, 0), m - 1)] = value
        out[min(max(r, 0), n - 1), max(c - arm, 0):min(c + arm + 1, m)] = value
    return out


def write_points_csv(path, points, header=("x", "y")) -> Path:
    path = Path(path)
    np.savetxt(path, np.asarray(points, dtype=float).reshape(-1, len(header)), delimiter=",",
               fmt="%.10g", header=",".join(header), comments="")
    return path


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path
