"""SPRT binary grid format and a CSV loader for tiny hand-written grids.

SPRT layout (little-endian): magic ``b"SPRT"``, u16 version (1), u8 dtype
(0 = i32, 1 = f32), u8 reserved (0), u32 R, u32 C, u32 D, then R*C*D
4-byte elements in d, r, c order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from stencil_fabric.models import DType, Grid3

MAGIC = b"SPRT"
VERSION = 1
HEADER = struct.Struct("<4sHBBIII")
_ELEMENT = {DType.I32: np.dtype("<i4"), DType.F32: np.dtype("<f4")}


class GridFormatError(ValueError):
    """A grid file could not be decoded."""


def encode_grid(grid: Grid3) -> bytes:
    header = HEADER.pack(MAGIC, VERSION, grid.dtype.code, 0, grid.rows, grid.cols, grid.depth)
    return header + grid.data.astype(_ELEMENT[grid.dtype], copy=False).tobytes(order="C")


def decode_grid(blob: bytes) -> Grid3:
    if len(blob) < HEADER.size:
        raise GridFormatError(f"truncated header: {len(blob)} bytes")
    magic, version, dtype_code, reserved, rows, cols, depth = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise GridFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise GridFormatError(f"unsupported SPRT version {version}")
    if dtype_code not in (0, 1):
        raise GridFormatError(f"unknown dtype code {dtype_code}")
    if reserved != 0:
        raise GridFormatError("reserved header byte must be 0")
    if min(rows, cols, depth) < 1:
        raise GridFormatError(f"empty grid extents {rows}x{cols}x{depth}")
    dtype = DType.from_code(dtype_code)
    expected = rows * cols * depth * 4
    payload = blob[HEADER.size :]
    if len(payload) != expected:
        raise GridFormatError(f"payload is {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype=_ELEMENT[dtype]).reshape(depth, rows, cols)
    return Grid3.from_array(data, dtype)


def read_grid(path: Path | str) -> Grid3:
    """Load a grid from SPRT, or from CSV when the file ends in ``.csv``."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_grid(path)
    return decode_grid(path.read_bytes())


def write_grid(grid: Grid3, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_grid(grid))


def parse_csv_grid(text: str, dtype: DType | None = None) -> Grid3:
    """Planes are blocks of comma-separated rows separated by blank lines."""
    planes: list[list[list[str]]] = [[]]
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            continue
        if not stripped:
            if planes[-1]:
                planes.append([])
            continue
        planes[-1].append([cell.strip() for cell in stripped.split(",")])
    planes = [plane for plane in planes if plane]
    if not planes:
        raise GridFormatError("CSV grid is empty")

    shape = (len(planes[0]), len(planes[0][0]))
    for plane in planes:
        if len(plane) != shape[0] or any(len(row) != shape[1] for row in plane):
            raise GridFormatError("CSV planes must all have the same rectangular shape")

    cells = [cell for plane in planes for row in plane for cell in row]
    if dtype is None:
        dtype = DType.I32 if all(_is_int(cell) for cell in cells) else DType.F32
    try:
        values = np.array(
            [int(cell) if dtype is DType.I32 else float(cell) for cell in cells],
            dtype=np.int64 if dtype is DType.I32 else np.float64,
        )
    except ValueError as exc:
        raise GridFormatError(f"unparseable CSV cell: {exc}") from exc
    if dtype is DType.I32 and (values.min() < -(2**31) or values.max() > 2**31 - 1):
        raise GridFormatError("CSV value outside the int32 range")
    return Grid3.from_array(values.reshape(len(planes), *shape), dtype)


def read_csv_grid(path: Path | str, dtype: DType | None = None) -> Grid3:
    return parse_csv_grid(Path(path).read_text(encoding="utf-8"), dtype)


def _is_int(cell: str) -> bool:
    try:
        int(cell)
    except ValueError:
        return False
    return True
