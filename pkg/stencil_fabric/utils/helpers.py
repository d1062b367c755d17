import hashlib
from typing import List, Tuple

import numpy as np

from stencil_fabric.models import DType, Grid3, GridGenerator
from stencil_fabric.utils.grid_io import encode_grid

RANDOM_I32_BOUND = 1 << 20


def parse_dims(text: str) -> Tuple[int, int, int]:
    """Parse ``R,C,D`` (or ``R,C`` for a single plane)."""
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if len(parts) not in (2, 3):
        raise ValueError(f"dims must look like R,C,D: {text!r}")
    try:
        values = [int(part) for part in parts]
    except ValueError as exc:
        raise ValueError(f"dims must be integers: {text!r}") from exc
    if len(values) == 2:
        values.append(1)
    if any(value < 1 for value in values):
        raise ValueError(f"dims must be positive: {text!r}")
    return values[0], values[1], values[2]


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ValueError(f"expected a comma-separated integer list: {text!r}") from exc


def generate_grid(
    generator: GridGenerator,
    dims: Tuple[int, int, int],
    dtype: DType = DType.I32,
    seed: int | None = None,
    value: int = 7,
) -> Grid3:
    """Reproducible test grid from (generator, seed, dims, dtype) alone."""
    rows, cols, depth = dims
    shape = (depth, rows, cols)
    if generator is GridGenerator.CONSTANT:
        data = np.full(shape, value)
    elif generator is GridGenerator.RAMP:
        data = np.broadcast_to(np.arange(rows)[np.newaxis, :, np.newaxis], shape)
    elif generator is GridGenerator.COLUMN_RAMP:
        data = np.broadcast_to(np.arange(cols)[np.newaxis, np.newaxis, :], shape)
    elif generator is GridGenerator.IMPULSE:
        data = np.zeros(shape)
        data[:, rows // 2, cols // 2] = 1
    else:
        if seed is None:
            raise ValueError("random grids need a seed")
        # Counter-based Philox stream keyed by the seed.
        rng = np.random.Generator(np.random.Philox(seed))
        if dtype is DType.I32:
            data = rng.integers(-RANDOM_I32_BOUND, RANDOM_I32_BOUND, size=shape, endpoint=True)
        else:
            data = rng.random(size=shape, dtype=np.float32) * np.float32(2.0) - np.float32(1.0)
    return Grid3.from_array(data, dtype)


def grid_checksum(grid: Grid3) -> str:
    """SHA-256 of the grid's SPRT encoding."""
    return hashlib.sha256(encode_grid(grid)).hexdigest()

