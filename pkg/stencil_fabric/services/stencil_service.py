"""Golden reference kernels: horizontal diffusion and the elementary stencils.

All kernels are pure functions of their inputs. The fixed-point path
accumulates in int64 and applies shift-round-saturate once, at the store.
"""

from __future__ import annotations

import logging
import time
from typing import Dict, Literal, Union

import numpy as np

from stencil_fabric.config import Settings
from stencil_fabric.models import (
    DType,
    Grid3,
    HdiffParams,
    OpCount,
    StencilName,
    StencilSpec,
    StencilTap,
)
from stencil_fabric.utils.fixed_point import quantize_weight, srs, srs_array

HALO = 2
HDIFF_MACS_PER_POINT = 25 + 8
HDIFF_OTHERS_PER_POINT = 12

Kernel = Union[Literal["hdiff"], StencilSpec]
LapField = Union[np.ndarray, Grid3]


class GridShapeError(ValueError):
    """Grid is too small for the kernel's halo."""


class StencilParameterError(ValueError):
    """Kernel parameters do not fit the grid or are unknown."""


class StencilIndexError(IndexError):
    """Point lies outside the kernel's valid range."""


def _uniform(offsets, weight: float) -> list[StencilTap]:
    return [StencilTap(dr=dr, dc=dc, weight=weight) for dr, dc in offsets]


BUILTIN_STENCILS: Dict[StencilName, StencilSpec] = {
    StencilName.JAC1D: StencilSpec(
        name=StencilName.JAC1D, dims=1, taps=_uniform([(0, -1), (0, 0), (0, 1)], 1 / 3)
    ),
    StencilName.JAC2D3PT: StencilSpec(
        name=StencilName.JAC2D3PT, dims=2, taps=_uniform([(-1, 0), (0, 0), (1, 0)], 1 / 3)
    ),
    StencilName.LAP5PT: StencilSpec(
        name=StencilName.LAP5PT,
        dims=2,
        frac_bits=0,
        taps=[StencilTap(dr=0, dc=0, weight=4.0)]
        + _uniform([(1, 0), (-1, 0), (0, 1), (0, -1)], -1.0),
    ),
    StencilName.JAC2D5PT: StencilSpec(
        name=StencilName.JAC2D5PT,
        dims=2,
        taps=_uniform([(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)], 0.2),
    ),
    # Out-of-place 9-point average; the in-place sweep would serialise rows.
    StencilName.SEIDEL9PT: StencilSpec(
        name=StencilName.SEIDEL9PT,
        dims=2,
        taps=_uniform([(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)], 1 / 9),
    ),
}


def get_stencil(name: str | StencilName) -> StencilSpec:
    try:
        return BUILTIN_STENCILS[StencilName(name)]
    except ValueError as exc:
        known = ", ".join(member.value for member in StencilName)
        raise StencilParameterError(f"unknown stencil '{name}' (known: {known})") from exc


# --------------------------------------------------------------------------- Laplacian and fluxes


def _check_point(grid: Grid3, r: int, c: int, d: int, r_range: tuple, c_range: tuple) -> None:
    if not (r_range[0] <= r <= r_range[1] and c_range[0] <= c <= c_range[1] and 0 <= d < grid.depth):
        raise StencilIndexError(
            f"point ({r}, {c}, {d}) outside rows {r_range}, cols {c_range}, depth {grid.depth}"
        )


def _scalar(grid: Grid3, r: int, c: int, d: int):
    value = grid.data[d, r, c]
    return int(value) if grid.dtype is DType.I32 else np.float32(value)


def laplacian_at(grid: Grid3, r: int, c: int, d: int):
    """4*psi(r,c) - psi(r+1,c) - psi(r-1,c) - psi(r,c+1) - psi(r,c-1)."""
    _check_point(grid, r, c, d, (1, grid.rows - 2), (1, grid.cols - 2))
    center = _scalar(grid, r, c, d)
    four = 4 if grid.dtype is DType.I32 else np.float32(4)
    value = (
        four * center
        - _scalar(grid, r + 1, c, d)
        - _scalar(grid, r - 1, c, d)
        - _scalar(grid, r, c + 1, d)
        - _scalar(grid, r, c - 1, d)
    )
    return int(value) if grid.dtype is DType.I32 else float(value)


def working_array(data: np.ndarray, dtype: DType) -> np.ndarray:
    """Values at accumulator precision: int64 for i32, float32 unchanged."""
    return data.astype(np.int64) if dtype is DType.I32 else data


def _working(grid: Grid3) -> np.ndarray:
    return working_array(grid.data, grid.dtype)


def laplacian_array(psi: np.ndarray) -> np.ndarray:
    """Laplacian over the last two axes of a working-precision block; the 1-wide border is zero."""
    lap = np.zeros_like(psi)
    if psi.shape[-2] < 3 or psi.shape[-1] < 3:
        return lap
    four = psi.dtype.type(4)
    lap[..., 1:-1, 1:-1] = (
        four * psi[..., 1:-1, 1:-1]
        - psi[..., 2:, 1:-1]
        - psi[..., :-2, 1:-1]
        - psi[..., 1:-1, 2:]
        - psi[..., 1:-1, :-2]
    )
    return lap


def laplacian_field(grid: Grid3) -> np.ndarray:
    """Whole Laplacian at accumulator precision; the 1-wide border is zero."""
    return laplacian_array(_working(grid))


def _lap_array(lap: LapField) -> np.ndarray:
    return lap.data if isinstance(lap, Grid3) else lap


def limited(delta_lap, delta_psi, limiter: bool = True):
    """Keep the Laplacian difference only when it does not anti-diffuse."""
    if not limiter:
        return delta_lap
    # sign test is equivalent to delta_lap * delta_psi <= 0 without the wide product
    keep = np.sign(delta_lap) * np.sign(delta_psi) <= 0
    return np.where(keep, delta_lap, 0).astype(np.result_type(delta_lap))


def _flux_at(grid: Grid3, lap: LapField, r: int, c: int, d: int, dr: int, dc: int, limiter: bool):
    lap_data = _lap_array(lap)
    if lap_data.shape != grid.data.shape:
        raise StencilParameterError(f"Laplacian shape {lap_data.shape} does not match grid")
    delta_lap = lap_data[d, r + dr, c + dc] - lap_data[d, r, c]
    delta_psi = _working(grid)[d, r + dr, c + dc] - _working(grid)[d, r, c]
    value = limited(delta_lap, delta_psi, limiter)
    return int(value) if grid.dtype is DType.I32 else float(value)


def flux_row_at(grid: Grid3, lap: LapField, r: int, c: int, d: int, limiter: bool = True):
    """Limited flux between rows r and r+1."""
    _check_point(grid, r, c, d, (1, grid.rows - 3), (1, grid.cols - 2))
    return _flux_at(grid, lap, r, c, d, 1, 0, limiter)


def flux_col_at(grid: Grid3, lap: LapField, r: int, c: int, d: int, limiter: bool = True):
    """Limited flux between columns c and c+1."""
    _check_point(grid, r, c, d, (1, grid.rows - 2), (1, grid.cols - 3))
    return _flux_at(grid, lap, r, c, d, 0, 1, limiter)


# --------------------------------------------------------------------------- hdiff


def check_hdiff_inputs(grid: Grid3, params: HdiffParams) -> None:
    if grid.rows < 2 * HALO + 1 or grid.cols < 2 * HALO + 1:
        raise GridShapeError(
            f"hdiff needs at least 5x5 planes for its 2-cell halo, got {grid.rows}x{grid.cols}"
        )
    if params.coeff_grid is not None:
        if params.coeff_grid.shape != grid.shape:
            raise StencilParameterError(
                f"coefficient grid {params.coeff_grid.shape} does not match input {grid.shape}"
            )
        if params.coeff_grid.dtype is not grid.dtype:
            raise StencilParameterError("coefficient grid dtype must match the input dtype")
    if grid.dtype is DType.F32 and params.srs_shift != 0:
        raise StencilParameterError("srs_shift applies to the i32 datapath only")
    if grid.dtype is DType.I32 and float(params.coeff) != int(params.coeff):
        raise StencilParameterError(f"i32 coefficient must be an integer, got {params.coeff}")


def divergence_planes(psi: np.ndarray, lap: np.ndarray, limiter: bool = True) -> np.ndarray:
    """Flux divergence at interior points for (D, R, C) field and Laplacian."""
    flux_r = limited(lap[:, 2:-1, :] - lap[:, 1:-2, :], psi[:, 2:-1, :] - psi[:, 1:-2, :], limiter)
    flux_c = limited(lap[:, :, 2:-1] - lap[:, :, 1:-2], psi[:, :, 2:-1] - psi[:, :, 1:-2], limiter)
    div_r = (flux_r[:, 1:, :] - flux_r[:, :-1, :])[:, :, HALO:-HALO]
    div_c = (flux_c[:, :, 1:] - flux_c[:, :, :-1])[:, HALO:-HALO, :]
    return div_r + div_c


def hdiff_update(psi: np.ndarray, div: np.ndarray, coeff, dtype: DType, srs_shift: int) -> np.ndarray:
    """Interior update srs(psi - C*div, srs_shift) for i32, psi - C*div for f32; returns the stored dtype."""
    if dtype is DType.I32:
        acc = psi.astype(np.int64) - np.asarray(coeff, dtype=np.int64) * div
        return srs_array(acc, srs_shift)
    return (psi - np.asarray(coeff, dtype=np.float32) * div).astype(np.float32)


def _coeff_interior(grid: Grid3, params: HdiffParams):
    if params.coeff_grid is not None:
        return params.coeff_grid.data[:, HALO:-HALO, HALO:-HALO]
    return int(params.coeff) if grid.dtype is DType.I32 else np.float32(params.coeff)


def hdiff_sweep(grid: Grid3, params: HdiffParams) -> Grid3:
    psi = _working(grid)
    div = divergence_planes(psi, laplacian_field(grid), params.limiter)
    out = grid.data.copy()
    out[:, HALO:-HALO, HALO:-HALO] = hdiff_update(
        grid.data[:, HALO:-HALO, HALO:-HALO],
        div,
        _coeff_interior(grid, params),
        grid.dtype,
        params.srs_shift,
    )
    return Grid3.from_array(out, grid.dtype)


def hdiff_reference(grid: Grid3, params: HdiffParams | None = None) -> Grid3:
    """Horizontal diffusion on every interior point; the 2-wide halo is copied."""
    params = params or HdiffParams()
    check_hdiff_inputs(grid, params)
    out = grid
    for _ in range(params.sweeps):
        out = hdiff_sweep(out, params)
    return out


# --------------------------------------------------------------------------- elementary stencils


def check_elementary_inputs(spec: StencilSpec, grid: Grid3) -> None:
    if spec.name not in BUILTIN_STENCILS:
        raise StencilParameterError(f"unknown stencil '{spec.name.value}'")
    if grid.rows < spec.row_extent or grid.cols < 2 * spec.col_radius + 1:
        raise GridShapeError(
            f"{spec.name.value} needs at least {spec.row_extent}x{2 * spec.col_radius + 1} planes"
        )


def elementary_rows(spec: StencilSpec, window: np.ndarray, dtype: DType) -> np.ndarray:
    """Apply ``spec`` to a (D, rows, C) window; returns (D, rows - 2*rr, C - 2*cr) values."""
    rr, cr = spec.row_radius, spec.col_radius
    depth, rows, cols = window.shape
    out_rows, out_cols = rows - 2 * rr, cols - 2 * cr
    if dtype is DType.I32:
        acc = np.zeros((depth, out_rows, out_cols), dtype=np.int64)
        source = window.astype(np.int64)
    else:
        acc = np.zeros((depth, out_rows, out_cols), dtype=np.float32)
        source = window
    for tap in spec.taps:
        shifted = source[:, rr + tap.dr : rr + tap.dr + out_rows, cr + tap.dc : cr + tap.dc + out_cols]
        if dtype is DType.I32:
            acc = acc + np.int64(quantize_weight(tap.weight, spec.frac_bits)) * shifted
        else:
            acc = acc + np.float32(tap.weight) * shifted
    if dtype is DType.I32:
        return srs_array(acc, spec.frac_bits)
    return acc


def apply_elementary(spec: StencilSpec, grid: Grid3) -> Grid3:
    """Weighted tap sum wherever all taps are in range; the border is copied."""
    check_elementary_inputs(spec, grid)
    rr, cr = spec.row_radius, spec.col_radius
    out = grid.data.copy()
    out[:, rr : grid.rows - rr, cr : grid.cols - cr] = elementary_rows(spec, grid.data, grid.dtype)
    return Grid3.from_array(out, grid.dtype)


def elementary_point(spec: StencilSpec, grid: Grid3, r: int, c: int, d: int):
    """Single-point evaluation with the same arithmetic as :func:`apply_elementary`."""
    rr, cr = spec.row_radius, spec.col_radius
    _check_point(grid, r, c, d, (rr, grid.rows - rr - 1), (cr, grid.cols - cr - 1))
    if grid.dtype is DType.I32:
        acc = sum(
            quantize_weight(tap.weight, spec.frac_bits) * int(grid.data[d, r + tap.dr, c + tap.dc])
            for tap in spec.taps
        )
        return srs(acc, spec.frac_bits)
    total = np.float32(0)
    for tap in spec.taps:
        total = np.float32(total + np.float32(tap.weight) * grid.data[d, r + tap.dr, c + tap.dc])
    return float(total)


# --------------------------------------------------------------------------- op counting


def op_count(dims: tuple[int, int, int], kernel: Kernel) -> OpCount:
    """MACs and sub/compare/select ops; a MAC counts as two ops."""
    rows, cols, depth = dims
    if kernel == "hdiff":
        points = max(rows - 4, 0) * max(cols - 4, 0) * depth
        return OpCount(macs=HDIFF_MACS_PER_POINT * points, others=HDIFF_OTHERS_PER_POINT * points)
    if not isinstance(kernel, StencilSpec):
        raise StencilParameterError(f"unknown kernel {kernel!r}")
    points = max(rows - 2 * kernel.row_radius, 0) * max(cols - 2 * kernel.col_radius, 0) * depth
    return OpCount(macs=len(kernel.taps) * points, others=0)


class StencilService:
    """Runs golden kernels with timing logs."""

    def __init__(self, config: Settings, logger: logging.Logger | None = None) -> None:
        self.config = config
        self._logger = logger or logging.getLogger(__name__)

    def run(self, grid: Grid3, kernel: str, params: HdiffParams | None = None) -> Grid3:
        start = time.perf_counter()
        if kernel == "hdiff":
            output = hdiff_reference(grid, params)
        else:
            output = apply_elementary(get_stencil(kernel), grid)
        self._logger.info(
            "Golden kernel finished",
            extra={
                "kernel": kernel,
                "dims": list(grid.shape),
                "dtype": grid.dtype.value,
                "elapsed_ms": round((time.perf_counter() - start) * 1000, 3),
            },
        )
        return output
