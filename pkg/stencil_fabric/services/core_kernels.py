"""Per-row work of each core role: the arithmetic it performs and the cycles it costs.

Row kernels reuse the golden building blocks, so a mapped design produces
bit-identical rows to :func:`stencil_service.hdiff_reference`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from stencil_fabric.models import CoreRole, DType, FabricSpec, KernelCost, LinkKind, StencilSpec
from stencil_fabric.services.fabric_service import link_bandwidth_bits
from stencil_fabric.services.stencil_service import (
    HALO,
    elementary_rows,
    hdiff_update,
    laplacian_array,
    limited,
    working_array,
)

# (MACs, pre-adder ops, register hand-offs, points loaded) per interior output column
ROLE_WORK = {
    CoreRole.LAP: (25, 0, 0, 25),
    CoreRole.FLUX_MAC: (8, 0, 0, 8),
    CoreRole.FLUX_NONMAC: (0, 12, 0, 12),
    CoreRole.FLUX: (8, 12, 4, 8),
    CoreRole.MONO: (33, 12, 9, 33),
}
CASCADE_HANDOFFS = 5


class KernelRoleError(ValueError):
    """Role has no per-row kernel or is missing its stencil."""


def _ceil(value: Fraction | int) -> int:
    return math.ceil(Fraction(value))


def core_kernel_cycles(
    role: CoreRole,
    cols: int,
    dtype: DType,
    fabric: FabricSpec,
    srs_on_receive: bool = False,
    stencil: StencilSpec | None = None,
) -> KernelCost:
    """Cycles one core of ``role`` spends on one output row of ``cols`` columns."""
    dp = fabric.datapath
    if role is CoreRole.ELEMENTARY:
        if stencil is None:
            raise KernelRoleError("elementary cost needs a stencil")
        width = max(cols - 2 * stencil.col_radius, 0)
        macs, others, handoffs, loaded = len(stencil.taps), 0, 0, len(stencil.taps)
    elif role in ROLE_WORK:
        width = max(cols - 2 * HALO, 0)
        macs, others, handoffs, loaded = ROLE_WORK[role]
    else:
        raise KernelRoleError(f"no row kernel for role {role.value}")
    if srs_on_receive:
        handoffs += CASCADE_HANDOFFS
    vectors = _ceil(Fraction(width, dp.macs_per_cycle))

    mac = _ceil(Fraction(macs * width, dp.macs_per_cycle))
    nonmac = _ceil(Fraction(others * width, dp.nonmac_per_cycle))
    move = handoffs * vectors * fabric.srs_latency_cycles
    if dtype is DType.F32:
        penalty = Fraction(str(fabric.f32_penalty))
        mac, nonmac, move = (_ceil(part * penalty) for part in (mac, nonmac, move))
    mem = _ceil(Fraction(loaded * width * dp.elem_bits, dp.load_bits_per_cycle))
    ideal = max(mac + nonmac + move, mem)
    return KernelCost(
        role=role,
        dtype=dtype,
        mac_cycles=mac,
        nonmac_cycles=nonmac,
        move_cycles=move,
        mem_cycles=mem,
        cycles=_ceil(Fraction(ideal) / Fraction(str(fabric.mac_efficiency))),
    )


def transfer_cycles(fabric: FabricSpec, kind: LinkKind, nbytes: int) -> int:
    """Cycles a link of ``kind`` is busy moving ``nbytes``; fan-out does not change it."""
    return _ceil(Fraction(nbytes * 8, link_bandwidth_bits(fabric, kind)))


def gather_copy_cycles(fabric: FabricSpec, cols: int) -> int:
    """Gather core cost to stage one row computed by another lane."""
    return _ceil(Fraction(cols * fabric.datapath.elem_bits, fabric.neighbor_mem_bits))


# --------------------------------------------------------------------------- row arithmetic


@dataclass(frozen=True)
class FluxCandidates:
    """Unlimited flux candidates and matching field differences for one output row.

    Row order in both arrays: lower row face, upper row face, left column face,
    right column face; every row spans the interior columns only.
    """

    d_lap: np.ndarray
    d_psi: np.ndarray
    psi: np.ndarray


def _stack(rows: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(row) for row in rows])


def _faces(block: np.ndarray) -> np.ndarray:
    mid = block[1, HALO:-HALO]
    return np.stack(
        [
            mid - block[0, HALO:-HALO],
            block[2, HALO:-HALO] - mid,
            mid - block[1, HALO - 1 : -HALO - 1],
            block[1, HALO + 1 : block.shape[1] - HALO + 1] - mid,
        ]
    )


def lap_rows(psi_rows: Sequence[np.ndarray], dtype: DType) -> np.ndarray:
    """Laplacian of the three centre rows of a 5-row input window, accumulator precision."""
    psi = working_array(_stack(psi_rows), dtype)
    return laplacian_array(psi)[1:4]


def flux_mac_row(psi_rows: Sequence[np.ndarray], lap: np.ndarray, dtype: DType) -> FluxCandidates:
    """Differences feeding the four fluxes around each point of the centre row."""
    psi = _stack(psi_rows)
    return FluxCandidates(d_lap=_faces(lap), d_psi=_faces(working_array(psi, dtype)), psi=psi[1])


def flux_nonmac_row(
    candidates: FluxCandidates, coeff, dtype: DType, srs_shift: int = 0, limiter: bool = True
) -> np.ndarray:
    """Limit the candidates, take the divergence and apply the update; interior columns."""
    lower_r, upper_r, lower_c, upper_c = (
        limited(candidates.d_lap[i], candidates.d_psi[i], limiter) for i in range(4)
    )
    div = (upper_r - lower_r) + (upper_c - lower_c)
    return hdiff_update(candidates.psi[HALO:-HALO], div, coeff, dtype, srs_shift)


def flux_row(
    psi_rows: Sequence[np.ndarray],
    lap: np.ndarray,
    coeff,
    dtype: DType,
    srs_shift: int = 0,
    limiter: bool = True,
) -> np.ndarray:
    """Flux stage of the two-core design: both flux halves on one core."""
    return flux_nonmac_row(flux_mac_row(psi_rows, lap, dtype), coeff, dtype, srs_shift, limiter)


def mono_row(
    psi_rows: Sequence[np.ndarray], coeff, dtype: DType, srs_shift: int = 0, limiter: bool = True
) -> np.ndarray:
    lap = lap_rows(psi_rows, dtype)
    return flux_row(list(psi_rows)[1:4], lap, coeff, dtype, srs_shift, limiter)


def elementary_row(spec: StencilSpec, psi_rows: Sequence[np.ndarray], dtype: DType) -> np.ndarray:
    return elementary_rows(spec, _stack(psi_rows)[np.newaxis], dtype)[0, 0]


def assemble_row(psi: np.ndarray, interior: np.ndarray, col_radius: int = HALO) -> np.ndarray:
    """Full-width output row: border columns from the input row, interior computed."""
    row = np.array(psi, copy=True)
    row[col_radius : row.shape[0] - col_radius] = interior
    return row
