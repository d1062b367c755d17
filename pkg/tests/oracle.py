"""Straight-loop scalar reference kernels used only by the tests.

Written independently of the package: Python ints for the fixed-point
path and float32 scalars, evaluated left to right, for the floating-point path.
"""

from __future__ import annotations

import math

import numpy as np

I32_MIN, I32_MAX = -(2**31), 2**31 - 1


def _round_shift(acc: int, shift: int) -> int:
    if shift == 0:
        value = acc
    else:
        # floor(|acc| / 2^s + 1/2) in integers
        value = (2 * abs(acc) + 2**shift) // 2 ** (shift + 1)
        value = -value if acc < 0 else value
    return max(I32_MIN, min(I32_MAX, value))


def hdiff_plane(psi, coeff=1, shift: int = 0, integer: bool = True, limiter: bool = True):
    """One sweep over a 2D list-of-lists plane."""
    rows, cols = len(psi), len(psi[0])
    four = 4 if integer else np.float32(4)
    lap = [[0] * cols for _ in range(rows)]
    for r in range(1, rows - 1):
        for c in range(1, cols - 1):
            lap[r][c] = four * psi[r][c] - psi[r + 1][c] - psi[r - 1][c] - psi[r][c + 1] - psi[r][c - 1]

    def limit(dl, dp):
        if not limiter:
            return dl
        return dl if dl * dp <= 0 else type(dl)(0)

    out = [row[:] for row in psi]
    for r in range(2, rows - 2):
        for c in range(2, cols - 2):
            f_hi = limit(lap[r + 1][c] - lap[r][c], psi[r + 1][c] - psi[r][c])
            f_lo = limit(lap[r][c] - lap[r - 1][c], psi[r][c] - psi[r - 1][c])
            g_hi = limit(lap[r][c + 1] - lap[r][c], psi[r][c + 1] - psi[r][c])
            g_lo = limit(lap[r][c] - lap[r][c - 1], psi[r][c] - psi[r][c - 1])
            k = coeff[r][c] if isinstance(coeff, list) else coeff
            k = k if integer else np.float32(k)
            div = (f_hi - f_lo) + (g_hi - g_lo)
            if integer:
                out[r][c] = _round_shift(psi[r][c] - k * div, shift)
            else:
                out[r][c] = psi[r][c] - k * div
    return out


def hdiff(data: np.ndarray, coeff=1, shift: int = 0, limiter: bool = True) -> np.ndarray:
    """Apply one sweep to every plane of a (D, R, C) array."""
    integer = np.issubdtype(data.dtype, np.integer)
    planes = []
    for d in range(data.shape[0]):
        psi = [[int(v) if integer else np.float32(v) for v in row] for row in data[d]]
        planes.append(hdiff_plane(psi, coeff, shift, integer, limiter))
    return np.array(planes, dtype=np.int64 if integer else np.float64)


def quantize(weight: float, frac_bits: int) -> int:
    scaled = weight * 2**frac_bits
    return int(math.copysign(math.floor(abs(scaled) + 0.5), scaled))


def elementary(data: np.ndarray, taps, frac_bits: int) -> np.ndarray:
    """Weighted tap sum with a copied border; taps are (dr, dc, weight)."""
    integer = np.issubdtype(data.dtype, np.integer)
    rr = max(abs(dr) for dr, _, _ in taps)
    cr = max(abs(dc) for _, dc, _ in taps)
    depth, rows, cols = data.shape
    out = data.astype(np.int64 if integer else np.float64)
    for d in range(depth):
        for r in range(rr, rows - rr):
            for c in range(cr, cols - cr):
                if integer:
                    acc = sum(quantize(w, frac_bits) * int(data[d, r + dr, c + dc]) for dr, dc, w in taps)
                    out[d, r, c] = _round_shift(acc, frac_bits)
                else:
                    total = np.float32(0)
                    for dr, dc, w in taps:
                        total = np.float32(total + np.float32(w) * np.float32(data[d, r + dr, c + dc]))
                    out[d, r, c] = total
    return out
