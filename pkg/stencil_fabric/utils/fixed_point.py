"""Shift-round-saturate arithmetic of the 32-bit fixed-point datapath."""

from __future__ import annotations

import numpy as np

from stencil_fabric.models import FixedPointSemantics

SEMANTICS = FixedPointSemantics()
INT32_MIN = SEMANTICS.output_min
INT32_MAX = SEMANTICS.output_max


def saturate32(value: int) -> int:
    return max(INT32_MIN, min(INT32_MAX, int(value)))


def srs(acc: int, shift: int) -> int:
    """Shift right by ``shift`` rounding half away from zero, then saturate to int32."""
    if shift < 0:
        raise ValueError("shift must be non-negative")
    acc = int(acc)
    if shift == 0:
        return saturate32(acc)
    half = 1 << (shift - 1)
    magnitude = (abs(acc) + half) >> shift
    return saturate32(-magnitude if acc < 0 else magnitude)


def saturate32_array(values: np.ndarray) -> np.ndarray:
    return np.clip(values, INT32_MIN, INT32_MAX).astype(np.int32)


def srs_array(acc: np.ndarray, shift: int) -> np.ndarray:
    """Vector form of :func:`srs` over an int64 accumulator array."""
    if shift < 0:
        raise ValueError("shift must be non-negative")
    acc = np.asarray(acc, dtype=np.int64)
    if shift == 0:
        return saturate32_array(acc)
    half = np.int64(1 << (shift - 1))
    magnitude = (np.abs(acc) + half) >> np.int64(shift)
    return saturate32_array(np.where(acc < 0, -magnitude, magnitude))


def quantize_weight(weight: float, frac_bits: int) -> int:
    """Q-format integer for a real weight, rounded half away from zero."""
    scaled = weight * (1 << frac_bits)
    return int(np.sign(scaled) * np.floor(abs(scaled) + 0.5))
