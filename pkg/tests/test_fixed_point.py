import numpy as np
import pytest

from stencil_fabric.utils.fixed_point import (
    INT32_MAX,
    INT32_MIN,
    quantize_weight,
    saturate32,
    srs,
    srs_array,
)


@pytest.mark.parametrize(
    "acc,shift,expected",
    [(5, 1, 3), (-5, 1, -3), (4, 1, 2), (7, 2, 2), (-6, 2, -2), (6, 2, 2), (0, 5, 0), (123, 0, 123)],
)
def test_srs_rounds_half_away_from_zero(acc, shift, expected):
    assert srs(acc, shift) == expected


def test_srs_saturates():
    assert srs(2**40, 0) == INT32_MAX
    assert srs(-(2**40), 3) == INT32_MIN
    assert saturate32(INT32_MAX + 1) == INT32_MAX


def test_srs_of_scaled_value_is_saturated_value():
    rng = np.random.default_rng(0)
    values = [INT32_MIN, INT32_MAX, 0, -1, 1] + [int(v) for v in rng.integers(INT32_MIN, INT32_MAX, 200)]
    for shift in range(17):
        for x in values:
            assert srs(x * 2**shift, shift) == saturate32(x)


def test_srs_is_monotone():
    accs = np.arange(-2000, 2000, 7, dtype=np.int64)
    for shift in (0, 1, 3, 8):
        out = srs_array(accs, shift)
        assert np.all(np.diff(out) >= 0)


def test_srs_array_matches_scalar():
    accs = np.array([-(2**40), -9, -8, -7, -1, 0, 1, 7, 8, 9, 2**40], dtype=np.int64)
    for shift in (0, 2, 4):
        assert srs_array(accs, shift).tolist() == [srs(int(a), shift) for a in accs]
        assert srs_array(accs, shift).dtype == np.int32


def test_negative_shift_rejected():
    with pytest.raises(ValueError):
        srs(1, -1)


def test_quantize_weight():
    assert quantize_weight(1 / 3, 15) == 10923
    assert quantize_weight(-1.0, 0) == -1
    assert quantize_weight(0.2, 15) == 6554
