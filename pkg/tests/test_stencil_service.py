import numpy as np
import pytest

from stencil_fabric.models import DType, Grid3, GridGenerator, HdiffParams, StencilName
from stencil_fabric.services.stencil_service import (
    BUILTIN_STENCILS,
    GridShapeError,
    StencilIndexError,
    StencilParameterError,
    apply_elementary,
    elementary_point,
    flux_col_at,
    flux_row_at,
    get_stencil,
    hdiff_reference,
    laplacian_at,
    laplacian_field,
    op_count,
)
from stencil_fabric.utils.helpers import generate_grid
from tests import oracle


def plane(rows):
    return Grid3.from_array(np.array([rows]), DType.I32)


# --------------------------------------------------------------------------- Laplacian and fluxes


def test_laplacian_zero_on_constant_and_ramp():
    const = generate_grid(GridGenerator.CONSTANT, (6, 6, 2), value=7)
    ramp = generate_grid(GridGenerator.RAMP, (6, 6, 2))
    for r in range(1, 5):
        for c in range(1, 5):
            assert laplacian_at(const, r, c, 1) == 0
            assert laplacian_at(ramp, r, c, 0) == 0


def test_laplacian_impulse(impulse_7x7):
    grid = Grid3.from_array(np.pad(np.array([[[1]]]), ((0, 0), (2, 2), (2, 2))))
    assert laplacian_at(grid, 2, 2, 0) == 4
    assert laplacian_at(grid, 1, 2, 0) == -1
    assert laplacian_at(impulse_7x7, 3, 3, 0) == 4


def test_laplacian_index_error():
    grid = generate_grid(GridGenerator.CONSTANT, (5, 5, 1))
    with pytest.raises(StencilIndexError):
        laplacian_at(grid, 0, 2, 0)
    with pytest.raises(StencilIndexError):
        laplacian_at(grid, 2, 2, 1)


def test_laplacian_field_matches_pointwise(random_grid):
    grid = random_grid((9, 11, 2))
    lap = laplacian_field(grid)
    assert lap.dtype == np.int64
    assert not lap[:, 0, :].any() and not lap[:, :, -1].any()
    for r in range(1, 8):
        for c in range(1, 10):
            assert lap[1, r, c] == laplacian_at(grid, r, c, 1)


def test_laplacian_linearity_f32(random_grid):
    a = random_grid((12, 12, 1), DType.F32, seed=1)
    b = random_grid((12, 12, 1), DType.F32, seed=2)
    combined = Grid3.from_array(2.0 * a.data + 3.0 * b.data, DType.F32)
    expected = 2.0 * laplacian_field(a) + 3.0 * laplacian_field(b)
    np.testing.assert_allclose(laplacian_field(combined), expected, rtol=1e-5, atol=1e-5)


def flux_grid(psi_lo, psi_hi, lap_lo, lap_hi):
    """3x5 plane plus a matching Laplacian array with chosen values at rows 1 and 2."""
    grid = plane([[0] * 5, [0, 0, psi_lo, 0, 0], [0, 0, psi_hi, 0, 0], [0] * 5])
    lap = np.zeros((1, 4, 5), dtype=np.int64)
    lap[0, 1, 2], lap[0, 2, 2] = lap_lo, lap_hi
    return grid, lap


@pytest.mark.parametrize(
    "delta_lap,delta_psi,expected",
    [(2, 3, 0), (2, -1, 2), (0, 5, 0), (-5, 4, -5), (1, 1, 0)],
)
def test_flux_row_limiter(delta_lap, delta_psi, expected):
    grid, lap = flux_grid(10, 10 + delta_psi, 100, 100 + delta_lap)
    assert flux_row_at(grid, lap, 1, 2, 0) == expected


def test_flux_without_limiter_passes_difference():
    grid, lap = flux_grid(10, 13, 100, 102)
    assert flux_row_at(grid, lap, 1, 2, 0, limiter=False) == 2


def test_flux_col_on_constant_is_zero():
    grid = generate_grid(GridGenerator.CONSTANT, (6, 6, 1), value=9)
    lap = laplacian_field(grid)
    assert flux_col_at(grid, lap, 2, 2, 0) == 0
    with pytest.raises(StencilIndexError):
        flux_col_at(grid, lap, 2, 4, 0)


def test_flux_accepts_grid_holding_laplacian():
    grid = generate_grid(GridGenerator.IMPULSE, (7, 7, 1))
    lap_grid = Grid3.from_array(laplacian_field(grid).astype(np.int32))
    assert flux_row_at(grid, lap_grid, 1, 3, 0) == -1


def test_limiter_sign_property(random_grid):
    grid = random_grid((10, 10, 2), seed=5)
    lap = laplacian_field(grid)
    for d in range(2):
        for r in range(1, 7):
            for c in range(1, 9):
                flux = flux_row_at(grid, lap, r, c, d)
                assert flux * (int(grid.data[d, r + 1, c]) - int(grid.data[d, r, c])) <= 0
                flux = flux_col_at(grid, lap, c, r, d)
                assert flux * (int(grid.data[d, c, r + 1]) - int(grid.data[d, c, r])) <= 0


# --------------------------------------------------------------------------- hdiff


@pytest.mark.parametrize("generator", [GridGenerator.CONSTANT, GridGenerator.RAMP, GridGenerator.COLUMN_RAMP])
@pytest.mark.parametrize("dtype", [DType.I32, DType.F32])
def test_hdiff_identity_on_flat_fields(generator, dtype):
    grid = generate_grid(generator, (9, 8, 3), dtype)
    assert hdiff_reference(grid) == grid


def test_hdiff_identity_with_coefficient_at_zero_shift():
    grid = generate_grid(GridGenerator.RAMP, (8, 8, 1))
    assert hdiff_reference(grid, HdiffParams(coeff=3, srs_shift=0)) == grid


@pytest.mark.parametrize("value, shift, expected", [(7, 3, 1), (-12, 3, -2), (7, 0, 7), (100, 2, 25)])
def test_hdiff_shift_rescales_the_update(value, shift, expected):
    grid = generate_grid(GridGenerator.CONSTANT, (7, 7, 1), value=value)
    out = hdiff_reference(grid, HdiffParams(srs_shift=shift)).data[0]
    assert (out[2:5, 2:5] == expected).all()
    np.testing.assert_array_equal(out[:2], grid.data[0, :2])


def test_hdiff_impulse_plane(impulse_7x7):
    out = hdiff_reference(impulse_7x7)
    expected = np.zeros((7, 7), dtype=np.int32)
    expected[2:5, 2:5] = [[2, -3, 2], [-3, 1, -3], [2, -3, 2]]
    np.testing.assert_array_equal(out.data[0], expected)


def test_hdiff_preserves_halo(random_grid):
    grid = random_grid((12, 10, 3))
    out = hdiff_reference(grid, HdiffParams(coeff=2, sweeps=2))
    for region in (np.s_[:, :2, :], np.s_[:, -2:, :], np.s_[:, :, :2], np.s_[:, :, -2:]):
        np.testing.assert_array_equal(out.data[region], grid.data[region])


def test_hdiff_matches_oracle_i32():
    rng = np.random.default_rng(2024)
    for seed in range(100):
        dims = tuple(int(x) for x in rng.integers(5, 33, size=3))
        grid = generate_grid(GridGenerator.RANDOM, dims, DType.I32, seed=seed)
        expected = oracle.hdiff(grid.data)
        np.testing.assert_array_equal(hdiff_reference(grid).data, expected)


def test_hdiff_matches_oracle_f32():
    rng = np.random.default_rng(7)
    for seed in range(100):
        dims = tuple(int(x) for x in rng.integers(5, 33, size=3))
        grid = generate_grid(GridGenerator.RANDOM, dims, DType.F32, seed=seed)
        expected = oracle.hdiff(grid.data, coeff=0.5)
        out = hdiff_reference(grid, HdiffParams(coeff=0.5)).data
        np.testing.assert_allclose(out, expected, rtol=1e-5, atol=0)


def test_hdiff_oracle_with_shift_and_coefficient_grid(random_grid):
    grid = random_grid((11, 13, 2), seed=3)
    coeff = generate_grid(GridGenerator.RANDOM, (11, 13, 2), DType.I32, seed=4)
    coeff = Grid3.from_array(np.abs(coeff.data) % 5)
    out = hdiff_reference(grid, HdiffParams(coeff_grid=coeff, srs_shift=3))
    for d in range(2):
        expected = oracle.hdiff_plane(
            grid.data[d].tolist(), coeff=coeff.data[d].tolist(), shift=3
        )
        np.testing.assert_array_equal(out.data[d], expected)


def test_hdiff_no_limiter_mode(random_grid):
    grid = random_grid((9, 9, 1), seed=11)
    out = hdiff_reference(grid, HdiffParams(limiter=False))
    np.testing.assert_array_equal(out.data, oracle.hdiff(grid.data, limiter=False))
    assert out != hdiff_reference(grid)


def test_hdiff_sweeps_reapply(random_grid):
    grid = random_grid((10, 10, 1), seed=12)
    twice = hdiff_reference(hdiff_reference(grid))
    assert hdiff_reference(grid, HdiffParams(sweeps=2)) == twice


def test_hdiff_saturates():
    data = np.zeros((1, 5, 5), dtype=np.int32)
    data[0, 2, 2] = 2**31 - 1
    data[0, 1, 2] = -(2**31)
    out = hdiff_reference(Grid3.from_array(data), HdiffParams(coeff=1000))
    assert out.data[0, 2, 2] in (2**31 - 1, -(2**31))


def test_hdiff_errors():
    small = generate_grid(GridGenerator.CONSTANT, (4, 9, 1))
    with pytest.raises(GridShapeError):
        hdiff_reference(small)
    f32 = generate_grid(GridGenerator.CONSTANT, (6, 6, 1), DType.F32)
    with pytest.raises(StencilParameterError):
        hdiff_reference(f32, HdiffParams(srs_shift=2))
    i32 = generate_grid(GridGenerator.CONSTANT, (6, 6, 1))
    with pytest.raises(StencilParameterError):
        hdiff_reference(i32, HdiffParams(coeff=0.5))
    wrong = generate_grid(GridGenerator.CONSTANT, (6, 7, 1))
    with pytest.raises(StencilParameterError):
        hdiff_reference(i32, HdiffParams(coeff_grid=wrong))


# --------------------------------------------------------------------------- elementary stencils


def test_builtin_stencils_are_bounded():
    for spec in BUILTIN_STENCILS.values():
        assert spec.row_radius <= 1 and spec.col_radius <= 1
    jacobi = [StencilName.JAC1D, StencilName.JAC2D3PT, StencilName.JAC2D5PT, StencilName.SEIDEL9PT]
    for name in jacobi:
        weights = {tap.weight for tap in BUILTIN_STENCILS[name].taps}
        assert len(weights) == 1
        assert sum(tap.weight for tap in BUILTIN_STENCILS[name].taps) == pytest.approx(1.0)


def test_get_stencil_unknown():
    with pytest.raises(StencilParameterError):
        get_stencil("jac3d7pt")


def test_jac2d5pt_on_constant():
    grid = generate_grid(GridGenerator.CONSTANT, (6, 6, 1), value=7)
    assert apply_elementary(get_stencil("jac2d5pt"), grid) == grid
    f32 = generate_grid(GridGenerator.CONSTANT, (6, 6, 1), DType.F32, value=7)
    np.testing.assert_allclose(apply_elementary(get_stencil("jac2d5pt"), f32).data, 7.0, rtol=1e-6)


def test_lap5pt_on_ramp_is_zero_inside():
    grid = generate_grid(GridGenerator.RAMP, (6, 7, 1))
    out = apply_elementary(get_stencil("lap5pt"), grid)
    assert not out.data[0, 1:-1, 1:-1].any()
    np.testing.assert_array_equal(out.data[0, 0], grid.data[0, 0])


def test_jac1d_row():
    grid = Grid3.from_array(np.array([[[0, 1, 2, 3, 4]]]))
    out = apply_elementary(get_stencil("jac1d"), grid)
    np.testing.assert_array_equal(out.data[0, 0], [0, 1, 2, 3, 4])
    f32 = Grid3.from_array(np.array([[[0, 1, 2, 3, 4]]]), DType.F32)
    np.testing.assert_allclose(apply_elementary(get_stencil("jac1d"), f32).data[0, 0], [0, 1, 2, 3, 4], rtol=1e-6)


def test_jac2d3pt_reads_three_rows():
    spec = get_stencil("jac2d3pt")
    assert spec.row_extent == 3 and spec.col_radius == 0


def test_elementary_grid_too_small():
    with pytest.raises(GridShapeError):
        apply_elementary(get_stencil("seidel9pt"), generate_grid(GridGenerator.CONSTANT, (2, 5, 1)))


@pytest.mark.parametrize("name", [member.value for member in StencilName])
@pytest.mark.parametrize("dtype", [DType.I32, DType.F32])
def test_elementary_matches_oracle(name, dtype):
    spec = get_stencil(name)
    taps = [(tap.dr, tap.dc, tap.weight) for tap in spec.taps]
    rng = np.random.default_rng(len(name) * 31 + (dtype is DType.F32))
    for seed in range(100):
        dims = tuple(int(x) for x in rng.integers(5, 33, size=3))
        grid = generate_grid(GridGenerator.RANDOM, dims, dtype, seed=seed)
        out = apply_elementary(spec, grid).data
        expected = oracle.elementary(grid.data, taps, spec.frac_bits)
        if dtype is DType.I32:
            np.testing.assert_array_equal(out, expected)
        else:
            np.testing.assert_allclose(out, expected, rtol=1e-5, atol=0)


def test_elementary_point_agrees_with_field(random_grid):
    spec = get_stencil("seidel9pt")
    grid = random_grid((7, 7, 1))
    out = apply_elementary(spec, grid)
    assert elementary_point(spec, grid, 3, 4, 0) == out.value(3, 4, 0)


# --------------------------------------------------------------------------- op counts


def test_op_count_hdiff():
    small = op_count((5, 5, 1), "hdiff")
    assert (small.macs, small.others, small.ops) == (33, 12, 78)
    assert op_count((256, 256, 64), "hdiff").macs == 33 * 252 * 252 * 64
    assert op_count((4, 4, 1), "hdiff").ops == 0


def test_op_count_elementary():
    assert op_count((6, 6, 1), get_stencil("jac2d5pt")).macs == 80
    assert op_count((1, 5, 2), get_stencil("jac1d")).macs == 3 * 3 * 2
