import csv
import io
import json

import numpy as np
import pytest
from typer.testing import CliRunner

from stencil_fabric import cli
from stencil_fabric.models import DType, Grid3, GridGenerator, HdiffParams, MappingPlan, SimReport
from stencil_fabric.services.stencil_service import hdiff_reference
from stencil_fabric.utils.grid_io import read_grid, write_grid
from stencil_fabric.utils.helpers import generate_grid, grid_checksum


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def invoke(runner, *args):
    return runner.invoke(cli.app, [str(arg) for arg in args])


def test_golden_prints_checksum(runner, tmp_path):
    out = tmp_path / "out.sprt"
    result = invoke(runner, "golden", "--gen", "random", "--seed", "3", "--dims", "16,16,2", "--output", out)
    assert result.exit_code == 0, result.stderr
    grid = generate_grid(GridGenerator.RANDOM, (16, 16, 2), DType.I32, seed=3)
    expected = hdiff_reference(grid, HdiffParams())
    assert result.stdout.strip() == grid_checksum(expected)
    assert read_grid(out) == expected


def test_golden_random_falls_back_to_default_seed(runner, monkeypatch):
    monkeypatch.setenv("STENCIL_FABRIC_DEFAULT_SEED", "5")
    cli.get_settings.cache_clear()
    seeded = invoke(runner, "golden", "--gen", "random", "--seed", "5", "--dims", "8,8,1")
    fallback = invoke(runner, "golden", "--gen", "random", "--dims", "8,8,1")
    assert fallback.exit_code == 0
    assert fallback.stdout == seeded.stdout


def test_golden_elementary_from_csv(runner, tmp_path):
    path = tmp_path / "grid.csv"
    path.write_text("1,2,3,4\n5,6,7,8\n9,10,11,12\n")
    result = invoke(runner, "golden", "--kernel", "lap5pt", "--input", path)
    assert result.exit_code == 0, result.stderr
    assert len(result.stdout.strip()) == 64


@pytest.mark.parametrize(
    "args",
    [
        ["golden", "--dims", "8,8,1"],
        ["golden", "--gen", "constant", "--dims", "8,x,1"],
        ["golden", "--gen", "constant", "--dims", "3,8,1"],
        ["golden", "--gen", "constant", "--dims", "8,8,1", "--kernel", "heat"],
        ["golden", "--input", "missing.sprt"],
        ["analyze", "--dims", "2,2,1"],
        ["plan", "--design", "quad_i32"],
        ["plan", "--design", "scaleout:33"],
    ],
)
def test_usage_errors_exit_2(runner, args):
    result = invoke(runner, *args)
    assert result.exit_code == 2
    assert result.stderr


def test_analyze_json(runner):
    result = invoke(runner, "analyze", "--dims", "256,256,64")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["lap_comp"] == "12700800"
    assert report["bound"] in {"compute-bound", "memory-bound", "balanced"}


def test_analyze_csv(runner, tmp_path):
    out = tmp_path / "analysis.csv"
    result = invoke(runner, "analyze", "--dims", "16,16,1", "--format", "csv", "--output", out)
    assert result.exit_code == 0
    rows = list(csv.DictReader(out.open()))
    assert [row["group"] for row in rows] == ["lap", "flx", "hdiff"]


def test_simulate_report_and_output(runner, tmp_path):
    out = tmp_path / "sim.sprt"
    report_path = tmp_path / "report.json"
    result = invoke(
        runner, "simulate", "--design", "tri_i32", "--gen", "random", "--seed", "9",
        "--dims", "12,16,2", "--output", out, "--report", report_path,
    )
    assert result.exit_code == 0, result.stderr
    report = SimReport.model_validate_json(report_path.read_text())
    assert report.functional_match
    assert report.design == "tri_i32_direct"
    grid = generate_grid(GridGenerator.RANDOM, (12, 16, 2), DType.I32, seed=9)
    assert read_grid(out) == hdiff_reference(grid)


def test_simulate_from_plan_file_as_csv(runner, tmp_path):
    plan_path = tmp_path / "plan.json"
    assert invoke(runner, "plan", "--design", "bblock:2", "--cols", "16", "--output", plan_path).exit_code == 0
    MappingPlan.model_validate_json(plan_path.read_text())
    result = invoke(runner, "simulate", "--plan", plan_path, "--gen", "ramp", "--dims", "12,16,1", "--format", "csv")
    assert result.exit_code == 0, result.stderr
    assert result.stdout.splitlines()[0].startswith("design,kind,name")


def test_simulate_needs_one_design_source(runner):
    assert invoke(runner, "simulate", "--gen", "ramp", "--dims", "8,8,1").exit_code == 2


def test_simulate_mismatch_exits_1(runner, mocker):
    real = cli.SimulatorService.simulate

    def broken(self, *args, **kwargs):
        output, report = real(self, *args, **kwargs)
        return output, report.model_copy(update={"functional_match": False, "max_abs_error": 3.0})

    mocker.patch.object(cli.SimulatorService, "simulate", broken)
    result = invoke(runner, "simulate", "--design", "single_i32", "--gen", "ramp", "--dims", "8,8,1")
    assert result.exit_code == 1
    assert "mismatch" in result.stderr


def test_simulate_dtype_mismatch_with_input(runner, tmp_path):
    path = tmp_path / "grid.sprt"
    write_grid(generate_grid(GridGenerator.RAMP, (8, 8, 1)), path)
    result = invoke(runner, "simulate", "--design", "single_f32", "--input", path)
    assert result.exit_code == 2


def test_sweep_designs(runner):
    result = invoke(
        runner, "sweep", "--designs", "single_i32,tri_i32,single_f32", "--gen", "random", "--seed", "1", "--dims", "12,16,1"
    )
    assert result.exit_code == 0, result.stderr
    rows = list(csv.DictReader(io.StringIO(result.stdout)))
    assert [row["design"] for row in rows] == ["single_i32", "tri_i32_direct", "single_f32"]
    assert float(rows[0]["speedup"]) == 1.0
    assert float(rows[1]["speedup"]) > 1.0
    assert all(row["functional_match"] == "True" for row in rows)


def test_sweep_bblocks(runner, tmp_path):
    out = tmp_path / "sweep.csv"
    result = invoke(
        runner, "sweep", "--bblocks", "1,2", "--gen", "random", "--seed", "2", "--dims", "16,16,4", "--report", out
    )
    assert result.exit_code == 0, result.stderr
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == cli.SWEEP_COLUMNS
    assert [row["n_bblocks"] for row in rows] == ["1", "2"]


def test_roofline_table_and_json(runner, tmp_path):
    table = invoke(runner, "roofline")
    assert table.exit_code == 0
    assert "V100" in table.stdout
    report_path = tmp_path / "report.json"
    invoke(runner, "simulate", "--design", "single_i32", "--gen", "ramp", "--dims", "8,8,1", "--report", report_path)
    result = invoke(runner, "roofline", "--sim-report", report_path, "--format", "json")
    assert result.exit_code == 0, result.stderr
    points = json.loads(result.stdout)
    assert points[-1]["name"] == "simulated single_i32"
    assert points[-1]["peak_perf"] == pytest.approx(16.0)


def test_compare(runner, tmp_path):
    base = generate_grid(GridGenerator.RANDOM, (6, 6, 2), DType.F32, seed=1)
    same, near, far = tmp_path / "a.sprt", tmp_path / "b.sprt", tmp_path / "c.sprt"
    write_grid(base, same)
    data = base.data.copy()
    data[1, 2, 3] *= np.float32(1.000001)
    write_grid(Grid3.from_array(data, DType.F32), near)
    data[0, 4, 5] += np.float32(10.0)
    write_grid(Grid3.from_array(data, DType.F32), far)

    assert invoke(runner, "compare", same, same).exit_code == 0
    assert invoke(runner, "compare", same, near).exit_code == 1
    assert invoke(runner, "compare", same, near, "--tolerance", "1e-5").exit_code == 0
    result = invoke(runner, "compare", same, far, "--tolerance", "1e-5")
    assert result.exit_code == 1
    assert "(r=4, c=5, d=0)" in result.stdout


def test_compare_shape_mismatch(runner, tmp_path):
    a, b = tmp_path / "a.sprt", tmp_path / "b.sprt"
    write_grid(generate_grid(GridGenerator.RAMP, (6, 6, 1)), a)
    write_grid(generate_grid(GridGenerator.RAMP, (6, 7, 1)), b)
    assert invoke(runner, "compare", a, b).exit_code == 2


def test_fabric_file_option(runner, tmp_path):
    path = tmp_path / "fabric.json"
    assert invoke(runner, "fabric", "--output", path).exit_code == 0
    fabric = json.loads(path.read_text())
    fabric["shim_count"] = 2
    path.write_text(json.dumps(fabric))
    result = invoke(runner, "plan", "--design", "scaleout:5", "--fabric", path)
    assert result.exit_code == 2
    assert "insufficient shim channels" in result.stderr
