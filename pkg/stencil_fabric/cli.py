import csv
import io
import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from stencil_fabric.config import get_settings
from stencil_fabric.models import (
    DesignKind,
    DType,
    FabricSpec,
    Grid3,
    GridGenerator,
    HdiffParams,
    RunConfig,
    ShimDirection,
    SimReport,
    StencilSpec,
    exact_str,
)
from stencil_fabric.services.analytic_service import AnalyticService, group_cycles
from stencil_fabric.services.fabric_service import (
    default_versal_fabric,
    fabric_json,
    load_fabric,
    peak_gops,
    shim_read_gbs,
)
from stencil_fabric.services.mapper_service import (
    build_design,
    load_plan,
    parse_design,
    plan_json,
    require_valid,
    scale_out_plan,
)
from stencil_fabric.services.simulator_service import SimulatorService, report_csv, report_json
from stencil_fabric.services.stencil_service import StencilService, get_stencil
from stencil_fabric.utils.grid_io import read_grid, write_grid
from stencil_fabric.utils.helpers import generate_grid, grid_checksum, parse_dims, parse_int_list
from stencil_fabric.utils.logging_config import setup_logging

app = typer.Typer(add_completion=False, help="Stencil kernels, cycle models and dataflow simulation for spatial accelerators.")
console = Console()
err_console = Console(stderr=True)

EXIT_MISMATCH = 1
EXIT_USAGE = 2
SWEEP_COLUMNS = ["design", "n_bblocks", "total_cycles", "runtime_ms", "speedup", "functional_match"]


@contextmanager
def _guard() -> Iterator[None]:
    """Map domain, validation and I/O failures to exit code 2."""
    try:
        yield
    except typer.Exit:
        raise
    except ValidationError as exc:
        err_console.print(f"[bold red]Invalid input:[/] {exc}")
        raise typer.Exit(code=EXIT_USAGE)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        err_console.print(f"[bold red]Error:[/] {exc}")
        raise typer.Exit(code=EXIT_USAGE)


@app.callback()
def main_options(verbose: bool = typer.Option(False, "--verbose", help="Enable debug logging.")) -> None:
    with _guard():
        settings = get_settings()
    setup_logging("DEBUG" if verbose else settings.log_level, settings.log_dir, settings.log_to_file)


def _dims(text: Optional[str]) -> tuple:
    return parse_dims(text or get_settings().default_dims)


def _fabric(path: Optional[Path]) -> FabricSpec:
    path = path or get_settings().fabric_file
    return load_fabric(path) if path else default_versal_fabric()


def _seed(generator: Optional[GridGenerator], seed: Optional[int]) -> Optional[int]:
    if generator is GridGenerator.RANDOM and seed is None:
        return get_settings().default_seed
    return seed


def _load_grid(config: RunConfig) -> Grid3:
    if config.input_path is not None:
        return read_grid(config.input_path)
    return generate_grid(config.generator, config.dims, config.dtype, config.seed)


def _hdiff_params(coeff: float, srs_shift: int, sweeps: int, no_limiter: bool, dtype: DType) -> HdiffParams:
    value = int(coeff) if dtype is DType.I32 and float(coeff).is_integer() else coeff
    return HdiffParams(coeff=value, srs_shift=srs_shift, sweeps=sweeps, limiter=not no_limiter)


def _emit(text: str, path: Optional[Path]) -> None:
    if path is None:
        typer.echo(text, nl=False)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


@app.command("golden")
def cmd_golden(
    kernel: str = typer.Option("hdiff", "--kernel", "-k", help="hdiff or an elementary stencil name."),
    input_path: Optional[Path] = typer.Option(None, "--input", "-i", help="SPRT or CSV grid file."),
    gen: Optional[GridGenerator] = typer.Option(None, "--gen", help="Generate the input grid."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    dims: Optional[str] = typer.Option(None, "--dims", help="R,C,D"),
    dtype: DType = typer.Option(DType.I32, "--dtype"),
    coeff: float = typer.Option(1.0, "--coeff"),
    srs_shift: int = typer.Option(0, "--srs-shift"),
    sweeps: int = typer.Option(1, "--sweeps"),
    no_limiter: bool = typer.Option(False, "--no-limiter"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the result as SPRT."),
) -> None:
    """Run a golden kernel and print the output checksum."""
    with _guard():
        config = RunConfig(
            command="golden", input_path=input_path, generator=gen, seed=_seed(gen, seed), dims=_dims(dims), dtype=dtype, output_path=output
        )
        grid = _load_grid(config)
        params = _hdiff_params(coeff, srs_shift, sweeps, no_limiter, grid.dtype) if kernel == "hdiff" else None
        result = StencilService(get_settings(), logging.getLogger("stencil_fabric.stencil")).run(grid, kernel, params)
        if output is not None:
            output.parent.mkdir(parents=True, exist_ok=True)
            write_grid(result, output)
    typer.echo(grid_checksum(result))


@app.command("analyze")
def cmd_analyze(
    dims: Optional[str] = typer.Option(None, "--dims", help="R,C,D"),
    fmt: str = typer.Option("json", "--format", help="json or csv"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
) -> None:
    """Closed-form compute and memory cycles with bound classification."""
    with _guard():
        report = AnalyticService(get_settings(), logging.getLogger("stencil_fabric.analytic")).analyze(_dims(dims))
        if fmt == "csv":
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(["group", "comp_cycles", "mem_cycles", "ratio", "bound"])
            for group, (comp, mem) in group_cycles(report).items():
                ratio = report.ratios.get(group)
                writer.writerow(
                    [group, exact_str(comp), exact_str(mem), "" if ratio is None else exact_str(ratio), report.group_bounds[group].value]
                )
            text = buffer.getvalue()
        elif fmt == "json":
            text = report.model_dump_json(indent=2) + "\n"
        else:
            raise ValueError(f"unknown format {fmt!r}")
        _emit(text, output)


def _kernel_for(tag, params: HdiffParams) -> HdiffParams | StencilSpec:
    return get_stencil(tag.stencil) if tag.kind is DesignKind.ELEMENTARY else params


@app.command("simulate")
def cmd_simulate(
    design: Optional[str] = typer.Option(None, "--design", "-d", help="e.g. tri_i32_direct, bblock:4, scaleout:8"),
    plan_file: Optional[Path] = typer.Option(None, "--plan", help="Plan JSON instead of --design."),
    input_path: Optional[Path] = typer.Option(None, "--input", "-i"),
    gen: Optional[GridGenerator] = typer.Option(None, "--gen"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    dims: Optional[str] = typer.Option(None, "--dims", help="R,C,D"),
    coeff: float = typer.Option(1.0, "--coeff"),
    srs_shift: int = typer.Option(0, "--srs-shift"),
    sweeps: int = typer.Option(1, "--sweeps"),
    no_limiter: bool = typer.Option(False, "--no-limiter"),
    fabric_file: Optional[Path] = typer.Option(None, "--fabric"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the simulated grid as SPRT."),
    report: Optional[Path] = typer.Option(None, "--report", help="Write the report here instead of stdout."),
    fmt: str = typer.Option("json", "--format", help="json or csv"),
) -> None:
    """Run one design on the dataflow simulator."""
    with _guard():
        if (design is None) == (plan_file is None):
            raise ValueError("give exactly one of --design or --plan")
        fabric = _fabric(fabric_file)
        plan = load_plan(plan_file) if plan_file else None
        tag = plan.design if plan else parse_design(design)
        config = RunConfig(
            command="simulate",
            input_path=input_path,
            generator=gen,
            seed=_seed(gen, seed),
            dims=_dims(dims),
            dtype=tag.dtype,
            designs=[tag.name],
            fabric_file=fabric_file,
            output_path=output,
            report_path=report,
            report_format=fmt,
        )
        grid = _load_grid(config)
        plan = plan or build_design(tag, fabric, cols=grid.cols)
        params = _hdiff_params(coeff, srs_shift, sweeps, no_limiter, grid.dtype)
        service = SimulatorService(get_settings(), logging.getLogger("stencil_fabric.simulator"))
        result, sim_report = service.simulate(plan, grid, _kernel_for(tag, params), fabric)
        if output is not None:
            output.parent.mkdir(parents=True, exist_ok=True)
            write_grid(result, output)
        _emit(report_csv(sim_report) if fmt == "csv" else report_json(sim_report), report)
    if not sim_report.functional_match:
        err_console.print(f"[bold red]Functional mismatch:[/] max abs error {sim_report.max_abs_error}")
        raise typer.Exit(code=EXIT_MISMATCH)


@app.command("sweep")
def cmd_sweep(
    designs: Optional[str] = typer.Option(None, "--designs", help="Comma-separated design names."),
    bblocks: Optional[str] = typer.Option(None, "--bblocks", help="Comma-separated B-block counts."),
    input_path: Optional[Path] = typer.Option(None, "--input", "-i"),
    gen: Optional[GridGenerator] = typer.Option(None, "--gen"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    dims: Optional[str] = typer.Option(None, "--dims", help="R,C,D"),
    dtype: DType = typer.Option(DType.I32, "--dtype", help="Grid dtype for f32 designs."),
    fabric_file: Optional[Path] = typer.Option(None, "--fabric"),
    report: Optional[Path] = typer.Option(None, "--report", help="Write the CSV table here."),
    fmt: str = typer.Option("csv", "--format", help="csv or json"),
) -> None:
    """Simulate a design list or a B-block range; one row per design."""
    with _guard():
        if (designs is None) == (bblocks is None):
            raise ValueError("give exactly one of --designs or --bblocks")
        fabric = _fabric(fabric_file)
        config = RunConfig(
            command="sweep",
            input_path=input_path,
            generator=gen,
            seed=_seed(gen, seed),
            dims=_dims(dims),
            dtype=dtype,
            designs=[name.strip() for name in designs.split(",") if name.strip()] if designs else [],
            fabric_file=fabric_file,
            report_path=report,
        )
        service = SimulatorService(get_settings(), logging.getLogger("stencil_fabric.simulator"))
        base = _load_grid(config)
        if bblocks is not None:
            plans = [scale_out_plan(n, fabric, cols=base.cols) for n in parse_int_list(bblocks)]
            reports = service.sweep(plans, base, None, fabric)
        else:
            reports = []
            for name in config.designs:
                tag = parse_design(name)
                grid = base if tag.dtype is base.dtype else Grid3.from_array(base.data, tag.dtype)
                plan = build_design(tag, fabric, cols=grid.cols)
                kernel = get_stencil(tag.stencil) if tag.kind is DesignKind.ELEMENTARY else None
                reports.extend(service.sweep([plan], grid, kernel, fabric))
        _emit(_sweep_table(reports) if fmt == "csv" else report_json(reports), report)
    if not all(entry.functional_match for entry in reports):
        raise typer.Exit(code=EXIT_MISMATCH)


def _sweep_table(reports: List[SimReport]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    baseline = reports[0].total_cycles if reports else 0
    for entry in reports:
        n_bblocks = entry.design.split(":")[1] if entry.design.startswith("scaleout:") else ""
        speedup = baseline / entry.total_cycles if entry.total_cycles else 0.0
        writer.writerow(
            [entry.design, n_bblocks, entry.total_cycles, f"{entry.runtime_ms:.6f}", f"{speedup:.4f}", entry.functional_match]
        )
    return buffer.getvalue()


@app.command("roofline")
def cmd_roofline(
    platforms: Optional[Path] = typer.Option(None, "--platforms", help="Platform table JSON."),
    sim_reports: List[Path] = typer.Option([], "--sim-report", help="SimReport JSON to add as a row."),
    fabric_file: Optional[Path] = typer.Option(None, "--fabric"),
    fmt: str = typer.Option("table", "--format", help="table, json or csv"),
) -> None:
    """Roofline placement of the comparison platforms and simulated runs."""
    with _guard():
        fabric = _fabric(fabric_file)
        simulated = []
        for path in sim_reports:
            report = SimReport.model_validate_json(path.read_text(encoding="utf-8"))
            reads = [channel for channel in report.shim_channels if channel.direction is ShimDirection.READ]
            simulated.append((report, peak_gops(fabric, len(report.cores)), shim_read_gbs(fabric, reads)))
        service = AnalyticService(get_settings(), logging.getLogger("stencil_fabric.analytic"))
        points = service.roofline(platforms, simulated)
    if fmt == "json":
        typer.echo(json.dumps([point.model_dump(mode="json") for point in points], indent=2))
    elif fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["name", "peak_gops", "peak_gbs", "achieved_gops", "attainable_gops", "percent_of_peak"])
        for point in points:
            writer.writerow([point.name, point.peak_perf, point.peak_bw, point.achieved, point.attainable, point.percent_of_peak])
        typer.echo(buffer.getvalue(), nl=False)
    else:
        table = Table(title="Roofline")
        table.add_column("Platform", style="cyan")
        table.add_column("Peak GOp/s", justify="right")
        table.add_column("Peak GB/s", justify="right")
        table.add_column("Achieved GOp/s", justify="right", style="green")
        table.add_column("% of peak", justify="right")
        for point in points:
            table.add_row(
                point.name, f"{point.peak_perf:.1f}", f"{point.peak_bw:.1f}", f"{point.achieved:.1f}", f"{point.percent_of_peak:.1f}"
            )
        console.print(table)


@app.command("compare")
def cmd_compare(
    first: Path = typer.Argument(..., help="Grid file A."),
    second: Path = typer.Argument(..., help="Grid file B."),
    tolerance: float = typer.Option(0.0, "--tolerance", "-t", help="Relative tolerance; 0 means bitwise."),
) -> None:
    """Exit 0 when two grids agree, 1 with the first divergence otherwise."""
    with _guard():
        a, b = read_grid(first), read_grid(second)
        if a.shape != b.shape or a.dtype is not b.dtype:
            raise ValueError(f"grids differ in shape or dtype: {a.shape} {a.dtype.value} vs {b.shape} {b.dtype.value}")
    left, right = a.data.astype(np.float64), b.data.astype(np.float64)
    if tolerance == 0:
        # bit patterns, so -0.0 and NaN payloads count as differences
        mismatch = a.data.view(np.uint32) != b.data.view(np.uint32)
    else:
        mismatch = ~np.isclose(left, right, rtol=tolerance, atol=0.0)
    if not mismatch.any():
        typer.echo("grids are identical" if tolerance == 0 else f"grids agree within {tolerance}")
        return
    diff = np.abs(left - right)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(right != 0, diff / np.abs(right), np.where(diff == 0, 0.0, np.inf))
    d, r, c = (int(index) for index in np.argwhere(mismatch)[0])
    typer.echo(f"first divergence at (r={r}, c={c}, d={d}): {a.data[d, r, c]} vs {b.data[d, r, c]}")
    typer.echo(f"max abs error {float(diff.max())}, max rel error {float(rel.max())}")
    raise typer.Exit(code=EXIT_MISMATCH)


@app.command("plan")
def cmd_plan(
    design: str = typer.Option(..., "--design", "-d"),
    cols: int = typer.Option(256, "--cols", min=5),
    fabric_file: Optional[Path] = typer.Option(None, "--fabric"),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
) -> None:
    """Emit a validated mapping plan as JSON."""
    with _guard():
        fabric = _fabric(fabric_file)
        plan = build_design(design, fabric, cols=cols)
        require_valid(plan, fabric)
        _emit(plan_json(plan), output)


@app.command("fabric")
def cmd_fabric(
    fabric_file: Optional[Path] = typer.Option(None, "--fabric", help="Re-emit this fabric after validation."),
    output: Optional[Path] = typer.Option(None, "--output", "-o"),
) -> None:
    """Emit the fabric description as JSON."""
    with _guard():
        _emit(fabric_json(_fabric(fabric_file)), output)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
