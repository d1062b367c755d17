"""Closed-form compute/memory cycle estimates, balance tags and roofline arithmetic.

Estimators return exact ``Fraction`` values; callers round only when they
report integer cycles.
"""

from __future__ import annotations

import json
import logging
import math
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

from pydantic import ValidationError

from stencil_fabric.config import Settings
from stencil_fabric.models import (
    AnalyticReport,
    Bound,
    DatapathSpec,
    PlatformRow,
    PlatformTable,
    RooflinePoint,
    SimReport,
)

BALANCE_EPSILON = Fraction(1, 10)
LAP_POINTS, LAP_MACS = 5, 5
FLX_MAC_POINTS, FLX_OTHER_POINTS, FLX_OPS = 2, 3, 4
GROUPS = ("lap", "flx", "hdiff")


class AnalyticParameterError(ValueError):
    """Grid extents outside the model's domain."""


class PlatformTableError(ValueError):
    """Platform table file is missing, malformed or empty."""


def interior_points(rows: int, cols: int, depth: int) -> int:
    if rows < 4 or cols < 4 or depth < 1:
        raise AnalyticParameterError(
            f"grid {rows}x{cols}x{depth} is below the 4x4x1 minimum of the cycle model"
        )
    return (rows - 4) * (cols - 4) * depth


def lap_comp_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    """Five Laplacians per point, five MACs each."""
    dp = dp or DatapathSpec()
    n = interior_points(rows, cols, depth)
    return Fraction(LAP_POINTS * n * LAP_MACS, dp.macs_per_cycle)


def flx_comp_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    """Two MAC flux terms plus three pre-adder terms per point, all over the MAC rate."""
    dp = dp or DatapathSpec()
    n = interior_points(rows, cols, depth)
    return Fraction(FLX_MAC_POINTS * n * FLX_OPS + FLX_OTHER_POINTS * (n * FLX_OPS), dp.macs_per_cycle)


def hdiff_comp_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    return lap_comp_cycles(rows, cols, depth, dp) + flx_comp_cycles(rows, cols, depth, dp)


def lap_mem_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    dp = dp or DatapathSpec()
    n = interior_points(rows, cols, depth)
    return Fraction(LAP_POINTS * n * LAP_MACS * dp.elem_bits, dp.load_bits_per_cycle)


def flx_mem_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    dp = dp or DatapathSpec()
    n = interior_points(rows, cols, depth)
    return Fraction(FLX_MAC_POINTS * n * FLX_OPS * dp.elem_bits, dp.load_bits_per_cycle)


def hdiff_mem_cycles(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> Fraction:
    return lap_mem_cycles(rows, cols, depth, dp) + flx_mem_cycles(rows, cols, depth, dp)


def balance_ratio(comp: Fraction, mem: Fraction) -> Fraction | None:
    """comp/mem, or None when there is no memory traffic."""
    return None if mem == 0 else Fraction(comp) / Fraction(mem)


def classify(comp: Fraction, mem: Fraction, epsilon: Fraction = BALANCE_EPSILON) -> Bound:
    if mem == 0:
        return Bound.BALANCED if comp == 0 else Bound.COMPUTE
    ratio = Fraction(comp) / Fraction(mem)
    if ratio > 1 + epsilon:
        return Bound.COMPUTE
    if ratio < 1 - epsilon:
        return Bound.MEMORY
    return Bound.BALANCED


def group_cycles(report: AnalyticReport) -> Dict[str, Tuple[Fraction, Fraction]]:
    return {
        "lap": (report.lap_comp, report.lap_mem),
        "flx": (report.flx_comp, report.flx_mem),
        "hdiff": (report.hdiff_comp, report.hdiff_mem),
    }


def classify_balance(report: AnalyticReport, epsilon: Fraction = BALANCE_EPSILON) -> Dict[str, Bound]:
    """Bound tag per stencil group."""
    return {group: classify(comp, mem, epsilon) for group, (comp, mem) in group_cycles(report).items()}


def analyze(rows: int, cols: int, depth: int, dp: DatapathSpec | None = None) -> AnalyticReport:
    dp = dp or DatapathSpec()
    report = AnalyticReport(
        rows=rows,
        cols=cols,
        depth=depth,
        datapath=dp,
        lap_comp=lap_comp_cycles(rows, cols, depth, dp),
        flx_comp=flx_comp_cycles(rows, cols, depth, dp),
        hdiff_comp=hdiff_comp_cycles(rows, cols, depth, dp),
        lap_mem=lap_mem_cycles(rows, cols, depth, dp),
        flx_mem=flx_mem_cycles(rows, cols, depth, dp),
        hdiff_mem=hdiff_mem_cycles(rows, cols, depth, dp),
    )
    bounds = classify_balance(report)
    ratios = {group: balance_ratio(comp, mem) for group, (comp, mem) in group_cycles(report).items()}
    return report.model_copy(update={"group_bounds": bounds, "bound": bounds["hdiff"], "ratios": ratios})


# --------------------------------------------------------------------------- roofline


def roofline_attainable(peak_perf: float, peak_bw: float, ai: float) -> float:
    """min(peak compute, intensity * bandwidth) in GOp/s."""
    return min(peak_perf, ai * peak_bw)


def ridge_point(peak_perf: float, peak_bw: float) -> float:
    return peak_perf / peak_bw


def percent_of_peak(achieved: float, peak_perf: float) -> float:
    """Share of the compute peak, to one decimal."""
    if peak_perf <= 0:
        raise AnalyticParameterError("peak performance must be positive")
    return round(100.0 * achieved / peak_perf, 1)


def platform_point(row: PlatformRow) -> RooflinePoint:
    peak = row.peak_tflops * 1000.0
    return RooflinePoint(
        name=row.name,
        peak_perf=peak,
        peak_bw=row.peak_bw_gbs,
        achieved=row.reported_gops,
        attainable=peak,
        percent_of_peak=percent_of_peak(row.reported_gops, peak),
        reported_percent=row.reported_roof_pct,
    )


def simulated_point(report: SimReport, peak_perf: float, peak_bw: float) -> RooflinePoint:
    """Roofline placement of a simulation: intensity is ops per shim byte."""
    moved = report.shim_read_bytes + report.shim_write_bytes
    ai = report.ops / moved if moved else math.inf
    return RooflinePoint(
        name=f"simulated {report.design}",
        peak_perf=peak_perf,
        peak_bw=peak_bw,
        arithmetic_intensity=None if math.isinf(ai) else ai,
        achieved=report.throughput_gops,
        attainable=roofline_attainable(peak_perf, peak_bw, ai),
        percent_of_peak=percent_of_peak(report.throughput_gops, peak_perf),
    )


def load_platforms(path: Path | str | None = None) -> PlatformTable:
    """Read a platform table, defaulting to the one shipped with the package."""
    try:
        if path is None:
            text = resources.files("stencil_fabric").joinpath("data/platforms.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return PlatformTable.model_validate(json.loads(text))
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        raise PlatformTableError(f"invalid platform table {path or '<builtin>'}: {exc}") from exc


class AnalyticService:
    """Front door for analytic reports and roofline tables."""

    def __init__(self, config: Settings, logger: logging.Logger | None = None) -> None:
        self.config = config
        self._logger = logger or logging.getLogger(__name__)

    def analyze(self, dims: Tuple[int, int, int], dp: DatapathSpec | None = None) -> AnalyticReport:
        report = analyze(*dims, dp)
        if report.hdiff_comp == 0:
            self._logger.warning("no interior points", extra={"dims": list(dims)})
        self._logger.info(
            "Analytic model evaluated",
            extra={"dims": list(dims), "bound": report.bound.value},
        )
        return report

    def roofline(
        self,
        platforms_file: Path | None = None,
        simulated: Iterable[Tuple[SimReport, float, float]] = (),
    ) -> List[RooflinePoint]:
        table = load_platforms(platforms_file or self.config.platforms_file)
        points = [platform_point(row) for row in table.platforms]
        points.extend(simulated_point(report, peak, bw) for report, peak, bw in simulated)
        self._logger.info("Roofline table built", extra={"rows": len(points)})
        return points
