"""Discrete-event execution of a mapping plan against a real grid.

Every core, link and shim channel is a simpy resource; every object FIFO is
an :class:`~stencil_fabric.services.object_fifo.ObjectFifo`. Cores execute the
row kernels of :mod:`core_kernels`, so the simulated output can be compared
bit for bit with the golden kernels while the event clock yields cycle
counts.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import simpy

from stencil_fabric.config import Settings
from stencil_fabric.models import (
    CoreRole,
    CoreStats,
    DesignKind,
    DType,
    FabricSpec,
    Grid3,
    HdiffParams,
    LinkKind,
    LinkStats,
    MappingPlan,
    ObjectFifoSpec,
    ShimChannelStats,
    ShimDirection,
    SimReport,
    StencilSpec,
)
from stencil_fabric.services import core_kernels as kernels
from stencil_fabric.services.fabric_service import default_versal_fabric
from stencil_fabric.services.mapper_service import STREAM_IN, is_shim, require_valid, window_halo
from stencil_fabric.services.object_fifo import ObjectFifo
from stencil_fabric.services.stencil_service import (
    HALO,
    apply_elementary,
    check_elementary_inputs,
    check_hdiff_inputs,
    get_stencil,
    hdiff_reference,
    op_count,
)
from stencil_fabric.utils.helpers import grid_checksum

KernelParams = Union[HdiffParams, StencilSpec, None]
RowKey = Tuple[int, int]
F32_RTOL = 1e-5
CSV_COLUMNS = ["design", "kind", "name", "bytes", "busy_cycles", "utilization", "total_cycles"]


class SimulationParameterError(ValueError):
    """Grid or kernel parameters do not fit the plan."""


class DeadlockError(RuntimeError):
    """The event queue drained while processes still wait on FIFOs."""

    def __init__(self, blocked: Dict[str, list]) -> None:
        self.blocked = blocked
        detail = "; ".join(
            f"{name}: " + ", ".join(f"{actor} {side} {count} (held {held})" for actor, side, count, held in waits)
            for name, waits in sorted(blocked.items())
        )
        super().__init__(f"deadlock, blocked FIFOs: {detail or 'none'}")


@dataclass
class LinkChannel:
    """A link or shim channel: one transfer at a time, each busy for ``cycles``."""

    resource: simpy.Resource
    cycles: int
    nbytes: int = 0
    busy: int = 0


@dataclass
class _SweepResult:
    output: np.ndarray
    total_cycles: int
    core_busy: Dict[str, int]
    link_bytes: Dict[str, int]
    link_busy: Dict[str, int]
    shim_bytes: Dict[Tuple[int, ShimDirection, int], int]
    shim_busy: Dict[Tuple[int, ShimDirection, int], int]
    write_times: List[int]


class WindowReader:
    """One consumer's sliding window over a row-granular FIFO."""

    def __init__(self, fifo: ObjectFifo, consumer: str) -> None:
        self.fifo = fifo
        self.consumer = consumer

    @property
    def cursor(self) -> int:
        return self.fifo.cursor[self.consumer]

    @property
    def held(self) -> int:
        return self.fifo.held[self.consumer]

    def release_below(self, lo: int) -> None:
        count = min(self.held, lo - self.cursor)
        if count > 0:
            self.fifo.release_consume(self.consumer, count)

    def advance(self, lo: int) -> Iterator[simpy.Event]:
        """Drop everything before ``lo``, passing over rows this consumer never uses."""
        while self.cursor < lo:
            self.release_below(lo)
            if self.cursor < lo:
                yield self.fifo.acquire_consume(self.consumer, 1)
                self.fifo.release_consume(self.consumer, 1)

    def take(self, lo: int, hi: int) -> Iterator[simpy.Event]:
        yield from self.advance(lo)
        missing = hi + 1 - (self.cursor + self.held)
        if missing > 0:
            yield self.fifo.acquire_consume(self.consumer, missing)
        return self.fifo.window(self.consumer)[: hi - lo + 1]


def _deliver(env: simpy.Environment, fifo: ObjectFifo, payload, latency: int):
    yield env.timeout(latency)
    fifo.release_produce([payload])


def broadcast_transfer(
    env: simpy.Environment, channel: LinkChannel, fifo: ObjectFifo, payload, latency: int = 0
) -> Iterator[simpy.Event]:
    """Move one element over ``channel`` to every consumer of ``fifo``.

    The channel is busy once per element whatever the fan-out; transfers
    sharing a channel queue in request order. Returns the delivery process,
    which fires when the element lands in the consumers' buffers.
    """
    with channel.resource.request() as request:
        yield request
        yield env.timeout(channel.cycles)
    channel.busy += channel.cycles
    channel.nbytes += fifo.spec.element_bytes
    return env.process(_deliver(env, fifo, payload, latency))


def gather_and_order(
    arrivals: Iterable[Tuple[RowKey, np.ndarray]], expected: Sequence[RowKey]
) -> List[Tuple[RowKey, np.ndarray]]:
    """Reorder lane results into plane row order, whatever order they arrived in."""
    pending = dict(arrivals)
    missing = [key for key in expected if key not in pending]
    if missing:
        raise DeadlockError({"gather": [("gather", "consume", 1, {"missing rows": len(missing)})]})
    return [(key, pending[key]) for key in expected]


# --------------------------------------------------------------------------- one sweep


class _SweepRun:
    def __init__(self, plan: MappingPlan, fabric: FabricSpec, grid: Grid3, kernel: KernelParams) -> None:
        self.plan = plan
        self.fabric = fabric
        self.grid = grid
        self.kernel = kernel
        self.dtype = grid.dtype
        self.env = simpy.Environment()
        self.output = grid.data.copy()
        self.fifos = {spec.name: ObjectFifo(self.env, spec) for spec in plan.fifos}
        self.slots = {slot.name: slot for slot in plan.slots}
        self.cores = {name: simpy.Resource(self.env, capacity=1) for name in self.slots}
        self.core_busy = {name: 0 for name in self.slots}
        self.write_times: List[int] = []
        self.arrivals: Dict[str, List[Tuple[RowKey, np.ndarray]]] = defaultdict(list)
        self.expected_rows: Dict[str, List[RowKey]] = {}
        self.processes: List[simpy.Process] = []

        stencil = kernel if isinstance(kernel, StencilSpec) else None
        self.stencil = stencil
        self.row_radius = stencil.row_radius if stencil else HALO
        self.col_radius = stencil.col_radius if stencil else HALO
        self.costs = {
            name: kernels.core_kernel_cycles(slot.role, grid.cols, self.dtype, fabric, slot.srs_on_receive, stencil)
            for name, slot in self.slots.items()
        }
        self.copy_cycles = kernels.gather_copy_cycles(fabric, grid.cols)
        self.shares = defaultdict(list)
        for share in plan.work_division:
            self.shares[share.group].append(share)
        self._build_channels()

    # ------------------------------------------------------------------ wiring

    def _build_channels(self) -> None:
        self.shim_of: Dict[str, Tuple[int, ShimDirection, int]] = {
            a.fifo: (a.shim, a.direction, a.channel) for a in self.plan.shim_assignments
        }
        shim_resources: Dict[Tuple[int, ShimDirection, int], simpy.Resource] = {}
        self.channels: Dict[str, LinkChannel] = {}
        for spec in self.plan.fifos:
            if spec.link is None:
                continue
            cycles = kernels.transfer_cycles(self.fabric, spec.link, spec.element_bytes)
            if spec.name in self.shim_of:
                key = self.shim_of[spec.name]
                resource = shim_resources.setdefault(key, simpy.Resource(self.env, capacity=1))
            else:
                resource = simpy.Resource(self.env, capacity=1)
            self.channels[spec.name] = LinkChannel(resource, cycles)

    def _group_shares(self, group: int):
        return self.shares[group]

    def _planes(self, group: int) -> List[int]:
        share = self._group_shares(group)[0]
        return [d for d in range(self.grid.depth) if d % share.plane_modulus == share.plane_residue]

    def _out_rows(self) -> range:
        return range(self.row_radius, self.grid.rows - self.row_radius)

    def _lane_rows(self, group: int, lane: int, d: int) -> List[int]:
        shares = [s for s in self._group_shares(group) if s.lane == lane]
        return [r for r in self._out_rows() if any(s.owns(r, d) for s in shares)]

    def _owner(self, group: int, r: int, d: int) -> int:
        for share in self._group_shares(group):
            if share.owns(r, d):
                return share.lane
        raise SimulationParameterError(f"row {r} of plane {d} has no owner in group {group}")

    def _psi_fifo(self, group: int) -> ObjectFifoSpec:
        for spec in self.plan.fifos:
            if is_shim(spec.producer) and self.slots[spec.consumers[0]].group == group:
                return spec
        raise SimulationParameterError(f"group {group} has no input FIFO")

    def _produced(self, slot_name: str) -> List[ObjectFifoSpec]:
        return [spec for spec in self.plan.fifos if spec.producer == slot_name]

    def _stage_out(self, slot_name: str) -> ObjectFifo:
        produced = self._produced(slot_name)
        if self.slots[slot_name].is_gather:
            produced = [spec for spec in produced if spec.link is not LinkKind.SHIM_WRITE]
        return self.fifos[produced[0].name]

    def _upstream(self, slot_name: str) -> Optional[ObjectFifo]:
        slot = self.slots[slot_name]
        for spec in self.plan.fifos:
            producer = self.slots.get(spec.producer)
            if (
                slot_name in spec.consumers
                and producer is not None
                and producer.group == slot.group
                and producer.lane == slot.lane
                and producer.stage == slot.stage - 1
            ):
                return self.fifos[spec.name]
        return None

    # ------------------------------------------------------------------ primitives

    def _compute(self, slot_name: str, cycles: int):
        with self.cores[slot_name].request() as request:
            yield request
            yield self.env.timeout(cycles)
        self.core_busy[slot_name] += cycles

    def _send(self, fifo: ObjectFifo, payload):
        channel = self.channels.get(fifo.name)
        if channel is None:
            fifo.release_produce([payload])
            return
        yield from broadcast_transfer(self.env, channel, fifo, payload, self.fabric.transfer_latency_cycles)

    def _coeff(self, d: int, r: int):
        params = self._hdiff
        if params.coeff_grid is not None:
            return params.coeff_grid.data[d, r, HALO:-HALO]
        return int(params.coeff) if self.dtype is DType.I32 else np.float32(params.coeff)

    @property
    def _hdiff(self) -> HdiffParams:
        return self.kernel if isinstance(self.kernel, HdiffParams) else HdiffParams()

    # ------------------------------------------------------------------ processes

    def _reader(self, group: int, spec: ObjectFifoSpec, rows_of: Dict[int, List[int]]):
        fifo = self.fifos[spec.name]
        for d in self._planes(group):
            for r in rows_of[d]:
                yield fifo.acquire_produce(1)
                yield from self._send(fifo, self.grid.data[d, r])

    def _stage(self, slot_name: str, psi: Optional[ObjectFifoSpec], seq: Dict[RowKey, int], plane_end: Dict[int, int], total: int):
        slot = self.slots[slot_name]
        role = slot.role
        halo = window_halo(role, self.stencil)
        reader = WindowReader(self.fifos[psi.name], slot_name) if psi is not None and slot_name in psi.consumers else None
        upstream = self._upstream(slot_name)
        out = self._stage_out(slot_name)
        cost = self.costs[slot_name].cycles
        hd = self._hdiff

        for d in self._planes(slot.group):
            rows = self._lane_rows(slot.group, slot.lane, d)
            for i, r in enumerate(rows):
                element = None
                if upstream is not None:
                    [element] = yield upstream.acquire_consume(slot_name, 1)
                    if element[:2] != (d, r):
                        raise SimulationParameterError(f"{slot_name}: expected row {(d, r)}, got {element[:2]}")
                window = None
                if reader is not None:
                    window = yield from reader.take(seq[(d, r - halo)], seq[(d, r + halo)])
                yield out.acquire_produce(1)
                yield from self._compute(slot_name, cost)

                if role is CoreRole.MONO:
                    row = kernels.assemble_row(
                        window[2], kernels.mono_row(window, self._coeff(d, r), self.dtype, hd.srs_shift, hd.limiter)
                    )
                    payload = (d, r, row)
                elif role is CoreRole.LAP:
                    payload = (d, r, kernels.lap_rows(window, self.dtype))
                elif role is CoreRole.FLUX:
                    interior = kernels.flux_row(
                        window, element[2], self._coeff(d, r), self.dtype, hd.srs_shift, hd.limiter
                    )
                    payload = (d, r, kernels.assemble_row(window[1], interior))
                elif role is CoreRole.FLUX_MAC:
                    payload = (d, r, kernels.flux_mac_row(window, element[2], self.dtype))
                elif role is CoreRole.FLUX_NONMAC:
                    candidates = element[2]
                    interior = kernels.flux_nonmac_row(
                        candidates, self._coeff(d, r), self.dtype, hd.srs_shift, hd.limiter
                    )
                    payload = (d, r, kernels.assemble_row(candidates.psi, interior))
                else:
                    interior = kernels.elementary_row(self.stencil, window, self.dtype)
                    payload = (d, r, kernels.assemble_row(window[self.row_radius], interior, self.col_radius))

                if upstream is not None:
                    upstream.release_consume(slot_name, 1)
                if reader is not None:
                    nxt = seq[(d, rows[i + 1] - halo)] if i + 1 < len(rows) else plane_end[d]
                    reader.release_below(nxt)
                self.env.process(self._send(out, payload))
        if reader is not None:
            yield from reader.advance(total)

    def _gather(self, slot_name: str):
        slot = self.slots[slot_name]
        out = next(
            self.fifos[spec.name] for spec in self._produced(slot_name) if spec.link is LinkKind.SHIM_WRITE
        )
        lane_fifos = {}
        for spec in self.plan.fifos:
            producer = self.slots.get(spec.producer)
            if slot_name in spec.consumers and producer is not None and producer.role is CoreRole.FLUX_NONMAC:
                lane_fifos[producer.lane] = self.fifos[spec.name]
        for d in self._planes(slot.group):
            for r in self._out_rows():
                lane = self._owner(slot.group, r, d)
                source = lane_fifos[lane]
                [payload] = yield source.acquire_consume(slot_name, 1)
                yield out.acquire_produce(1)
                if lane != slot.lane:
                    yield from self._compute(slot_name, self.copy_cycles)
                source.release_consume(slot_name, 1)
                self.env.process(self._send(out, payload))

    def _writer(self, spec: ObjectFifoSpec, expected: int):
        fifo = self.fifos[spec.name]
        consumer = spec.consumers[0]
        for _ in range(expected):
            [(d, r, row)] = yield fifo.acquire_consume(consumer, 1)
            self.arrivals[spec.name].append(((d, r), row))
            self.write_times.append(int(self.env.now))
            fifo.release_consume(consumer, 1)

    # ------------------------------------------------------------------ driver

    def run(self) -> _SweepResult:
        def spawn(generator) -> None:
            self.processes.append(self.env.process(generator))

        for group in self.plan.groups:
            psi = self._psi_fifo(group)
            halo = max(window_halo(self.slots[c].role, self.stencil) for c in psi.consumers)
            planes = self._planes(group)
            lanes = sorted({self.slots[c].lane for c in psi.consumers})
            rows_of: Dict[int, List[int]] = {}
            for d in planes:
                if halo > 0:
                    rows_of[d] = list(range(self.grid.rows))
                else:
                    owned = {r for lane in lanes for r in self._lane_rows(group, lane, d)}
                    rows_of[d] = sorted(owned)
            seq: Dict[RowKey, int] = {}
            plane_end: Dict[int, int] = {}
            for d in planes:
                for r in rows_of[d]:
                    seq[(d, r)] = len(seq)
                plane_end[d] = len(seq)
            spawn(self._reader(group, psi, rows_of))

            group_slots = [slot for slot in self.plan.slots if slot.group == group]
            for slot in group_slots:
                spawn(self._stage(slot.name, psi, seq, plane_end, len(seq)))
                if slot.is_gather:
                    spawn(self._gather(slot.name))

            expected = [
                (d, r)
                for d in planes
                for r in sorted({r for slot in group_slots for r in self._lane_rows(group, slot.lane, d)})
            ]
            for spec in self.plan.fifos:
                if spec.link is LinkKind.SHIM_WRITE and self.slots[spec.producer].group == group:
                    self.expected_rows[spec.name] = expected
                    spawn(self._writer(spec, len(expected)))

        self.env.run()
        stuck = [process for process in self.processes if process.is_alive]
        if stuck:
            raise DeadlockError({name: fifo.blocked() for name, fifo in self.fifos.items() if fifo.waiters})
        for name, expected in self.expected_rows.items():
            for (d, r), row in gather_and_order(self.arrivals[name], expected):
                self.output[d, r] = row

        shim_bytes: Dict[Tuple[int, ShimDirection, int], int] = defaultdict(int)
        shim_busy: Dict[Tuple[int, ShimDirection, int], int] = defaultdict(int)
        for name, channel in self.channels.items():
            if name in self.shim_of:
                shim_bytes[self.shim_of[name]] += channel.nbytes
                shim_busy[self.shim_of[name]] += channel.busy
        return _SweepResult(
            output=self.output,
            total_cycles=int(self.env.now),
            core_busy=dict(self.core_busy),
            link_bytes={name: channel.nbytes for name, channel in self.channels.items()},
            link_busy={name: channel.busy for name, channel in self.channels.items()},
            shim_bytes=dict(shim_bytes),
            shim_busy=dict(shim_busy),
            write_times=self.write_times,
        )


# --------------------------------------------------------------------------- simulate / sweep


def _check_kernel(plan: MappingPlan, grid: Grid3, kernel: KernelParams) -> KernelParams:
    if grid.cols != plan.cols:
        raise SimulationParameterError(f"plan {plan.name} is built for {plan.cols} columns, grid has {grid.cols}")
    if grid.dtype is not plan.design.dtype:
        raise SimulationParameterError(
            f"plan {plan.name} runs {plan.design.dtype.value}, grid is {grid.dtype.value}"
        )
    if plan.design.kind is DesignKind.ELEMENTARY:
        if not isinstance(kernel, StencilSpec) or kernel.name is not plan.design.stencil:
            raise SimulationParameterError(f"plan {plan.name} needs the {plan.design.stencil.value} stencil")
        check_elementary_inputs(kernel, grid)
        return kernel
    if isinstance(kernel, StencilSpec):
        raise SimulationParameterError(f"plan {plan.name} runs hdiff, not {kernel.name.value}")
    params = kernel or HdiffParams()
    check_hdiff_inputs(grid, params)
    return params


def _golden(grid: Grid3, kernel: KernelParams) -> Grid3:
    if isinstance(kernel, StencilSpec):
        return apply_elementary(kernel, grid)
    params = kernel.model_copy(update={"sweeps": 1})
    return hdiff_reference(grid, params)


def simulate(
    plan: MappingPlan, fabric: FabricSpec | None, grid: Grid3, kernel: KernelParams = None
) -> Tuple[Grid3, SimReport]:
    """Run ``plan`` on ``grid``; returns the output grid and its report."""
    fabric = fabric or default_versal_fabric()
    require_valid(plan, fabric)
    kernel = _check_kernel(plan, grid, kernel)
    sweeps = kernel.sweeps if isinstance(kernel, HdiffParams) else 1

    current = grid
    golden = grid
    results: List[_SweepResult] = []
    for _ in range(sweeps):
        result = _SweepRun(plan, fabric, current, kernel).run()
        results.append(result)
        golden = _golden(golden, kernel)
        current = Grid3.from_array(result.output, grid.dtype)
    return current, _report(plan, fabric, grid, kernel, sweeps, results, current, golden)


def _report(
    plan: MappingPlan,
    fabric: FabricSpec,
    grid: Grid3,
    kernel: KernelParams,
    sweeps: int,
    results: List[_SweepResult],
    output: Grid3,
    golden: Grid3,
) -> SimReport:
    total = sum(result.total_cycles for result in results)
    write_times: List[int] = []
    offset = 0
    for result in results:
        write_times.extend(t + offset for t in result.write_times)
        offset += result.total_cycles

    def summed(attr: str) -> Dict:
        merged: Dict = defaultdict(int)
        for result in results:
            for key, value in getattr(result, attr).items():
                merged[key] += value
        return merged

    core_busy, link_bytes, link_busy = summed("core_busy"), summed("link_bytes"), summed("link_busy")
    shim_bytes, shim_busy = summed("shim_bytes"), summed("shim_busy")

    cores = [
        CoreStats(
            name=slot.name,
            position=slot.position,
            roles=slot.roles,
            busy_cycles=core_busy[slot.name],
            idle_cycles=total - core_busy[slot.name],
            utilization=core_busy[slot.name] / total if total else 0.0,
        )
        for slot in plan.slots
    ]
    links = [
        LinkStats(name=link.name, kind=link.kind, bytes=link_bytes[link.fifo], busy_cycles=link_busy[link.fifo])
        for link in plan.links
    ]
    channels = []
    for shim, direction, channel in sorted(shim_bytes, key=lambda k: (k[0], k[1].value, k[2])):
        key = (shim, direction, channel)
        channels.append(
            ShimChannelStats(
                shim=shim, direction=direction, channel=channel, bytes=shim_bytes[key], busy_cycles=shim_busy[key]
            )
        )
    read_bytes = sum(v for (_, direction, _), v in shim_bytes.items() if direction is ShimDirection.READ)
    write_bytes = sum(v for (_, direction, _), v in shim_bytes.items() if direction is ShimDirection.WRITE)
    consumer_bytes = sum(
        link_bytes[spec.name] * len(spec.consumers) for spec in plan.fifos if spec.link in STREAM_IN
    )

    kernel_name = kernel if isinstance(kernel, StencilSpec) else "hdiff"
    ops = op_count(grid.shape, kernel_name).ops * sweeps
    wallclock_ns = total / fabric.clock_ghz
    if grid.dtype is DType.I32:
        match = bool(np.array_equal(output.data, golden.data))
    else:
        match = bool(np.allclose(output.data, golden.data, rtol=F32_RTOL, atol=0.0))
    error = float(np.max(np.abs(output.data.astype(np.float64) - golden.data.astype(np.float64)), initial=0.0))

    spacing = (write_times[-1] - write_times[0]) / (len(write_times) - 1) if len(write_times) > 1 else 0.0
    return SimReport(
        design=plan.name,
        rows=grid.rows,
        cols=grid.cols,
        depth=grid.depth,
        dtype=grid.dtype,
        sweeps=sweeps,
        total_cycles=total,
        wallclock_ns=wallclock_ns,
        cores=cores,
        links=links,
        shim_channels=channels,
        shim_read_bytes=read_bytes,
        shim_write_bytes=write_bytes,
        consumer_dma_bytes=consumer_bytes,
        ops=ops,
        throughput_gops=ops / wallclock_ns if wallclock_ns else 0.0,
        first_output_cycle=write_times[0] if write_times else 0,
        steady_cycles_per_row=spacing,
        output_checksum=grid_checksum(output),
        functional_match=match,
        max_abs_error=error,
    )


def _simulate_entry(args) -> SimReport:
    plan, fabric, grid, kernel = args
    return simulate(plan, fabric, grid, kernel)[1]


def sweep(
    plans: Sequence[MappingPlan],
    fabric: FabricSpec | None,
    grid: Grid3,
    kernel: KernelParams = None,
    workers: int = 1,
) -> List[SimReport]:
    """Simulate each plan independently; reports keep the input order."""
    jobs = [(plan, fabric, grid, kernel) for plan in plans]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_simulate_entry, jobs))
    return [_simulate_entry(job) for job in jobs]


def predict_cycles_per_row(plan: MappingPlan, fabric: FabricSpec, cols: int, dtype: DType) -> float:
    """Closed-form steady-state cycles per output row of one group.

    Each stage is bounded by the slowest of its kernel and its inbound and
    outbound transfers; lanes share the group's rows and the shared input
    stream bounds the group from below.
    """
    stencil = get_stencil(plan.design.stencil) if plan.design.kind is DesignKind.ELEMENTARY else None
    slots = {slot.name: slot for slot in plan.slots}
    transfer = {
        spec.name: kernels.transfer_cycles(fabric, spec.link, spec.element_bytes) if spec.link else 0
        for spec in plan.fifos
    }
    worst = Fraction(0)
    for group in plan.groups:
        members = [slot for slot in plan.slots if slot.group == group]
        lanes = sorted({slot.lane for slot in members})
        lane_bound = 0
        for slot in members:
            stage = kernels.core_kernel_cycles(slot.role, cols, dtype, fabric, slot.srs_on_receive, stencil).cycles
            if slot.is_gather:
                stage += (len(lanes) - 1) * kernels.gather_copy_cycles(fabric, cols)
            inbound = [transfer[s.name] for s in plan.fifos if slot.name in s.consumers]
            outbound = [transfer[s.name] for s in plan.fifos if s.producer == slot.name]
            lane_bound = max(lane_bound, stage, *inbound, *outbound)
        input_bound = max(
            transfer[s.name] for s in plan.fifos if is_shim(s.producer) and slots[s.consumers[0]].group == group
        )
        worst = max(worst, Fraction(lane_bound, len(lanes)), Fraction(input_bound))
    return float(worst)


# --------------------------------------------------------------------------- report files


def report_json(reports: SimReport | Sequence[SimReport]) -> str:
    if isinstance(reports, SimReport):
        return reports.model_dump_json(indent=2) + "\n"
    return json.dumps([report.model_dump(mode="json") for report in reports], indent=2) + "\n"


def report_csv(reports: SimReport | Sequence[SimReport]) -> str:
    """One row per core, link and shim channel, columns in :data:`CSV_COLUMNS` order."""
    if isinstance(reports, SimReport):
        reports = [reports]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for report in reports:
        for core in report.cores:
            writer.writerow(
                [report.design, "core", core.name, "", core.busy_cycles, f"{core.utilization:.6f}", report.total_cycles]
            )
        for link in report.links:
            writer.writerow([report.design, link.kind.value, link.name, link.bytes, link.busy_cycles, "", report.total_cycles])
        for channel in report.shim_channels:
            name = f"shim{channel.shim}.{channel.direction.value}{channel.channel}"
            writer.writerow([report.design, "shim", name, channel.bytes, channel.busy_cycles, "", report.total_cycles])
    return buffer.getvalue()


class SimulatorService:
    """Runs simulations and sweeps with structured logging."""

    def __init__(self, config: Settings, logger: logging.Logger | None = None) -> None:
        self.config = config
        self._logger = logger or logging.getLogger(__name__)

    def simulate(
        self, plan: MappingPlan, grid: Grid3, kernel: KernelParams = None, fabric: FabricSpec | None = None
    ) -> Tuple[Grid3, SimReport]:
        start = time.perf_counter()
        try:
            output, report = simulate(plan, fabric, grid, kernel)
        except DeadlockError as exc:
            self._logger.error("Simulation deadlocked", extra={"design": plan.name, "blocked": sorted(exc.blocked)})
            raise
        self._logger.info(
            "Simulation finished",
            extra={
                "design": report.design,
                "total_cycles": report.total_cycles,
                "functional_match": report.functional_match,
                "elapsed_ms": round((time.perf_counter() - start) * 1000, 3),
            },
        )
        if not report.functional_match:
            self._logger.warning(
                "Simulated output differs from the golden kernel",
                extra={"design": report.design, "max_abs_error": report.max_abs_error},
            )
        return output, report

    def sweep(
        self,
        plans: Sequence[MappingPlan],
        grid: Grid3,
        kernel: KernelParams = None,
        fabric: FabricSpec | None = None,
    ) -> List[SimReport]:
        workers = max(1, self.config.sweep_workers)
        self._logger.info("Sweep started", extra={"designs": [plan.name for plan in plans], "workers": workers})
        reports = sweep(plans, fabric, grid, kernel, workers)
        for report in reports:
            self._logger.info(
                "Sweep entry finished",
                extra={"design": report.design, "total_cycles": report.total_cycles},
            )
        return reports
