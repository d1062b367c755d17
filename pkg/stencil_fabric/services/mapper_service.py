"""Mapping-plan builders for the hdiff design family and the elementary stencils.

Naming: group ``g`` (one pipeline or one B-block) owns fifos ``g{g}.psi``
(shim input), ``g{g}.l{k}.lap`` / ``g{g}.l{k}.flx`` (stage hand-offs),
``g{g}.l{k}.res`` (lane result to the gather core) and ``g{g}.out``
(shim output). Shim endpoints are named ``shim{index}``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from stencil_fabric.models import (
    BufferSpec,
    CoreRole,
    CoreSlot,
    DesignKind,
    DesignTag,
    DType,
    FabricSpec,
    InterfaceChoice,
    LinkKind,
    LinkSpec,
    MappingPlan,
    ObjectFifoSpec,
    Position,
    ShimAssignment,
    ShimDirection,
    StencilName,
    StencilSpec,
    Violation,
    WorkShare,
)
from stencil_fabric.services.fabric_service import (
    default_versal_fabric,
    validate_link,
    validate_slot,
)
from stencil_fabric.services.stencil_service import BUILTIN_STENCILS

DEFAULT_COLS = 256
ELEMENT_BYTES = 4
INPUT_DEPTH = 5
BBLOCK_INPUT_DEPTH = 8
STAGE_DEPTH = 2
# nine rows per element; one slot keeps the flux-MAC core inside its data memory
FLUX_DEPTH = 1
# 4 flux candidates, 4 field differences and the centre row.
FLUX_ELEMENT_ROWS = 9
LAP_ELEMENT_ROWS = 3

WINDOW_HALO = {
    CoreRole.MONO: 2,
    CoreRole.LAP: 2,
    CoreRole.FLUX: 1,
    CoreRole.FLUX_MAC: 1,
}
IFACE_LINKS = {
    InterfaceChoice.DIRECT: LinkKind.NEIGHBOR_MEMORY,
    InterfaceChoice.STREAM: LinkKind.STREAM,
    InterfaceChoice.CASCADE: LinkKind.CASCADE,
}
STREAM_IN = (LinkKind.STREAM, LinkKind.STREAM_BROADCAST, LinkKind.SHIM_READ)
STREAM_OUT = (LinkKind.STREAM, LinkKind.STREAM_BROADCAST, LinkKind.SHIM_WRITE)
CONSUMER_BUFFERED = (LinkKind.STREAM, LinkKind.STREAM_BROADCAST, LinkKind.SHIM_READ)


class PlacementError(ValueError):
    """The design does not fit on the fabric's core array."""


class MappingError(ValueError):
    """The design cannot be built with the requested parameters."""


class PlanValidationError(ValueError):
    """A plan failed validation; carries the violation list."""

    def __init__(self, violations: Sequence[Violation]) -> None:
        self.violations = list(violations)
        summary = "; ".join(f"{v.code}: {v.subject}" for v in self.violations[:5])
        super().__init__(f"plan has {len(self.violations)} violation(s): {summary}")


def shim_name(index: int) -> str:
    return f"shim{index}"


def is_shim(endpoint: str) -> bool:
    return re.fullmatch(r"shim\d+", endpoint) is not None


def psi_fifo(group: int) -> str:
    return f"g{group}.psi"


def out_fifo(group: int) -> str:
    return f"g{group}.out"


def window_halo(role: CoreRole, spec: StencilSpec | None = None) -> int:
    if role is CoreRole.ELEMENTARY:
        return spec.row_radius if spec else 1
    return WINDOW_HALO.get(role, 0)


# --------------------------------------------------------------------------- plan assembly


@dataclass
class _Draft:
    """Mutable plan under construction."""

    design: DesignTag
    cols: int
    fabric: FabricSpec
    slots: Dict[str, dict] = field(default_factory=dict)
    fifos: List[ObjectFifoSpec] = field(default_factory=list)
    shims: List[ShimAssignment] = field(default_factory=list)
    work: List[WorkShare] = field(default_factory=list)

    @property
    def row_bytes(self) -> int:
        return self.cols * ELEMENT_BYTES

    def add_slot(self, name: str, position: Position, roles: List[CoreRole], **fields) -> str:
        col, row = position
        if not (0 <= col < self.fabric.array_cols and 0 <= row < self.fabric.array_rows):
            raise PlacementError(
                f"{self.design.name}: core {name} at {position} is outside the "
                f"{self.fabric.array_cols}x{self.fabric.array_rows} array"
            )
        self.slots[name] = dict(name=name, position=position, roles=roles, **fields)
        return name

    def add_fifo(self, **fields) -> ObjectFifoSpec:
        fifo = ObjectFifoSpec(row_bytes=self.row_bytes, **fields)
        self.fifos.append(fifo)
        return fifo

    def add_input(self, group: int, shim: int, channel: int, consumers: List[str], depth: int, double: bool, window: int) -> None:
        kind = LinkKind.SHIM_READ if len(consumers) == 1 else LinkKind.STREAM_BROADCAST
        fifo = self.add_fifo(
            name=psi_fifo(group),
            producer=shim_name(shim),
            consumers=consumers,
            depth=depth,
            double_buffered=double,
            acquire_consume=window,
            link=kind,
        )
        self.shims.append(ShimAssignment(shim=shim, direction=ShimDirection.READ, channel=channel, fifo=fifo.name))

    def add_output(self, group: int, shim: int, channel: int, producer: str) -> None:
        fifo = self.add_fifo(
            name=out_fifo(group),
            producer=producer,
            consumers=[shim_name(shim)],
            depth=STAGE_DEPTH,
            link=LinkKind.SHIM_WRITE,
        )
        self.shims.append(ShimAssignment(shim=shim, direction=ShimDirection.WRITE, channel=channel, fifo=fifo.name))

    def finish(self) -> MappingPlan:
        buffers: Dict[str, List[BufferSpec]] = {name: [] for name in self.slots}
        inbound: Dict[str, List[LinkKind]] = {name: [] for name in self.slots}
        outbound: Dict[str, List[LinkKind]] = {name: [] for name in self.slots}
        for fifo in self.fifos:
            size = fifo.element_bytes * fifo.depth
            if fifo.link in CONSUMER_BUFFERED:
                owners = fifo.consumers
            elif fifo.link is LinkKind.CASCADE:
                owners = []
            else:
                owners = [fifo.producer]
            for owner in owners:
                if owner in buffers:
                    buffers[owner].append(BufferSpec(name=fifo.name, bytes=size, double_buffered=fifo.double_buffered))
            if fifo.link is None:
                continue
            if fifo.producer in outbound:
                outbound[fifo.producer].append(fifo.link)
            for consumer in fifo.consumers:
                if consumer in inbound:
                    inbound[consumer].append(fifo.link)

        slots = []
        for name, fields in self.slots.items():
            streams_in = [kind for kind in inbound[name] if kind in STREAM_IN]
            if CoreRole.GATHER in fields["roles"] and LinkKind.STREAM in streams_in:
                # lanes that are not neighbours arrive on one merged stream
                streams_in = [kind for kind in streams_in if kind is not LinkKind.STREAM] + [LinkKind.STREAM]
            streams_out = [kind for kind in outbound[name] if kind in STREAM_OUT]
            slots.append(
                CoreSlot(buffers=buffers[name], dma_uses=max(len(streams_in), len(streams_out)), **fields)
            )

        links = [
            LinkSpec(name=fifo.name, kind=fifo.link, src=fifo.producer, dsts=list(fifo.consumers), fifo=fifo.name)
            for fifo in self.fifos
            if fifo.link is not None
        ]
        return MappingPlan(
            design=self.design,
            cols=self.cols,
            slots=slots,
            fifos=self.fifos,
            links=links,
            shim_assignments=self.shims,
            work_division=self.work,
        )


def _check_cols(cols: int) -> None:
    if cols < 5:
        raise MappingError(f"plans need at least 5 columns, got {cols}")


def _resolve_fabric(fabric: FabricSpec | None) -> FabricSpec:
    return fabric or default_versal_fabric()


def _shim_channel(fabric: FabricSpec, index: int) -> Tuple[int, int]:
    """Shim and channel serving the ``index``-th independent stream (two per shim)."""
    return index // 2, (index % 2) % fabric.shim_channels_per_direction


def _lane(
    draft: _Draft,
    group: int,
    lane: int,
    origin: Position,
    roles: List[List[CoreRole]],
    iface: InterfaceChoice,
) -> List[str]:
    """Place one pipeline lane left to right and wire its stage hand-offs."""
    names = []
    kind = IFACE_LINKS[iface]
    for stage, stage_roles in enumerate(roles):
        tag = stage_roles[0].value
        name = draft.add_slot(
            f"g{group}.l{lane}.{tag}",
            (origin[0] + stage, origin[1]),
            stage_roles,
            group=group,
            lane=lane,
            stage=stage,
            srs_on_receive=stage > 0 and kind is LinkKind.CASCADE,
        )
        names.append(name)
    for stage in range(len(names) - 1):
        producer_role = roles[stage][0]
        rows = LAP_ELEMENT_ROWS if producer_role is CoreRole.LAP else FLUX_ELEMENT_ROWS
        suffix = "lap" if producer_role is CoreRole.LAP else "flx"
        draft.add_fifo(
            name=f"g{group}.l{lane}.{suffix}",
            producer=names[stage],
            consumers=[names[stage + 1]],
            element_rows=rows,
            depth=STAGE_DEPTH if producer_role is CoreRole.LAP else FLUX_DEPTH,
            link=kind,
        )
    return names


def _psi_readers(names: List[str], roles: List[List[CoreRole]]) -> List[str]:
    return [name for name, stage_roles in zip(names, roles) if stage_roles[0] in WINDOW_HALO]


# --------------------------------------------------------------------------- builders


def build_single_plan(dtype: DType = DType.I32, fabric: FabricSpec | None = None, cols: int = DEFAULT_COLS) -> MappingPlan:
    """One core computing the whole operator row by row."""
    fabric = _resolve_fabric(fabric)
    _check_cols(cols)
    draft = _Draft(DesignTag(kind=DesignKind.SINGLE, dtype=dtype), cols, fabric)
    mono = draft.add_slot("g0.l0.mono", (0, 0), [CoreRole.MONO])
    draft.add_input(0, 0, 0, [mono], INPUT_DEPTH, True, INPUT_DEPTH)
    draft.add_output(0, 0, 0, mono)
    draft.work.append(WorkShare(group=0, lane=0))
    return draft.finish()


def build_dual_plan(
    iface: InterfaceChoice = InterfaceChoice.DIRECT,
    fabric: FabricSpec | None = None,
    cols: int = DEFAULT_COLS,
    dtype: DType = DType.I32,
) -> MappingPlan:
    """Laplacian core feeding a flux core over ``iface``; both receive the input broadcast."""
    return _pipeline_plan(DesignKind.DUAL, [[CoreRole.LAP], [CoreRole.FLUX]], iface, fabric, cols, dtype)


def build_tri_plan(
    fabric: FabricSpec | None = None,
    cols: int = DEFAULT_COLS,
    dtype: DType = DType.I32,
    iface: InterfaceChoice = InterfaceChoice.DIRECT,
) -> MappingPlan:
    """Laplacian, flux-MAC and flux-select stages in a row of three cores."""
    roles = [[CoreRole.LAP], [CoreRole.FLUX_MAC], [CoreRole.FLUX_NONMAC]]
    return _pipeline_plan(DesignKind.TRI, roles, iface, fabric, cols, dtype)


def _pipeline_plan(kind, roles, iface, fabric, cols, dtype) -> MappingPlan:
    fabric = _resolve_fabric(fabric)
    _check_cols(cols)
    draft = _Draft(DesignTag(kind=kind, dtype=dtype, iface=iface), cols, fabric)
    names = _lane(draft, 0, 0, (0, 0), roles, iface)
    draft.add_input(0, 0, 0, _psi_readers(names, roles), INPUT_DEPTH, True, INPUT_DEPTH)
    draft.add_output(0, 0, 0, names[-1])
    draft.work.append(WorkShare(group=0, lane=0))
    return draft.finish()


def _bblock_group(
    draft: _Draft,
    group: int,
    lanes: int,
    plane_modulus: int,
    blocks_per_column: int,
) -> None:
    fabric = draft.fabric
    if lanes > fabric.array_rows:
        raise PlacementError(f"{lanes} lanes do not fit in {fabric.array_rows} array rows")
    col0 = 3 * (group // blocks_per_column)
    row0 = (group % blocks_per_column) * lanes
    if col0 + 2 >= fabric.array_cols:
        raise PlacementError(f"B-block {group} needs column {col0 + 2}, array has {fabric.array_cols}")
    shim, channel = _shim_channel(fabric, group)
    gather_lane = lanes // 2
    readers: List[str] = []
    lane_tails: List[str] = []
    for lane in range(lanes):
        roles = [[CoreRole.LAP], [CoreRole.FLUX_MAC], [CoreRole.FLUX_NONMAC]]
        if lane == gather_lane:
            roles[-1] = [CoreRole.FLUX_NONMAC, CoreRole.GATHER]
        names = _lane(draft, group, lane, (col0, row0 + lane), roles, InterfaceChoice.DIRECT)
        readers.extend(_psi_readers(names, roles))
        lane_tails.append(names[-1])
        draft.work.append(
            WorkShare(
                group=group,
                lane=lane,
                plane_modulus=plane_modulus,
                plane_residue=group % plane_modulus,
                row_modulus=lanes,
                row_residue=lane,
            )
        )
    gather = lane_tails[gather_lane]
    for lane, tail in enumerate(lane_tails):
        if lane == gather_lane:
            link = None
        elif abs(lane - gather_lane) == 1:
            link = LinkKind.NEIGHBOR_MEMORY
        else:
            link = LinkKind.STREAM
        draft.add_fifo(
            name=f"g{group}.l{lane}.res",
            producer=tail,
            consumers=[gather],
            depth=STAGE_DEPTH,
            link=link,
        )
    draft.add_input(group, shim, channel, readers, BBLOCK_INPUT_DEPTH, True, INPUT_DEPTH)
    draft.add_output(group, shim, channel, gather)


def build_bblock_plan(lanes: int = 4, fabric: FabricSpec | None = None, cols: int = DEFAULT_COLS) -> MappingPlan:
    """``lanes`` tri-core lanes sharing one broadcast input and one gather core."""
    if lanes < 1:
        raise MappingError("a B-block needs at least one lane")
    fabric = _resolve_fabric(fabric)
    _check_cols(cols)
    draft = _Draft(DesignTag(kind=DesignKind.BBLOCK, lanes=lanes), cols, fabric)
    _bblock_group(draft, 0, lanes, 1, 1)
    return draft.finish()


def scale_out_plan(
    n_bblocks: int, fabric: FabricSpec | None = None, cols: int = DEFAULT_COLS, lanes: int = 4
) -> MappingPlan:
    """``n_bblocks`` B-blocks, two per shim; block j takes planes d = j (mod n)."""
    fabric = _resolve_fabric(fabric)
    _check_cols(cols)
    if n_bblocks < 1:
        raise MappingError("scale-out needs at least one B-block")
    if n_bblocks > 2 * fabric.shim_count:
        raise MappingError(
            f"insufficient shim channels: {n_bblocks} B-blocks need {math.ceil(n_bblocks / 2)} shims, "
            f"fabric has {fabric.shim_count}"
        )
    if lanes > fabric.array_rows:
        raise PlacementError(f"{lanes} lanes do not fit in {fabric.array_rows} array rows")
    draft = _Draft(DesignTag(kind=DesignKind.SCALE_OUT, n_bblocks=n_bblocks, lanes=lanes), cols, fabric)
    blocks_per_column = max(1, fabric.array_rows // lanes)
    for group in range(n_bblocks):
        _bblock_group(draft, group, lanes, n_bblocks, blocks_per_column)
    return draft.finish()


def build_elementary_plan(
    spec: StencilSpec,
    n_cores: int,
    fabric: FabricSpec | None = None,
    cols: int = DEFAULT_COLS,
    dtype: DType = DType.I32,
) -> MappingPlan:
    """Independent single-core pipelines, each on its own shim read channel."""
    fabric = _resolve_fabric(fabric)
    _check_cols(cols)
    channels = fabric.shim_count * fabric.shim_channels_per_direction
    if n_cores < 1 or n_cores > channels:
        raise MappingError(f"insufficient shim channels: {n_cores} cores, {channels} read channels")
    if n_cores > fabric.core_count:
        raise PlacementError(f"{n_cores} cores exceed the {fabric.core_count}-core array")
    tag = DesignTag(kind=DesignKind.ELEMENTARY, dtype=dtype, n_cores=n_cores, stencil=spec.name)
    draft = _Draft(tag, cols, fabric)
    one_d = spec.dims == 1
    for core in range(n_cores):
        shim = core // fabric.shim_channels_per_direction
        channel = core % fabric.shim_channels_per_direction
        name = draft.add_slot(
            f"g{core}.l0.elem",
            (core // fabric.array_rows, core % fabric.array_rows),
            [CoreRole.ELEMENTARY],
            group=core,
        )
        draft.add_input(core, shim, channel, [name], spec.row_extent, True, spec.row_extent)
        draft.add_output(core, shim, channel, name)
        draft.work.append(
            WorkShare(
                group=core,
                lane=0,
                plane_modulus=1 if one_d else n_cores,
                plane_residue=0 if one_d else core,
                row_modulus=n_cores if one_d else 1,
                row_residue=core if one_d else 0,
            )
        )
    return draft.finish()


# --------------------------------------------------------------------------- validation


def _work_violations(plan: MappingPlan) -> List[Violation]:
    shares = plan.work_division
    if not shares:
        return [Violation(code="work gap", subject=plan.name, message="plan assigns no work")]
    plane_period = math.lcm(*(share.plane_modulus for share in shares))
    row_period = math.lcm(*(share.row_modulus for share in shares))
    violations: List[Violation] = []
    for d in range(plane_period):
        for r in range(row_period):
            owners = [share for share in shares if share.owns(r, d)]
            if len(owners) > 1:
                lanes = ", ".join(f"g{o.group}.l{o.lane}" for o in owners)
                violations.append(
                    Violation(code="work overlap", subject=plan.name, message=f"row {r} plane {d}: {lanes}")
                )
            elif not owners:
                violations.append(
                    Violation(code="work gap", subject=plan.name, message=f"row {r} plane {d} has no owner")
                )
    return violations


def validate_plan(plan: MappingPlan, fabric: FabricSpec | None = None) -> List[Violation]:
    """Slot, link, fifo, shim and work-partition checks; an empty list means executable."""
    fabric = _resolve_fabric(fabric)
    violations: List[Violation] = []
    positions: Dict[str, Position] = {}
    seen: Dict[Position, str] = {}
    for slot in plan.slots:
        violations.extend(validate_slot(fabric, slot))
        if slot.name in positions:
            violations.append(Violation(code="duplicate slot", subject=slot.name, message="name used twice"))
        if slot.position in seen:
            violations.append(
                Violation(code="position clash", subject=slot.name, message=f"shares {slot.position} with {seen[slot.position]}")
            )
        positions[slot.name] = slot.position
        seen.setdefault(slot.position, slot.name)

    def endpoint_ok(endpoint: str) -> bool:
        if is_shim(endpoint):
            return int(endpoint[4:]) < fabric.shim_count
        return endpoint in positions

    fifo_names = set()
    for fifo in plan.fifos:
        fifo_names.add(fifo.name)
        for endpoint in [fifo.producer, *fifo.consumers]:
            if not endpoint_ok(endpoint):
                violations.append(
                    Violation(code="dangling endpoint", subject=fifo.name, message=f"unknown endpoint {endpoint}")
                )
        if max(fifo.acquire_consume, fifo.acquire_produce) > fifo.depth:
            violations.append(
                Violation(
                    code="fifo depth",
                    subject=fifo.name,
                    message=f"acquire {fifo.acquire_consume}/{fifo.acquire_produce} exceeds depth {fifo.depth}",
                )
            )
        if len(fifo.consumers) > 1 and fifo.link is not LinkKind.STREAM_BROADCAST:
            violations.append(
                Violation(code="broadcast link", subject=fifo.name, message="several consumers need a broadcast stream")
            )
        if fifo.link is None and fifo.consumers != [fifo.producer]:
            violations.append(
                Violation(code="local fifo", subject=fifo.name, message="a fifo without a link must stay on one core")
            )

    for link in plan.links:
        if link.fifo not in fifo_names:
            violations.append(Violation(code="dangling endpoint", subject=link.name, message=f"no fifo {link.fifo}"))
        src = positions.get(link.src, link.src)
        dsts = [positions.get(dst, dst) for dst in link.dsts]
        violations.extend(validate_link(fabric, link.kind, src, dsts, subject=link.name))

    for assignment in plan.shim_assignments:
        if assignment.shim >= fabric.shim_count or assignment.channel >= fabric.shim_channels_per_direction:
            violations.append(
                Violation(
                    code="shim overcommit",
                    subject=assignment.fifo,
                    message=(
                        f"shim {assignment.shim} channel {assignment.channel} beyond "
                        f"{fabric.shim_count} shims x {fabric.shim_channels_per_direction} channels"
                    ),
                )
            )
        if assignment.fifo not in fifo_names:
            violations.append(Violation(code="dangling endpoint", subject=assignment.fifo, message="unknown fifo"))

    violations.extend(_work_violations(plan))
    return violations


def require_valid(plan: MappingPlan, fabric: FabricSpec | None = None) -> None:
    violations = validate_plan(plan, fabric)
    if violations:
        raise PlanValidationError(violations)


# --------------------------------------------------------------------------- design names and plan files

_DESIGN_RE = re.compile(r"^(single|dual|tri)_(i32|f32)(?:_(direct|stream|cascade))?$")


def parse_design(name: str) -> DesignTag:
    """Parse a design selector such as ``tri_i32_direct``, ``bblock:4`` or ``elem:jac2d3pt:32``."""
    text = name.strip().lower()
    match = _DESIGN_RE.match(text)
    try:
        if match:
            kind, dtype, iface = match.groups()
            if kind == "single":
                if iface:
                    raise MappingError(f"single-core designs take no interface: {name}")
                return DesignTag(kind=DesignKind.SINGLE, dtype=DType(dtype))
            return DesignTag(
                kind=DesignKind(kind), dtype=DType(dtype), iface=InterfaceChoice(iface or "direct")
            )
        parts = text.split(":")
        if parts[0] == "bblock" and len(parts) <= 2:
            return DesignTag(kind=DesignKind.BBLOCK, lanes=int(parts[1]) if len(parts) == 2 else 4)
        if parts[0] == "scaleout" and len(parts) == 2:
            return DesignTag(kind=DesignKind.SCALE_OUT, n_bblocks=int(parts[1]), lanes=4)
        if parts[0] == "elem" and len(parts) in (3, 4):
            dtype = DType(parts[3]) if len(parts) == 4 else DType.I32
            return DesignTag(
                kind=DesignKind.ELEMENTARY, stencil=StencilName(parts[1]), n_cores=int(parts[2]), dtype=dtype
            )
    except (ValueError, ValidationError) as exc:
        if isinstance(exc, MappingError):
            raise
        raise MappingError(f"bad design selector '{name}': {exc}") from exc
    raise MappingError(f"unknown design '{name}'")


def build_design(
    tag: DesignTag | str,
    fabric: FabricSpec | None = None,
    cols: int = DEFAULT_COLS,
    stencils: Optional[Dict[StencilName, StencilSpec]] = None,
) -> MappingPlan:
    if isinstance(tag, str):
        tag = parse_design(tag)
    if tag.kind is DesignKind.SINGLE:
        return build_single_plan(tag.dtype, fabric, cols)
    if tag.kind is DesignKind.DUAL:
        return build_dual_plan(tag.iface or InterfaceChoice.DIRECT, fabric, cols, tag.dtype)
    if tag.kind is DesignKind.TRI:
        return build_tri_plan(fabric, cols, tag.dtype, tag.iface or InterfaceChoice.DIRECT)
    if tag.kind is DesignKind.BBLOCK:
        return build_bblock_plan(tag.lanes or 4, fabric, cols)
    if tag.kind is DesignKind.SCALE_OUT:
        return scale_out_plan(tag.n_bblocks or 1, fabric, cols, tag.lanes or 4)
    table = stencils or BUILTIN_STENCILS
    return build_elementary_plan(table[tag.stencil], tag.n_cores or 1, fabric, cols, tag.dtype)


def plan_json(plan: MappingPlan) -> str:
    return json.dumps(plan.model_dump(mode="json"), indent=2) + "\n"


def save_plan(plan: MappingPlan, path: Path | str) -> None:
    Path(path).write_text(plan_json(plan), encoding="utf-8")


def load_plan(path: Path | str) -> MappingPlan:
    try:
        return MappingPlan.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MappingError(f"cannot read plan file {path}: {exc}") from exc
    except ValidationError as exc:
        raise MappingError(f"invalid plan file {path}: {exc}") from exc
