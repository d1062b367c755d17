"""Device description and structural checks for anything placed on it."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, List, Sequence

from pydantic import ValidationError

from stencil_fabric.models import CoreSlot, FabricSpec, LinkKind, Position, Violation

SHIM = "shim"
ADJACENT_KINDS = (LinkKind.NEIGHBOR_MEMORY, LinkKind.CASCADE)


class FabricConfigError(ValueError):
    """Fabric file is missing or does not describe a valid device."""


def default_versal_fabric() -> FabricSpec:
    """400-core array, 32 KiB data memory per core, 16 shims with two 256-bit channels each."""
    return FabricSpec()


def load_fabric(path: Path | str) -> FabricSpec:
    try:
        return FabricSpec.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise FabricConfigError(f"cannot read fabric file {path}: {exc}") from exc
    except ValidationError as exc:
        raise FabricConfigError(f"invalid fabric file {path}: {exc}") from exc


def save_fabric(fabric: FabricSpec, path: Path | str) -> None:
    Path(path).write_text(fabric_json(fabric), encoding="utf-8")


def fabric_json(fabric: FabricSpec) -> str:
    return json.dumps(fabric.model_dump(mode="json"), indent=2) + "\n"


def on_grid(fabric: FabricSpec, position: Position) -> bool:
    col, row = position
    return 0 <= col < fabric.array_cols and 0 <= row < fabric.array_rows


def validate_slot(fabric: FabricSpec, slot: CoreSlot) -> List[Violation]:
    """Every constraint the slot breaks; an empty list means it is placeable."""
    violations: List[Violation] = []
    if not on_grid(fabric, slot.position):
        violations.append(
            Violation(
                code="off grid",
                subject=slot.name,
                message=f"position {slot.position} outside {fabric.array_cols}x{fabric.array_rows} array",
            )
        )
    if slot.memory_bytes > fabric.data_mem_bytes:
        violations.append(
            Violation(
                code="memory overflow",
                subject=slot.name,
                message=f"{slot.memory_bytes} bytes of buffers exceed {fabric.data_mem_bytes}",
            )
        )
    if slot.dma_uses > fabric.dmas_per_core:
        violations.append(
            Violation(
                code="dma overcommit",
                subject=slot.name,
                message=f"{slot.dma_uses} DMA uses exceed {fabric.dmas_per_core} per core",
            )
        )
    return violations


def adjacent(src: Position, dst: Position) -> bool:
    return abs(src[0] - dst[0]) + abs(src[1] - dst[1]) == 1


def validate_link(
    fabric: FabricSpec,
    kind: LinkKind,
    src: Position | str,
    dsts: Sequence[Position | str],
    subject: str = "link",
) -> List[Violation]:
    """Neighbour-memory and cascade links need 4-adjacent cores; streams go anywhere."""
    violations: List[Violation] = []
    if not dsts:
        violations.append(Violation(code="no consumer", subject=subject, message="link has no destination"))
    if kind in ADJACENT_KINDS:
        if len(dsts) > 1:
            violations.append(
                Violation(code="fan-out", subject=subject, message=f"{kind.value} links are point-to-point")
            )
        for dst in dsts:
            if isinstance(src, str) or isinstance(dst, str) or not adjacent(src, dst):
                violations.append(
                    Violation(code="not adjacent", subject=subject, message=f"{kind.value} {src} -> {dst}")
                )
    elif kind is LinkKind.STREAM and len(dsts) > 1:
        violations.append(
            Violation(code="fan-out", subject=subject, message="use a broadcast stream for several consumers")
        )
    for endpoint in [src, *dsts]:
        if not isinstance(endpoint, str) and not on_grid(fabric, endpoint):
            violations.append(Violation(code="off grid", subject=subject, message=f"endpoint {endpoint}"))
    return violations


def link_bandwidth_bits(fabric: FabricSpec, kind: LinkKind) -> int:
    """Bits per cycle of one link of ``kind``."""
    return {
        LinkKind.NEIGHBOR_MEMORY: fabric.neighbor_mem_bits,
        LinkKind.CASCADE: fabric.cascade_bits,
        LinkKind.STREAM: fabric.stream_bits,
        LinkKind.STREAM_BROADCAST: fabric.stream_bits,
        LinkKind.SHIM_READ: fabric.shim_channel_bits,
        LinkKind.SHIM_WRITE: fabric.shim_channel_bits,
    }[kind]


def shim_channel_count(fabric: FabricSpec) -> int:
    """Read (or write) channels across all shims."""
    return fabric.shim_count * fabric.shim_channels_per_direction


def peak_gops(fabric: FabricSpec, cores: int | None = None) -> float:
    """MAC peak of ``cores`` cores (the whole array by default), two ops per MAC."""
    cores = fabric.core_count if cores is None else cores
    return cores * fabric.datapath.macs_per_cycle * 2 * fabric.clock_ghz


def shim_read_gbs(fabric: FabricSpec, channels: Iterable[int] | None = None) -> float:
    count = shim_channel_count(fabric) if channels is None else len(list(channels))
    return count * fabric.shim_channel_bits / 8 * fabric.clock_ghz
