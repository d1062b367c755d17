import json

import pytest

from stencil_fabric.models import BufferSpec, CoreSlot, CoreRole, LinkKind
from stencil_fabric.services.fabric_service import (
    FabricConfigError,
    adjacent,
    default_versal_fabric,
    link_bandwidth_bits,
    load_fabric,
    peak_gops,
    save_fabric,
    shim_channel_count,
    shim_read_gbs,
    validate_link,
    validate_slot,
)


def slot(position=(0, 0), kib=0, dma=0):
    buffers = [BufferSpec(name="buf", bytes=kib * 1024)] if kib else []
    return CoreSlot(name="core", position=position, roles=[CoreRole.LAP], buffers=buffers, dma_uses=dma)


def codes(violations):
    return sorted(v.code for v in violations)


def test_default_fabric_figures(fabric):
    assert fabric.core_count == 400
    assert fabric.data_mem_bytes == 32 * 1024
    assert shim_channel_count(fabric) == 32
    assert peak_gops(fabric) == pytest.approx(6400.0)
    assert peak_gops(fabric, cores=3) == pytest.approx(48.0)
    assert shim_read_gbs(fabric, channels=[0]) == pytest.approx(32.0)
    assert shim_read_gbs(fabric) == pytest.approx(1024.0)


def test_link_bandwidths(fabric):
    assert link_bandwidth_bits(fabric, LinkKind.NEIGHBOR_MEMORY) == 256
    assert link_bandwidth_bits(fabric, LinkKind.CASCADE) == 384
    assert link_bandwidth_bits(fabric, LinkKind.STREAM_BROADCAST) == 32
    assert link_bandwidth_bits(fabric, LinkKind.SHIM_READ) == 256


def test_valid_slot(fabric):
    assert validate_slot(fabric, slot((49, 7), kib=32, dma=2)) == []


def test_slot_violations(fabric):
    assert codes(validate_slot(fabric, slot((50, 0)))) == ["off grid"]
    assert codes(validate_slot(fabric, slot(kib=33))) == ["memory overflow"]
    assert codes(validate_slot(fabric, slot(dma=3))) == ["dma overcommit"]
    assert codes(validate_slot(fabric, slot((-1, 8), kib=40, dma=5))) == [
        "dma overcommit",
        "memory overflow",
        "off grid",
    ]


def test_double_buffer_counts_twice(fabric):
    core = CoreSlot(
        name="core",
        position=(0, 0),
        roles=[CoreRole.MONO],
        buffers=[BufferSpec(name="psi", bytes=20 * 1024, double_buffered=True)],
    )
    assert core.memory_bytes == 40 * 1024
    assert codes(validate_slot(fabric, core)) == ["memory overflow"]


def test_adjacency():
    assert adjacent((3, 4), (4, 4))
    assert adjacent((3, 4), (3, 3))
    assert not adjacent((3, 4), (4, 5))
    assert not adjacent((3, 4), (3, 4))


def test_neighbour_links_need_adjacent_cores(fabric):
    assert validate_link(fabric, LinkKind.NEIGHBOR_MEMORY, (0, 0), [(1, 0)]) == []
    assert codes(validate_link(fabric, LinkKind.CASCADE, (0, 0), [(2, 0)])) == ["not adjacent"]
    assert codes(validate_link(fabric, LinkKind.NEIGHBOR_MEMORY, (0, 0), [(1, 0), (0, 1)])) == ["fan-out"]


def test_streams_reach_anywhere(fabric):
    assert validate_link(fabric, LinkKind.STREAM, (0, 0), [(40, 7)]) == []
    assert validate_link(fabric, LinkKind.STREAM_BROADCAST, "shim0", [(0, 0), (9, 3)]) == []
    assert codes(validate_link(fabric, LinkKind.STREAM, (0, 0), [(1, 0), (2, 0)])) == ["fan-out"]
    assert codes(validate_link(fabric, LinkKind.STREAM, (0, 0), [])) == ["no consumer"]
    assert codes(validate_link(fabric, LinkKind.SHIM_WRITE, (60, 0), ["shim0"])) == ["off grid"]


def test_fabric_file_roundtrip(tmp_path, fabric):
    path = tmp_path / "fabric.json"
    save_fabric(fabric.model_copy(update={"shim_count": 4}), path)
    loaded = load_fabric(path)
    assert loaded.shim_count == 4
    assert json.loads(path.read_text())["fabric_version"] == 1


def test_bad_fabric_files(tmp_path):
    with pytest.raises(FabricConfigError, match="cannot read"):
        load_fabric(tmp_path / "missing.json")
    path = tmp_path / "fabric.json"
    path.write_text(json.dumps({"fabric_version": 1, "array_cols": 0}))
    with pytest.raises(FabricConfigError, match="invalid"):
        load_fabric(path)
    path.write_text(json.dumps({"fabric_version": 1, "warp_drive": True}))
    with pytest.raises(FabricConfigError):
        load_fabric(path)


def test_default_fabric_is_fresh():
    assert default_versal_fabric() == default_versal_fabric()
