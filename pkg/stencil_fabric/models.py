from __future__ import annotations

from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Annotated, List, Literal, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    computed_field,
    field_validator,
    model_validator,
)


def exact_str(value: Fraction | int) -> str:
    """Render a rational as an exact decimal when it terminates, else as p/q."""
    value = Fraction(value)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    places = max(twos, fives)
    if places == 0:
        return str(value.numerator)
    scaled = value * 10**places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")


ExactCycles = Annotated[Fraction, PlainSerializer(exact_str, return_type=str, when_used="json")]
Position = Tuple[int, int]


# --------------------------------------------------------------------------- grids and kernels


class DType(str, Enum):
    I32 = "i32"
    F32 = "f32"

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype(np.int32) if self is DType.I32 else np.dtype(np.float32)

    @property
    def code(self) -> int:
        """Binary tag used by the SPRT grid format."""
        return 0 if self is DType.I32 else 1

    @classmethod
    def from_code(cls, code: int) -> "DType":
        return {0: cls.I32, 1: cls.F32}[code]


class Grid3(BaseModel):
    """Dense R x C x D field stored as data[d, r, c] (flat index d*R*C + r*C + c)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    depth: int = Field(..., ge=1)
    dtype: DType
    data: np.ndarray

    @model_validator(mode="after")
    def check_data(self) -> "Grid3":
        expected = (self.depth, self.rows, self.cols)
        if self.data.shape != expected:
            raise ValueError(f"data shape {self.data.shape} does not match (D, R, C) = {expected}")
        if self.data.dtype != self.dtype.numpy_dtype:
            raise ValueError(f"data dtype {self.data.dtype} does not match {self.dtype.value}")
        return self

    @classmethod
    def from_array(cls, array, dtype: DType | None = None) -> "Grid3":
        """Build a grid from a (D, R, C) or (R, C) array; the data is copied and frozen."""
        arr = np.asarray(array)
        if arr.ndim == 2:
            arr = arr[np.newaxis, :, :]
        if arr.ndim != 3:
            raise ValueError(f"expected a 2D or 3D array, got {arr.ndim} dimensions")
        if dtype is None:
            dtype = DType.I32 if np.issubdtype(arr.dtype, np.integer) else DType.F32
        data = np.array(arr, dtype=dtype.numpy_dtype, copy=True, order="C")
        data.setflags(write=False)
        depth, rows, cols = data.shape
        return cls(rows=rows, cols=cols, depth=depth, dtype=dtype, data=data)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.rows, self.cols, self.depth

    def value(self, r: int, c: int, d: int):
        return self.data[d, r, c].item()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grid3):
            return NotImplemented
        return self.dtype == other.dtype and np.array_equal(self.data, other.data)

    __hash__ = None  # type: ignore[assignment]


class HdiffParams(BaseModel):
    """Horizontal-diffusion parameters: coefficient, fixed-point shift and sweep count."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeff: int | float = 1
    coeff_grid: Grid3 | None = None
    srs_shift: int = Field(default=0, ge=0, le=31)
    sweeps: int = Field(default=1, ge=1)
    limiter: bool = True


class StencilName(str, Enum):
    JAC1D = "jac1d"
    JAC2D3PT = "jac2d3pt"
    LAP5PT = "lap5pt"
    JAC2D5PT = "jac2d5pt"
    SEIDEL9PT = "seidel9pt"


class StencilTap(BaseModel):
    model_config = ConfigDict(frozen=True)

    dr: int
    dc: int
    weight: float


class StencilSpec(BaseModel):
    """An elementary stencil: weighted taps around the output point."""

    model_config = ConfigDict(frozen=True)

    name: StencilName
    taps: List[StencilTap] = Field(..., min_length=1)
    dims: Literal[1, 2]
    # Q-format of the quantised weights on the fixed-point path.
    frac_bits: int = Field(default=15, ge=0, le=30)

    @field_validator("taps")
    @classmethod
    def bounded_taps(cls, taps: List[StencilTap]) -> List[StencilTap]:
        for tap in taps:
            if abs(tap.dr) > 1 or abs(tap.dc) > 1:
                raise ValueError(f"tap offset ({tap.dr}, {tap.dc}) exceeds radius 1")
        return taps

    @model_validator(mode="after")
    def one_dimensional_rows(self) -> "StencilSpec":
        if self.dims == 1 and any(tap.dr != 0 for tap in self.taps):
            raise ValueError("1D stencils may only have column offsets")
        return self

    @property
    def row_radius(self) -> int:
        return max(abs(tap.dr) for tap in self.taps)

    @property
    def col_radius(self) -> int:
        return max(abs(tap.dc) for tap in self.taps)

    @property
    def row_extent(self) -> int:
        return 2 * self.row_radius + 1


class FixedPointSemantics(BaseModel):
    """Shift-round-saturate contract of the fixed-point datapath."""

    model_config = ConfigDict(frozen=True)

    accumulate_width: int = 64
    output_width: int = 32
    rounding: Literal["half-away-from-zero"] = "half-away-from-zero"
    overflow: Literal["saturate"] = "saturate"

    @property
    def output_min(self) -> int:
        return -(1 << (self.output_width - 1))

    @property
    def output_max(self) -> int:
        return (1 << (self.output_width - 1)) - 1


class OpCount(BaseModel):
    """Operation inventory; a MAC counts as two ops, sub/compare/select as one."""

    macs: int = Field(..., ge=0)
    others: int = Field(..., ge=0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def ops(self) -> int:
        return 2 * self.macs + self.others


# --------------------------------------------------------------------------- analytic model


class DatapathSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    macs_per_cycle: int = Field(default=8, gt=0)
    load_bits_per_cycle: int = Field(default=2 * 256, gt=0)
    elem_bits: int = Field(default=32, gt=0)
    nonmac_per_cycle: int = Field(default=8, gt=0)


class Bound(str, Enum):
    COMPUTE = "compute-bound"
    MEMORY = "memory-bound"
    BALANCED = "balanced"


class AnalyticReport(BaseModel):
    """Closed-form compute and memory cycle estimates for one grid."""

    rows: int
    cols: int
    depth: int
    datapath: DatapathSpec
    lap_comp: ExactCycles
    flx_comp: ExactCycles
    hdiff_comp: ExactCycles
    lap_mem: ExactCycles
    flx_mem: ExactCycles
    hdiff_mem: ExactCycles
    bound: Bound = Bound.BALANCED
    group_bounds: dict[str, Bound] = Field(default_factory=dict)
    ratios: dict[str, ExactCycles | None] = Field(default_factory=dict)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @model_validator(mode="after")
    def additive(self) -> "AnalyticReport":
        if self.hdiff_comp != self.lap_comp + self.flx_comp:
            raise ValueError("hdiff_comp must equal lap_comp + flx_comp")
        if self.hdiff_mem != self.lap_mem + self.flx_mem:
            raise ValueError("hdiff_mem must equal lap_mem + flx_mem")
        return self


class PlatformRow(BaseModel):
    name: str = Field(..., min_length=1)
    kind: str
    peak_tflops: float = Field(..., gt=0)
    peak_bw_gbs: float = Field(..., gt=0)
    reported_gops: float = Field(..., ge=0)
    reported_roof_pct: float | None = None


class PlatformTable(BaseModel):
    platforms_version: Literal[1] = 1
    platforms: List[PlatformRow] = Field(..., min_length=1)


class RooflinePoint(BaseModel):
    name: str
    peak_perf: float = Field(..., gt=0, description="GOp/s")
    peak_bw: float = Field(..., gt=0, description="GB/s")
    arithmetic_intensity: float | None = Field(default=None, description="ops/byte")
    achieved: float = Field(..., ge=0, description="GOp/s")
    attainable: float
    percent_of_peak: float
    reported_percent: float | None = None


# --------------------------------------------------------------------------- fabric


class LinkKind(str, Enum):
    NEIGHBOR_MEMORY = "neighbor_memory"
    CASCADE = "cascade"
    STREAM = "stream"
    STREAM_BROADCAST = "stream_broadcast"
    SHIM_READ = "shim_read"
    SHIM_WRITE = "shim_write"


class FabricSpec(BaseModel):
    """Parametric description of the spatial device."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    fabric_version: Literal[1] = 1
    array_cols: int = Field(default=50, gt=0)
    array_rows: int = Field(default=8, gt=0)
    data_mem_bytes: int = Field(default=32 * 1024, gt=0)
    dmas_per_core: int = Field(default=2, ge=1)
    neighbor_mem_bits: int = Field(default=256, gt=0)
    cascade_bits: int = Field(default=384, gt=0)
    stream_bits: int = Field(default=32, gt=0)
    streams_per_direction: int = Field(default=2, gt=0)
    shim_count: int = Field(default=16, gt=0)
    shim_channels_per_direction: int = Field(default=2, gt=0)
    shim_channel_bits: int = Field(default=256, gt=0)
    clock_ghz: float = Field(default=1.0, gt=0)
    datapath: DatapathSpec = Field(default_factory=DatapathSpec)
    srs_latency_cycles: int = Field(default=4, gt=0)
    f32_mac_latency: int = Field(default=2, gt=0)
    f32_penalty: float = Field(default=1.3, ge=1.0)
    mac_efficiency: float = Field(default=0.85, gt=0.0, le=1.0)
    transfer_latency_cycles: int = Field(default=2, ge=0)

    @property
    def core_count(self) -> int:
        return self.array_cols * self.array_rows


class CoreRole(str, Enum):
    LAP = "lap"
    FLUX = "flux"
    FLUX_MAC = "flux_mac"
    FLUX_NONMAC = "flux_nonmac"
    MONO = "mono"
    GATHER = "gather"
    ELEMENTARY = "elementary"


class BufferSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    bytes: int = Field(..., ge=0)
    double_buffered: bool = False

    @property
    def footprint(self) -> int:
        return self.bytes * (2 if self.double_buffered else 1)


class CoreSlot(BaseModel):
    """A placed core: position, roles (compute role first) and local resources."""

    model_config = ConfigDict(frozen=True)

    name: str
    position: Position
    roles: List[CoreRole] = Field(..., min_length=1)
    buffers: List[BufferSpec] = Field(default_factory=list)
    dma_uses: int = Field(default=0, ge=0)
    group: int = 0
    lane: int = 0
    stage: int = 0
    srs_on_receive: bool = False

    @property
    def role(self) -> CoreRole:
        return self.roles[0]

    @property
    def is_gather(self) -> bool:
        return CoreRole.GATHER in self.roles

    @property
    def memory_bytes(self) -> int:
        return sum(buffer.footprint for buffer in self.buffers)


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    subject: str
    message: str


# --------------------------------------------------------------------------- mapping plans


class InterfaceChoice(str, Enum):
    DIRECT = "direct"
    STREAM = "stream"
    CASCADE = "cascade"


class DesignKind(str, Enum):
    SINGLE = "single"
    DUAL = "dual"
    TRI = "tri"
    BBLOCK = "bblock"
    SCALE_OUT = "scaleout"
    ELEMENTARY = "elem"


class DesignTag(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: DesignKind
    dtype: DType = DType.I32
    iface: InterfaceChoice | None = None
    lanes: int | None = Field(default=None, ge=1)
    n_bblocks: int | None = Field(default=None, ge=1)
    n_cores: int | None = Field(default=None, ge=1)
    stencil: StencilName | None = None

    @property
    def name(self) -> str:
        if self.kind is DesignKind.SINGLE:
            return f"single_{self.dtype.value}"
        if self.kind in (DesignKind.DUAL, DesignKind.TRI):
            iface = (self.iface or InterfaceChoice.DIRECT).value
            return f"{self.kind.value}_{self.dtype.value}_{iface}"
        if self.kind is DesignKind.BBLOCK:
            return f"bblock:{self.lanes}"
        if self.kind is DesignKind.SCALE_OUT:
            return f"scaleout:{self.n_bblocks}"
        suffix = ":f32" if self.dtype is DType.F32 else ""
        return f"elem:{self.stencil.value if self.stencil else '?'}:{self.n_cores}{suffix}"


class ObjectFifoSpec(BaseModel):
    """Circular-buffer channel between one producer and one or more consumers."""

    model_config = ConfigDict(frozen=True)

    name: str
    producer: str
    consumers: List[str] = Field(..., min_length=1)
    element_rows: int = Field(default=1, ge=1)
    row_bytes: int = Field(..., ge=0)
    depth: int = Field(..., ge=1)
    double_buffered: bool = False
    acquire_consume: int = Field(default=1, ge=1)
    acquire_produce: int = Field(default=1, ge=1)
    # None: producer and consumer share one core's memory, no link involved.
    link: LinkKind | None = None

    @property
    def element_bytes(self) -> int:
        return self.element_rows * self.row_bytes

    @property
    def capacity(self) -> int:
        return self.depth * (2 if self.double_buffered else 1)


class LinkSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: LinkKind
    src: str
    dsts: List[str] = Field(..., min_length=1)
    fifo: str


class ShimDirection(str, Enum):
    READ = "read"
    WRITE = "write"


class ShimAssignment(BaseModel):
    model_config = ConfigDict(frozen=True)

    shim: int = Field(..., ge=0)
    direction: ShimDirection
    channel: int = Field(default=0, ge=0)
    fifo: str


class WorkShare(BaseModel):
    """Output rows r and planes d owned by one lane of one group."""

    model_config = ConfigDict(frozen=True)

    group: int = Field(..., ge=0)
    lane: int = Field(..., ge=0)
    plane_modulus: int = Field(default=1, ge=1)
    plane_residue: int = Field(default=0, ge=0)
    row_modulus: int = Field(default=1, ge=1)
    row_residue: int = Field(default=0, ge=0)

    def owns(self, r: int, d: int) -> bool:
        return r % self.row_modulus == self.row_residue and d % self.plane_modulus == self.plane_residue


class MappingPlan(BaseModel):
    """An executable design: placed cores, FIFOs, links, shim channels and work split."""

    model_config = ConfigDict(frozen=True)

    plan_version: Literal[1] = 1
    design: DesignTag
    cols: int = Field(..., ge=1)
    slots: List[CoreSlot]
    fifos: List[ObjectFifoSpec]
    links: List[LinkSpec]
    shim_assignments: List[ShimAssignment]
    work_division: List[WorkShare]

    @property
    def name(self) -> str:
        return self.design.name

    def slot(self, name: str) -> CoreSlot:
        for slot in self.slots:
            if slot.name == name:
                return slot
        raise KeyError(name)

    def fifo(self, name: str) -> ObjectFifoSpec:
        for fifo in self.fifos:
            if fifo.name == name:
                return fifo
        raise KeyError(name)

    @property
    def groups(self) -> List[int]:
        return sorted({slot.group for slot in self.slots})

    def shims_used(self) -> List[int]:
        return sorted({assignment.shim for assignment in self.shim_assignments})


# --------------------------------------------------------------------------- simulation


class FifoState(BaseModel):
    """Snapshot of an object FIFO's circular window."""

    capacity: int
    occupied: int
    acquired_consume: dict[str, int]
    acquired_produce: int
    head: int
    tail: int
    in_flight: int = 0


class KernelCost(BaseModel):
    """Per-row cost of one core role: components and derated total."""

    role: CoreRole
    dtype: DType
    mac_cycles: int
    nonmac_cycles: int
    move_cycles: int
    mem_cycles: int

    @computed_field  # type: ignore[prop-decorator]
    @property
    def compute_cycles(self) -> int:
        return self.mac_cycles + self.nonmac_cycles + self.move_cycles

    @computed_field  # type: ignore[prop-decorator]
    @property
    def ideal_cycles(self) -> int:
        return max(self.compute_cycles, self.mem_cycles)

    cycles: int


class CoreStats(BaseModel):
    name: str
    position: Position
    roles: List[CoreRole]
    busy_cycles: int
    idle_cycles: int
    utilization: float


class LinkStats(BaseModel):
    name: str
    kind: LinkKind
    bytes: int
    busy_cycles: int


class ShimChannelStats(BaseModel):
    shim: int
    direction: ShimDirection
    channel: int
    bytes: int
    busy_cycles: int


class SimReport(BaseModel):
    report_version: Literal[1] = 1
    design: str
    rows: int
    cols: int
    depth: int
    dtype: DType
    sweeps: int = 1
    total_cycles: int
    wallclock_ns: float
    cores: List[CoreStats]
    links: List[LinkStats]
    shim_channels: List[ShimChannelStats]
    shim_read_bytes: int
    shim_write_bytes: int
    consumer_dma_bytes: int
    ops: int
    throughput_gops: float
    first_output_cycle: int
    steady_cycles_per_row: float
    output_checksum: str
    functional_match: bool
    max_abs_error: float

    @property
    def runtime_ms(self) -> float:
        return self.wallclock_ns / 1e6


# --------------------------------------------------------------------------- CLI


class GridGenerator(str, Enum):
    CONSTANT = "constant"
    RAMP = "ramp"
    COLUMN_RAMP = "colramp"
    IMPULSE = "impulse"
    RANDOM = "random"


class RunConfig(BaseModel):
    """Validated CLI request."""

    command: Literal["golden", "analyze", "simulate", "sweep", "roofline", "compare", "plan"]
    input_path: Path | None = None
    generator: GridGenerator | None = None
    seed: int | None = None
    dims: Tuple[int, int, int] = (256, 256, 64)
    dtype: DType = DType.I32
    designs: List[str] = Field(default_factory=list)
    fabric_file: Path | None = None
    output_path: Path | None = None
    report_path: Path | None = None
    report_format: Literal["json", "csv"] = "json"

    @field_validator("dims")
    @classmethod
    def positive_dims(cls, dims: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(extent < 1 for extent in dims):
            raise ValueError("dims must be positive")
        return dims

    @model_validator(mode="after")
    def one_grid_source(self) -> "RunConfig":
        if self.command in ("golden", "simulate", "sweep"):
            if (self.input_path is None) == (self.generator is None):
                raise ValueError("give exactly one of --input or --gen")
            if self.generator is GridGenerator.RANDOM and self.seed is None:
                raise ValueError("--gen random requires --seed")
        return self
