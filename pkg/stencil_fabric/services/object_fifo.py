"""Object FIFOs: circular buffers with blocking acquire/release windows.

A producer acquires free slots, fills them and releases them to the
consumers. Each consumer keeps its own window over the element sequence;
a slot is recycled once every consumer has released it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Tuple

import simpy

from stencil_fabric.models import FifoState, ObjectFifoSpec


class FifoProtocolError(RuntimeError):
    """Release of elements that were never acquired, or an unsatisfiable acquire."""


class Side(str, Enum):
    CONSUME = "consume"
    PRODUCE = "produce"


@dataclass
class Waiter:
    event: simpy.Event
    side: Side
    actor: str
    count: int
    ready: Callable[[], bool]
    grant: Callable[[], Any]


@dataclass
class TraceEntry:
    time: float
    actor: str
    op: str
    side: Side
    count: int


@dataclass
class ObjectFifo:
    env: simpy.Environment
    spec: ObjectFifoSpec
    trace_enabled: bool = False
    tail: int = 0
    acquired_produce: int = 0
    cursor: Dict[str, int] = field(default_factory=dict)
    held: Dict[str, int] = field(default_factory=dict)
    payloads: Dict[int, Any] = field(default_factory=dict)
    waiters: List[Waiter] = field(default_factory=list)
    trace: List[TraceEntry] = field(default_factory=list)

    def __post_init__(self) -> None:
        for consumer in self.spec.consumers:
            self.cursor[consumer] = 0
            self.held[consumer] = 0

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def capacity(self) -> int:
        return self.spec.capacity

    @property
    def head(self) -> int:
        return min(self.cursor.values())

    @property
    def occupied(self) -> int:
        return self.tail - self.head

    def state(self) -> FifoState:
        return FifoState(
            capacity=self.capacity,
            occupied=self.occupied,
            acquired_consume=dict(self.held),
            acquired_produce=self.acquired_produce,
            head=self.head % self.capacity,
            tail=self.tail % self.capacity,
        )

    # ------------------------------------------------------------------ producer side

    def acquire_produce(self, count: int = 1, actor: str | None = None) -> simpy.Event:
        """Event that fires with the sequence numbers of ``count`` free slots."""
        actor = actor or self.spec.producer
        self._check_count(count)

        def ready() -> bool:
            return self.capacity - self.occupied - self.acquired_produce >= count

        def grant() -> List[int]:
            first = self.tail + self.acquired_produce
            self.acquired_produce += count
            self._record(actor, "acquire", Side.PRODUCE, count)
            return list(range(first, first + count))

        return self._wait(Waiter(self.env.event(), Side.PRODUCE, actor, count, ready, grant))

    def release_produce(self, payloads: List[Any], actor: str | None = None) -> None:
        """Publish filled slots, oldest first."""
        count = len(payloads)
        if count > self.acquired_produce:
            raise FifoProtocolError(
                f"{self.name}: producer released {count} elements but holds {self.acquired_produce}"
            )
        for payload in payloads:
            self.payloads[self.tail] = payload
            self.tail += 1
        self.acquired_produce -= count
        self._record(actor or self.spec.producer, "release", Side.PRODUCE, count)
        self._notify()

    # ------------------------------------------------------------------ consumer side

    def acquire_consume(self, consumer: str, count: int) -> simpy.Event:
        """Event that fires with the payloads of the next ``count`` elements of ``consumer``."""
        if consumer not in self.cursor:
            raise FifoProtocolError(f"{self.name}: {consumer} is not a consumer")
        self._check_count(count)
        if self.held[consumer] + count > self.capacity:
            raise FifoProtocolError(
                f"{self.name}: {consumer} would hold {self.held[consumer] + count} elements, "
                f"capacity is {self.capacity}"
            )

        def ready() -> bool:
            return self.tail - (self.cursor[consumer] + self.held[consumer]) >= count

        def grant() -> List[Any]:
            first = self.cursor[consumer] + self.held[consumer]
            self.held[consumer] += count
            self._record(consumer, "acquire", Side.CONSUME, count)
            return [self.payloads[seq] for seq in range(first, first + count)]

        return self._wait(Waiter(self.env.event(), Side.CONSUME, consumer, count, ready, grant))

    def window(self, consumer: str) -> List[Any]:
        """Payloads currently held by ``consumer``, oldest first."""
        start = self.cursor[consumer]
        return [self.payloads[seq] for seq in range(start, start + self.held[consumer])]

    def release_consume(self, consumer: str, count: int) -> None:
        if count < 0 or count > self.held.get(consumer, 0):
            raise FifoProtocolError(
                f"{self.name}: {consumer} released {count} elements but holds {self.held.get(consumer, 0)}"
            )
        if count == 0:
            return
        old_head = self.head
        self.cursor[consumer] += count
        self.held[consumer] -= count
        for seq in range(old_head, self.head):
            self.payloads.pop(seq, None)
        self._record(consumer, "release", Side.CONSUME, count)
        self._notify()

    # ------------------------------------------------------------------ internals

    def _check_count(self, count: int) -> None:
        if count < 1:
            raise FifoProtocolError(f"{self.name}: acquire count must be positive")
        if count > self.capacity:
            raise FifoProtocolError(f"{self.name}: acquire of {count} exceeds capacity {self.capacity}")

    def _wait(self, waiter: Waiter) -> simpy.Event:
        if not self.waiters and waiter.ready():
            waiter.event.succeed(waiter.grant())
        else:
            self.waiters.append(waiter)
            self._notify()
        return waiter.event

    def _notify(self) -> None:
        progressed = True
        while progressed:
            progressed = False
            for waiter in list(self.waiters):
                if waiter.ready():
                    self.waiters.remove(waiter)
                    waiter.event.succeed(waiter.grant())
                    progressed = True

    def _record(self, actor: str, op: str, side: Side, count: int) -> None:
        if self.trace_enabled:
            self.trace.append(TraceEntry(self.env.now, actor, op, side, count))

    def blocked(self) -> List[Tuple[str, str, int, Dict[str, int]]]:
        """(actor, side, requested, held) for every pending acquire."""
        return [(w.actor, w.side.value, w.count, dict(self.held)) for w in self.waiters]


def fifo_acquire(fifo: ObjectFifo, side: Side, count: int, consumer: str | None = None) -> simpy.Event:
    if side is Side.PRODUCE:
        return fifo.acquire_produce(count)
    if consumer is None:
        raise FifoProtocolError(f"{fifo.name}: consume acquire needs a consumer name")
    return fifo.acquire_consume(consumer, count)


def fifo_release(
    fifo: ObjectFifo, side: Side, count: int, consumer: str | None = None, payloads: List[Any] | None = None
) -> None:
    if side is Side.PRODUCE:
        payloads = payloads if payloads is not None else [None] * count
        if len(payloads) != count:
            raise FifoProtocolError(f"{fifo.name}: {count} releases but {len(payloads)} payloads")
        fifo.release_produce(payloads)
        return
    if consumer is None:
        raise FifoProtocolError(f"{fifo.name}: consume release needs a consumer name")
    fifo.release_consume(consumer, count)
