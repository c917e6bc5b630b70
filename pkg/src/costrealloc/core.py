"""Address-space model shared by every allocator variant.

Addresses and lengths are plain nonnegative integers (cells).  Intervals are
half-open ``(start, end)`` tuples.  Objects carry a stable internal ``oid`` in
addition to their client-visible name, so a name can be reused once the
allocator has really finished deleting the previous holder.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

Interval = tuple[int, int]


class InvalidArgument(ValueError):
    pass


class NotFound(LookupError):
    pass


class InvariantFailure(RuntimeError):
    """Raised by allocators when an internal self-check trips (a bug, never user error)."""


def as_fraction(value: Union[str, int, float, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1 << 20)
    return Fraction(value)


def size_class(length: int) -> int:
    """The unique ``i`` with ``2**(i-1) <= length < 2**i``."""
    if not isinstance(length, int) or length < 1:
        raise InvalidArgument(f"length must be a positive integer, got {length!r}")
    return length.bit_length()


def buffer_capacity(class_volume: int, epsilon_prime: Fraction) -> int:
    """floor(epsilon_prime * class_volume), computed exactly."""
    if class_volume < 0:
        raise InvalidArgument("class volume must be nonnegative")
    eps = as_fraction(epsilon_prime)
    return (eps.numerator * class_volume) // eps.denominator


def overlaps(a: Interval, b: Interval) -> bool:
    return a[0] < b[1] and b[0] < a[1]


class Residency(enum.Enum):
    PAYLOAD = "payload"
    BUFFER = "buffer"
    OVERFLOW = "overflow"
    LOG = "log"
    DELETED_PENDING = "deleted-pending"


@dataclass(eq=False, slots=True)
class ObjectRecord:
    oid: int
    name: str
    length: int
    size_class: int
    start: int
    residency: Residency

    @property
    def end(self) -> int:
        return self.start + self.length

    @property
    def interval(self) -> Interval:
        return (self.start, self.start + self.length)

    @property
    def live(self) -> bool:
        return self.residency is not Residency.DELETED_PENDING


@dataclass(eq=False, slots=True)
class DeleteRecord:
    """Dummy placeholder consuming buffer space for a pending deletion."""

    name: str
    length: int
    size_class: int
    start: int

    residency = Residency.BUFFER
    live = False

    @property
    def end(self) -> int:
        return self.start + self.length


BufferItem = Union[ObjectRecord, DeleteRecord]


@dataclass(eq=False)
class Region:
    class_index: int
    payload_start: int
    payload_len: int
    buffer_cap: int
    payload: list[ObjectRecord] = field(default_factory=list)
    buffer: list[BufferItem] = field(default_factory=list)
    buffer_used: int = 0

    @property
    def buffer_start(self) -> int:
        return self.payload_start + self.payload_len

    @property
    def end(self) -> int:
        return self.payload_start + self.payload_len + self.buffer_cap

    @property
    def payload_interval(self) -> Interval:
        return (self.payload_start, self.payload_start + self.payload_len)

    @property
    def buffer_interval(self) -> Interval:
        return (self.buffer_start, self.end)

    def room(self) -> int:
        return self.buffer_cap - self.buffer_used

    @property
    def buffer_occupancy(self) -> int:
        return self.buffer_used


@dataclass(eq=False)
class TailBuffer:
    """Catch-all buffer after the last size-class region (deamortized mode)."""

    start: int
    capacity: int
    items: list[BufferItem] = field(default_factory=list)
    used: int = 0

    @property
    def end(self) -> int:
        return self.start + self.capacity

    def room(self) -> int:
        return self.capacity - self.used


@dataclass(eq=False, slots=True)
class LogEntry:
    kind: str  # "I" or "D"
    record: ObjectRecord

    @property
    def length(self) -> int:
        return self.record.length


@dataclass(eq=False)
class FlushLog:
    start: int
    cursor: int
    entries: list[LogEntry] = field(default_factory=list)
    drained: int = 0

    def pending(self) -> list[LogEntry]:
        return self.entries[self.drained:]

    def volume(self) -> int:
        return sum(e.length for e in self.entries)


@dataclass(frozen=True, slots=True)
class MoveEvent:
    name: str
    length: int
    source: Optional[Interval]
    destination: Interval
    phase_id: int
    oid: int

    def line(self) -> str:
        src = "-" if self.source is None else f"{self.source[0]}:{self.source[1]}"
        dst = f"{self.destination[0]}:{self.destination[1]}"
        return f"M {self.name} {self.length} {src} {dst} {self.phase_id}"


@dataclass(frozen=True, slots=True)
class FreeEvent:
    name: str
    oid: int
    interval: Interval
    phase_id: int

    def line(self) -> str:
        return f"F {self.name} {self.interval[0]}:{self.interval[1]} {self.phase_id}"


@dataclass(frozen=True, slots=True)
class CheckpointEvent:
    phase_id: int  # phase that this checkpoint closes

    def line(self) -> str:
        return f"C {self.phase_id}"


@dataclass(frozen=True, slots=True)
class FlushEvent:
    stage: str  # "start" or "end"
    boundary_class: int
    volume: int = 0  # active volume when the flush was triggered

    def line(self) -> str:
        return f"X {self.stage} {self.boundary_class} {self.volume}"


Event = Union[MoveEvent, FreeEvent, CheckpointEvent, FlushEvent]


class LayoutState:
    """Complete address-space configuration of one allocator instance."""

    def __init__(self, epsilon_prime: Union[str, Fraction, float, int]):
        eps = as_fraction(epsilon_prime)
        if not (0 < eps <= Fraction(1, 2)):
            raise InvalidArgument(f"epsilon_prime must lie in (0, 1/2], got {eps}")
        self.epsilon_prime = eps
        self.regions: list[Region] = []
        self.objects: dict[str, ObjectRecord] = {}  # client-visible active names
        self.records: dict[int, ObjectRecord] = {}  # every physically present object
        self.overflow: list[ObjectRecord] = []
        self.tail: Optional[TailBuffer] = None
        self.log: Optional[FlushLog] = None
        self.delta = 0
        self.volume = 0  # live volume (deleted objects excluded at once)
        self.high_water = 0  # end of furthest cell written since the last flush completed
        self._next_oid = 0

    def new_oid(self) -> int:
        self._next_oid += 1
        return self._next_oid

    @property
    def regions_end(self) -> int:
        return self.regions[-1].end if self.regions else 0

    @property
    def extent(self) -> int:
        end = self.regions_end
        if self.tail is not None:
            end = max(end, self.tail.end, self.tail.start + self.tail.used)
        if self.regions:
            last = self.regions[-1]
            end = max(end, last.buffer_start + last.buffer_used)
        for rec in self.overflow:
            end = max(end, rec.end)
        if self.log is not None:
            end = max(end, self.log.cursor)
        return end

    @property
    def footprint(self) -> int:
        return max((r.end for r in self.records.values() if r.live), default=0)

    def volume_per_class(self) -> dict[int, int]:
        """Per-class volume; delete-pending objects count until a flush drops them."""
        out: dict[int, int] = {}
        for reg in self.regions:
            for rec in reg.payload:
                out[rec.size_class] = out.get(rec.size_class, 0) + rec.length
            for item in reg.buffer:
                if isinstance(item, ObjectRecord):
                    out[item.size_class] = out.get(item.size_class, 0) + item.length
        buffers = [self.tail.items] if self.tail is not None else []
        for items in buffers:
            for item in items:
                if isinstance(item, ObjectRecord):
                    out[item.size_class] = out.get(item.size_class, 0) + item.length
        for rec in self.overflow:
            out[rec.size_class] = out.get(rec.size_class, 0) + rec.length
        return out

    def region_for(self, class_index: int) -> Optional[Region]:
        for reg in self.regions:
            if reg.class_index == class_index:
                return reg
        return None

    def iter_buffers_desc(self) -> Iterator[tuple[Optional[int], list[BufferItem]]]:
        """(class, items) from the last buffer to the first; the tail has class None."""
        if self.tail is not None:
            yield None, self.tail.items
        for reg in reversed(self.regions):
            yield reg.class_index, reg.buffer


@dataclass(frozen=True)
class Violation:
    invariant: str
    detail: str


def validate_layout(state: LayoutState, *, flush_in_progress: bool = False) -> list[Violation]:
    """Every violated layout invariant; an empty list means the state is sound."""
    out: list[Violation] = []

    prev_end = 0
    prev_cls = 0
    for reg in state.regions:
        if reg.payload_start != prev_end:
            out.append(Violation("region contiguity", f"region {reg.class_index} starts at {reg.payload_start}, expected {prev_end}"))
        if reg.class_index <= prev_cls:
            out.append(Violation("region order", f"region {reg.class_index} follows region {prev_cls}"))
        prev_end, prev_cls = reg.end, reg.class_index
        if reg.buffer_used > reg.buffer_cap and not flush_in_progress:
            out.append(Violation("buffer capacity", f"buffer {reg.class_index} holds {reg.buffer_used} > {reg.buffer_cap}"))
        p0, p1 = reg.payload_interval
        for rec in reg.payload:
            if not rec.live:
                continue
            if rec.size_class != reg.class_index:
                out.append(Violation("payload purity", f"{rec.name} (class {rec.size_class}) in payload {reg.class_index}"))
            if not (p0 <= rec.start and rec.end <= p1) and not flush_in_progress:
                out.append(Violation("payload bounds", f"{rec.name} at {rec.interval} outside payload {reg.payload_interval}"))
        b0 = reg.buffer_start
        for item in reg.buffer:
            if item.size_class > reg.class_index:
                out.append(Violation("buffer class bound", f"{item.name} (class {item.size_class}) in buffer {reg.class_index}"))
            if item.live and not flush_in_progress and not (b0 <= item.start and item.end <= b0 + reg.buffer_used):
                out.append(Violation("buffer bounds", f"{item.name} at {(item.start, item.end)} outside buffer {reg.class_index}"))

    if state.tail is not None:
        if state.regions and state.tail.start != state.regions_end:
            out.append(Violation("tail placement", f"tail starts at {state.tail.start}, regions end at {state.regions_end}"))
        if state.tail.used > state.tail.capacity and not flush_in_progress:
            out.append(Violation("buffer capacity", f"tail holds {state.tail.used} > {state.tail.capacity}"))

    if state.overflow and not flush_in_progress:
        out.append(Violation("overflow emptiness", f"{len(state.overflow)} objects in overflow"))

    occupied: list[tuple[int, int, str]] = []
    for rec in state.records.values():
        if rec.live:
            occupied.append((rec.start, rec.end, rec.name))
            if rec.end - rec.start != rec.length or rec.length < 1:
                out.append(Violation("interval length", f"{rec.name} interval {rec.interval} vs length {rec.length}"))
            if rec.size_class != rec.length.bit_length():
                out.append(Violation("size class", f"{rec.name} length {rec.length} tagged class {rec.size_class}"))
    dummies = []
    if not flush_in_progress:  # a running flush discards the dummies of the regions it rebuilds
        dummies = [item for reg in state.regions for item in reg.buffer if isinstance(item, DeleteRecord)]
        if state.tail is not None:
            dummies += [item for item in state.tail.items if isinstance(item, DeleteRecord)]
    occupied += [(d.start, d.end, f"<delete {d.name}>") for d in dummies]
    occupied.sort()
    for (s0, e0, n0), (s1, e1, n1) in zip(occupied, occupied[1:]):
        if s1 < e0:
            out.append(Violation("disjointness", f"{n0} {(s0, e0)} overlaps {n1} {(s1, e1)}"))

    footprint = state.footprint
    if footprint > state.extent:
        out.append(Violation("footprint", f"footprint {footprint} exceeds extent {state.extent}"))

    live_volume = sum(r.length for r in state.records.values() if r.live)
    if live_volume != state.volume:
        out.append(Violation("volume ledger", f"tracked volume {state.volume} vs live objects {live_volume}"))
    return out
