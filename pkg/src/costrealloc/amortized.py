"""Buffered size-class reallocator with the four-step buffer flush.

Each size class ``i`` owns a region: a payload segment holding exactly the
class-``i`` objects placed by the last flush, followed by a buffer that
absorbs new objects (and dummy delete records) of classes ``<= i``.  When no
eligible buffer has room, a suffix of regions is rebuilt so that payload
``i`` holds ``V(i)`` cells and buffer ``i`` is empty with
``floor(eps' * V(i))`` cells.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .core import (
    BufferItem,
    DeleteRecord,
    Event,
    FlushEvent,
    FreeEvent,
    InvalidArgument,
    InvariantFailure,
    LayoutState,
    MoveEvent,
    NotFound,
    ObjectRecord,
    Region,
    Residency,
    buffer_capacity,
    size_class,
)


def find_boundary_class(state: LayoutState, pending_class: int) -> int:
    """Largest ``b`` such that every item buffered in regions ``>= b`` (and the
    pending operation) belongs to a class ``>= b``.

    Scans buffers from the last region down, lowering ``b`` whenever a smaller
    class turns up, and stops at the first region below the current ``b``.
    A tail buffer, when present, is scanned first and counts as the largest.
    """
    b = pending_class
    for cls, items in state.iter_buffers_desc():
        if cls is not None and cls < b:
            break
        for item in items:
            if item.size_class < b:
                b = item.size_class
    return b


@dataclass
class FlushPlan:
    boundary_class: int
    per_class_volume: dict[int, int]
    new_suffix_size: int
    suffix_start: int
    regions: list[Region]
    payload_objects: list[ObjectRecord]  # old payload objects, in (class, address) order
    buffered_objects: list[ObjectRecord]  # buffered live objects, arrival order
    targets: dict[int, int]  # oid -> final start
    move_list: list[MoveEvent] = field(default_factory=list)

    @property
    def suffix_end(self) -> int:
        return self.suffix_start + self.new_suffix_size

    def last_payload_end(self) -> int:
        """Final end of the last old payload object (``suffix_start`` if none)."""
        end = self.suffix_start
        for rec in self.payload_objects:
            end = max(end, self.targets[rec.oid] + rec.length)
        return end


def plan_flush(
    state: LayoutState,
    b: int,
    pending: Optional[ObjectRecord] = None,
    *,
    extra_items: Iterable[BufferItem] = (),
) -> FlushPlan:
    """Lay out the rebuilt suffix of regions ``>= b``.

    ``pending`` is an insert that is not yet in any buffer; it is counted in
    ``V(i)`` and given a slot at the end of its payload.  ``extra_items`` are
    further buffered items outside the size-class regions (the tail buffer).
    """
    eps = state.epsilon_prime
    suffix = [reg for reg in state.regions if reg.class_index >= b]
    if suffix:
        start0 = suffix[0].payload_start
    else:
        start0 = state.regions_end

    payload = [rec for reg in suffix for rec in reg.payload if rec.live]
    payload.sort(key=lambda r: (r.size_class, r.start))
    buffered = [it for reg in suffix for it in reg.buffer if isinstance(it, ObjectRecord) and it.live]
    buffered += [it for it in extra_items if isinstance(it, ObjectRecord) and it.live]
    buffered.sort(key=lambda r: r.oid)
    if pending is not None:
        buffered.append(pending)

    volume: dict[int, int] = {}
    for rec in payload:
        volume[rec.size_class] = volume.get(rec.size_class, 0) + rec.length
    for rec in buffered:
        if rec.size_class < b:
            raise InvariantFailure(f"object {rec.name} of class {rec.size_class} below boundary {b}")
        volume[rec.size_class] = volume.get(rec.size_class, 0) + rec.length

    regions: list[Region] = []
    targets: dict[int, int] = {}
    cursor = start0
    by_class: dict[int, list[ObjectRecord]] = {}
    for rec in payload:
        by_class.setdefault(rec.size_class, []).append(rec)
    staged: dict[int, list[ObjectRecord]] = {}
    for rec in buffered:
        staged.setdefault(rec.size_class, []).append(rec)
    for cls in sorted(volume):
        v = volume[cls]
        reg = Region(cls, cursor, v, buffer_capacity(v, eps))
        pos = cursor
        for rec in by_class.get(cls, []) + staged.get(cls, []):
            targets[rec.oid] = pos
            reg.payload.append(rec)
            pos += rec.length
        regions.append(reg)
        cursor = reg.end

    return FlushPlan(
        boundary_class=b,
        per_class_volume=volume,
        new_suffix_size=cursor - start0,
        suffix_start=start0,
        regions=regions,
        payload_objects=payload,
        buffered_objects=buffered,
        targets=targets,
    )


class AmortizedAllocator:
    """Cost-oblivious reallocator; inserts wait for a triggered flush to finish."""

    mode = "amortized"

    def __init__(self, epsilon_prime: Union[str, Fraction, float] = Fraction(1, 16)):
        self.state = LayoutState(epsilon_prime)
        self._observers: list[Callable[[Event], None]] = []
        self._op_events: list[MoveEvent] = []
        self.phase_id = 0
        self.flush_count = 0
        self.last_plan: Optional[FlushPlan] = None

    # -- event plumbing ---------------------------------------------------

    def subscribe(self, fn: Callable[[Event], None]) -> None:
        self._observers.append(fn)

    def _emit(self, ev: Event) -> None:
        for fn in self._observers:
            fn(ev)

    def _record_move(self, ev: MoveEvent) -> None:
        self._op_events.append(ev)
        self._emit(ev)

    def _place(self, rec: ObjectRecord, start: int, residency: Residency) -> None:
        rec.start = start
        rec.residency = residency
        self.state.records[rec.oid] = rec
        self._record_move(MoveEvent(rec.name, rec.length, None, (start, start + rec.length), self.phase_id, rec.oid))

    def _move(self, rec: ObjectRecord, start: int, residency: Residency) -> None:
        if start == rec.start:
            rec.residency = residency
            return
        src = (rec.start, rec.start + rec.length)
        rec.start = start
        rec.residency = residency
        self._record_move(MoveEvent(rec.name, rec.length, src, (start, start + rec.length), self.phase_id, rec.oid))

    def _free(self, rec: ObjectRecord) -> None:
        rec.residency = Residency.DELETED_PENDING
        self.state.records.pop(rec.oid, None)
        self.state.volume -= rec.length
        self._emit(FreeEvent(rec.name, rec.oid, rec.interval, self.phase_id))

    def _begin_op(self) -> None:
        self._op_events = []

    # -- placement rule ---------------------------------------------------

    def _eligible_region(self, cls: int, length: int) -> Optional[Region]:
        for reg in self.state.regions:
            if reg.class_index >= cls and reg.room() >= length:
                return reg
        return None

    def _has_region_at_least(self, cls: int) -> bool:
        return bool(self.state.regions) and self.state.regions[-1].class_index >= cls

    def _append_region(self, rec: ObjectRecord) -> None:
        st = self.state
        reg = Region(rec.size_class, st.regions_end, rec.length, buffer_capacity(rec.length, st.epsilon_prime))
        st.regions.append(reg)
        reg.payload.append(rec)
        self._place(rec, reg.payload_start, Residency.PAYLOAD)

    def _buffer_object(self, reg: Region, rec: ObjectRecord) -> None:
        start = reg.buffer_start + reg.buffer_used
        reg.buffer.append(rec)
        reg.buffer_used += rec.length
        self._place(rec, start, Residency.BUFFER)

    def _buffer_dummy(self, reg: Region, rec: ObjectRecord) -> None:
        start = reg.buffer_start + reg.buffer_used
        reg.buffer.append(DeleteRecord(rec.name, rec.length, rec.size_class, start))
        reg.buffer_used += rec.length

    def _new_record(self, name: str, length: int) -> ObjectRecord:
        st = self.state
        if not isinstance(name, str) or not name:
            raise InvalidArgument("object name must be a nonempty string")
        if name in st.objects:
            raise InvalidArgument(f"object {name!r} is already active")
        cls = size_class(length)
        rec = ObjectRecord(st.new_oid(), name, length, cls, -1, Residency.BUFFER)
        st.delta = max(st.delta, length)
        return rec

    # -- public operations ------------------------------------------------

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        self._begin_op()
        st = self.state
        rec = self._new_record(name, length)
        st.objects[name] = rec
        st.volume += length
        if not self._has_region_at_least(rec.size_class):
            self._append_region(rec)
            return self._op_events
        reg = self._eligible_region(rec.size_class, length)
        if reg is not None:
            self._buffer_object(reg, rec)
            return self._op_events
        b = find_boundary_class(st, rec.size_class)
        self.flush(b, pending=rec)
        return self._op_events

    def delete(self, name: str) -> list[MoveEvent]:
        self._begin_op()
        st = self.state
        rec = st.objects.pop(name, None)
        if rec is None:
            raise NotFound(f"object {name!r} is not active")
        self._free(rec)
        reg = self._eligible_region(rec.size_class, rec.length)
        if reg is not None:
            self._buffer_dummy(reg, rec)
            return self._op_events
        b = find_boundary_class(st, rec.size_class)
        self.flush(b)
        return self._op_events

    def flush(self, b: int, pending: Optional[ObjectRecord] = None) -> list[MoveEvent]:
        """Rebuild regions ``>= b`` in four steps; returns the moves made."""
        st = self.state
        plan = plan_flush(st, b, pending)
        first = len(self._op_events)
        self._emit(FlushEvent("start", b, st.volume))
        current_end = st.extent

        # 1. buffered objects to the overflow segment past the new (or old) suffix
        cursor = max(plan.suffix_end, current_end)
        for rec in plan.buffered_objects:
            if rec is pending:
                continue
            st.overflow.append(rec)
            self._move(rec, cursor, Residency.OVERFLOW)
            cursor += rec.length

        # 2. payloads packed leftward, smallest class first
        cursor = plan.suffix_start
        for rec in plan.payload_objects:
            if rec.start < cursor:
                raise InvariantFailure(f"packing would move {rec.name} rightward")
            self._move(rec, cursor, Residency.PAYLOAD)
            cursor += rec.length

        # 3. payloads unpacked to their final slots, largest class first
        for rec in reversed(plan.payload_objects):
            dest = plan.targets[rec.oid]
            if dest < rec.start:
                raise InvariantFailure(f"unpacking would move {rec.name} leftward")
            self._move(rec, dest, Residency.PAYLOAD)

        # 4. overflow objects to the end of their payloads
        for rec in plan.buffered_objects:
            dest = plan.targets[rec.oid]
            if rec is pending:
                self._place(rec, dest, Residency.PAYLOAD)
            else:
                self._move(rec, dest, Residency.PAYLOAD)
        st.overflow.clear()

        st.regions = [reg for reg in st.regions if reg.class_index < b] + plan.regions
        self.flush_count += 1
        plan.move_list = self._op_events[first:]
        self.last_plan = plan
        self._emit(FlushEvent("end", b, st.volume))
        return plan.move_list
