"""Cost-specific reference strategies used as foils.

They publish the same ``MoveEvent`` stream as the real allocators and expose
a minimal state (objects, records, extent) so the harness can meter them.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from typing import Callable

from ..core import Event, FreeEvent, InvalidArgument, MoveEvent, NotFound, ObjectRecord, Residency, size_class


class BaselineState:
    def __init__(self):
        self.objects: dict[str, ObjectRecord] = {}
        self.records: dict[int, ObjectRecord] = {}
        self.regions: list = []
        self.tail = None
        self.log = None
        self.overflow: list = []
        self.volume = 0
        self.delta = 0
        self.end = 0
        self._next = 0

    @property
    def extent(self) -> int:
        return self.end

    @property
    def footprint(self) -> int:
        return max((r.end for r in self.records.values()), default=0)


class Baseline:
    mode = "baseline"
    flush_in_progress = False

    def __init__(self):
        self.state = BaselineState()
        self._observers: list[Callable[[Event], None]] = []
        self._op_events: list[MoveEvent] = []
        self.flush_count = 0

    def subscribe(self, fn: Callable[[Event], None]) -> None:
        self._observers.append(fn)

    def _emit(self, ev) -> None:
        for fn in self._observers:
            fn(ev)

    def _new(self, name: str, length: int) -> ObjectRecord:
        st = self.state
        if name in st.objects:
            raise InvalidArgument(f"object {name!r} is already active")
        st._next += 1
        rec = ObjectRecord(st._next, name, length, size_class(length), -1, Residency.PAYLOAD)
        st.objects[name] = rec
        st.volume += length
        st.delta = max(st.delta, length)
        return rec

    def _place(self, rec: ObjectRecord, start: int) -> None:
        rec.start = start
        self.state.records[rec.oid] = rec
        ev = MoveEvent(rec.name, rec.length, None, (start, start + rec.length), 0, rec.oid)
        self._op_events.append(ev)
        self._emit(ev)

    def _move(self, rec: ObjectRecord, start: int) -> None:
        if start == rec.start:
            return
        ev = MoveEvent(rec.name, rec.length, rec.interval, (start, start + rec.length), 0, rec.oid)
        rec.start = start
        self._op_events.append(ev)
        self._emit(ev)

    def _remove(self, name: str) -> ObjectRecord:
        st = self.state
        rec = st.objects.pop(name, None)
        if rec is None:
            raise NotFound(f"object {name!r} is not active")
        st.records.pop(rec.oid, None)
        st.volume -= rec.length
        self._emit(FreeEvent(rec.name, rec.oid, rec.interval, 0))
        return rec

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        raise NotImplementedError

    def delete(self, name: str) -> list[MoveEvent]:
        raise NotImplementedError


class FirstFit(Baseline):
    """Never moves anything; new objects take the lowest hole that fits."""

    mode = "baseline:first-fit"

    def __init__(self):
        super().__init__()
        self.holes: list[tuple[int, int]] = []  # sorted, disjoint, below state.end

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        self._op_events = []
        rec = self._new(name, length)
        st = self.state
        for i, (s, e) in enumerate(self.holes):
            if e - s >= length:
                if e - s == length:
                    del self.holes[i]
                else:
                    self.holes[i] = (s + length, e)
                self._place(rec, s)
                return self._op_events
        self._place(rec, st.end)
        st.end += length
        return self._op_events

    def delete(self, name: str) -> list[MoveEvent]:
        self._op_events = []
        rec = self._remove(name)
        s, e = rec.interval
        i = bisect_left(self.holes, (s, e))
        if i > 0 and self.holes[i - 1][1] == s:
            i -= 1
            s = self.holes[i][0]
            del self.holes[i]
        if i < len(self.holes) and self.holes[i][0] == e:
            e = self.holes[i][1]
            del self.holes[i]
        if e == self.state.end:
            self.state.end = s
        else:
            insort(self.holes, (s, e))
        return self._op_events


class LogCompact(Baseline):
    """Bump allocation; compact everything left once extent reaches ``2V``."""

    mode = "baseline:log-compact"

    def __init__(self):
        super().__init__()
        self.order: list[ObjectRecord] = []  # address order, may hold deleted records
        self.compactions = 0

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        self._op_events = []
        rec = self._new(name, length)
        self._place(rec, self.state.end)
        self.order.append(rec)
        self.state.end += length
        return self._op_events

    def delete(self, name: str) -> list[MoveEvent]:
        self._op_events = []
        rec = self._remove(name)
        rec.residency = Residency.DELETED_PENDING
        st = self.state
        if st.end >= 2 * st.volume:
            self.compact()
        return self._op_events

    def compact(self) -> None:
        self.compactions += 1
        cursor = 0
        live = [r for r in self.order if r.live]
        for rec in live:
            self._move(rec, cursor)
            cursor += rec.length
        self.order = live
        self.state.end = cursor


class GapClasses(Baseline):
    """Sizes rounded up to powers of two, one block of slots per class in
    increasing order.  An insert takes the free space after its class block
    or displaces the first object of the next nonempty larger class, which is
    then reinserted the same way."""

    mode = "baseline:gap-classes"

    def __init__(self):
        super().__init__()
        self.classes: list[int] = []  # slot exponents in increasing order
        self.start: dict[int, int] = {}
        self.members: dict[int, list[ObjectRecord]] = {}
        self.displacements = 0

    @staticmethod
    def slot_exponent(length: int) -> int:
        return (length - 1).bit_length()

    def _block_end(self, c: int) -> int:
        return self.start[c] + len(self.members[c]) * (1 << c)

    def _ensure_class(self, c: int) -> None:
        if c in self.start:
            return
        i = bisect_left(self.classes, c)
        if i > 0:
            pos = self._block_end(self.classes[i - 1])
        else:
            pos = 0
        self.classes.insert(i, c)
        self.start[c] = pos
        self.members[c] = []

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        self._op_events = []
        rec = self._new(name, length)
        self._insert(rec, fresh=True)
        return self._op_events

    def _insert(self, rec: ObjectRecord, fresh: bool) -> None:
        while rec is not None:
            c = self.slot_exponent(rec.length)
            self._ensure_class(c)
            slot = 1 << c
            end = self._block_end(c)
            i = bisect_left(self.classes, c) + 1
            empties = []
            while i < len(self.classes) and not self.members[self.classes[i]]:
                empties.append(self.classes[i])
                i += 1
            victim = None
            if i < len(self.classes) and self.start[self.classes[i]] - end < slot:
                # displace the first object of the next nonempty larger class
                k = self.classes[i]
                victim = self.members[k].pop(0)
                self.start[k] += 1 << k
                self.displacements += 1
            for e in empties:
                self.start[e] = end + slot
            self.members[c].append(rec)
            if fresh:
                self._place(rec, end)
                fresh = False
            else:
                self._move(rec, end)
            self.state.end = max(self.state.end, end + slot)
            rec = victim

    def delete(self, name: str) -> list[MoveEvent]:
        self._op_events = []
        rec = self._remove(name)
        c = self.slot_exponent(rec.length)
        block = self.members[c]
        i = block.index(rec)
        last = block.pop()
        if last is not rec:
            block[i] = last
            self._move(last, self.start[c] + i * (1 << c))
        top = self.classes[-1]
        self.state.end = self._block_end(top) if self.members[top] else max(
            (self._block_end(k) for k in self.classes if self.members[k]), default=0
        )
        return self._op_events


BASELINES = {
    "baseline:first-fit": FirstFit,
    "baseline:log-compact": LogCompact,
    "baseline:gap-classes": GapClasses,
}
