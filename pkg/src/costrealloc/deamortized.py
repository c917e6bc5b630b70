"""Reallocator with worst-case bounded work per operation.

A tail buffer after the last region catches whatever the size-class buffers
cannot.  Only an overflowing tail starts a flush, and a flush advances in
slices: each update pays for ``(4 / eps') * w`` cells of flush work.  Updates
that arrive while a flush is running go into an append-only log past the
staging area and are replayed into the fresh buffers once the layout is in
place.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterator, Optional, Union

from .amortized import FlushPlan, find_boundary_class
from .checkpointed import CKPT, DRAIN, CheckpointedAllocator, OpSteps, Step
from .core import (
    DeleteRecord,
    FlushLog,
    InvalidArgument,
    InvariantFailure,
    LogEntry,
    NotFound,
    ObjectRecord,
    Residency,
    TailBuffer,
    buffer_capacity,
)


class DeamortizedAllocator(CheckpointedAllocator):
    mode = "deamortized"

    def __init__(
        self,
        epsilon_prime: Union[str, Fraction, float] = Fraction(1, 16),
        *,
        delta_cap: Optional[int] = None,
        work_factor: Union[int, Fraction] = 4,
    ):
        super().__init__(epsilon_prime, delta_cap=delta_cap)
        self.state.tail = TailBuffer(0, 0)
        self.work_factor = Fraction(work_factor)
        self.flush_volume: Optional[int] = None  # V_f of the last flush started
        self.chained_flushes = 0
        self.last_op_work = 0
        self.last_op_budget = Fraction(0)
        self.logged_volume = 0  # volume logged during the running flush
        self.max_logged_fraction = Fraction(0)
        self._flush_gen: Optional[Iterator[Step]] = None
        self._pending: Optional[Step] = None
        self._chain: Optional[LogEntry] = None

    @property
    def flush_in_progress(self) -> bool:
        return self._flush_gen is not None

    def budget(self, length: int) -> Fraction:
        return self.work_factor / self.state.epsilon_prime * length

    def _begin_op(self) -> None:
        super()._begin_op()
        self.last_op_work = 0
        self.last_op_budget = Fraction(0)

    # -- tail handling ----------------------------------------------------

    def _refresh_tail(self) -> None:
        st = self.state
        st.tail.start = st.regions_end
        if self.flush_volume is None:
            st.tail.capacity = buffer_capacity(st.volume, st.epsilon_prime)

    def _tail_push(self, rec: ObjectRecord, *, move: bool = False) -> None:
        tail = self.state.tail
        pos = tail.start + tail.used
        tail.items.append(rec)
        tail.used += rec.length
        if move:
            self._move(rec, pos, Residency.BUFFER)
        else:
            self._place(rec, pos, Residency.BUFFER)

    def _tail_dummy(self, rec: ObjectRecord) -> None:
        tail = self.state.tail
        tail.items.append(DeleteRecord(rec.name, rec.length, rec.size_class, tail.start + tail.used))
        tail.used += rec.length

    # -- hooks used by the phased flush -------------------------------------

    def _extra_buffered(self) -> list:
        return list(self.state.tail.items)

    def _extra_buffer_cap(self) -> int:
        return self.state.tail.capacity

    def _new_tail_cap(self) -> int:
        return buffer_capacity(self.flush_volume, self.state.epsilon_prime)

    def _install(self, plan: FlushPlan, b: int) -> None:
        super()._install(plan, b)
        st = self.state
        st.tail = TailBuffer(st.regions_end, self._new_tail_cap())

    def _on_staging_planned(self, log_start: int) -> None:
        self.state.log = FlushLog(log_start, log_start)
        self.logged_volume = 0

    def _after_placement(self) -> Iterator[Step]:
        st = self.state
        log = st.log
        while log.drained < len(log.entries):
            entry = log.entries[log.drained]
            yield DRAIN, entry.length
            log.drained += 1
            if not self._apply_entry(entry):
                if log.drained < len(log.entries):
                    raise InvariantFailure("a logged update other than the last one found no buffer room")
                self._chain = entry
                break
        yield CKPT, 0
        self._checkpoint()
        st.log = None

    def _apply_entry(self, entry: LogEntry) -> bool:
        """Replay one logged update; False when no buffer has room for it."""
        rec = entry.record
        if entry.kind == "I":
            reg = self._eligible_region(rec.size_class, rec.length)
            if reg is not None:
                pos = reg.buffer_start + reg.buffer_used
                reg.buffer.append(rec)
                reg.buffer_used += rec.length
                self._move(rec, pos, Residency.BUFFER)
                return True
            if self.state.tail.room() >= rec.length:
                self._tail_push(rec, move=True)
                return True
            return False
        self._free(rec)
        reg = self._eligible_region(rec.size_class, rec.length)
        if reg is not None:
            self._buffer_dummy(reg, rec)
            return True
        if self.state.tail.room() >= rec.length:
            self._tail_dummy(rec)
            return True
        return False

    # -- flush driving ------------------------------------------------------

    def _start_flush(self, pending_class: int, L: int, trigger_length: int) -> None:
        st = self.state
        self.flush_volume = st.volume
        b = find_boundary_class(st, pending_class)
        self._flush_gen = self.phased_flush(b, L, trigger_length)
        self._fetch()

    def _fetch(self) -> None:
        try:
            self._pending = next(self._flush_gen)
        except StopIteration:
            self._flush_gen = None
            self._pending = None
            if self._chain is not None:
                self._start_chained()

    def _start_chained(self) -> None:
        entry, self._chain = self._chain, None
        self.chained_flushes += 1
        rec = entry.record
        if entry.kind == "I":
            L = max(self._dirty_extent(), rec.end)
            self._tail_push(rec, move=True)  # past capacity, like any trigger
            self._start_flush(rec.size_class, L, rec.length)
        else:
            self._start_flush(rec.size_class, self._dirty_extent(), 0)

    def _advance(self, budget: Fraction) -> OpSteps:
        self.last_op_budget += budget
        work = 0
        while self._flush_gen is not None:
            kind, volume = self._pending
            if kind == CKPT:
                yield "checkpoint"
            elif work >= budget:
                break
            self._fetch()
            work += volume
        self.last_op_work += work

    def _log(self, kind: str, rec: ObjectRecord) -> None:
        st = self.state
        st.log.entries.append(LogEntry(kind, rec))
        self.logged_volume += rec.length
        if self.flush_volume:
            self.max_logged_fraction = max(self.max_logged_fraction, Fraction(self.logged_volume, self.flush_volume))

    # -- operations ---------------------------------------------------------

    def insert_steps(self, name: str, length: int) -> OpSteps:
        self._begin_op()
        if self.delta_cap is not None and length > self.delta_cap:
            raise InvalidArgument(f"length {length} exceeds the configured cap {self.delta_cap}")
        st = self.state
        rec = self._new_record(name, length)
        st.objects[name] = rec
        st.volume += length
        if self.flush_in_progress:
            log = st.log
            self._place(rec, log.cursor, Residency.LOG)
            log.cursor += length
            self._log("I", rec)
            yield from self._advance(self.budget(length))
            return self._op_events
        self._refresh_tail()
        tail = st.tail
        if not self._has_region_at_least(rec.size_class) and tail.used == 0:
            self._append_region(rec)
            self._refresh_tail()
            return self._op_events
        reg = self._eligible_region(rec.size_class, length)
        if reg is not None:
            self._buffer_object(reg, rec)
            return self._op_events
        if tail.room() >= length:
            self._tail_push(rec)
            return self._op_events
        L = self._dirty_extent()
        self._tail_push(rec)
        self._start_flush(rec.size_class, L, length)
        yield from self._advance(self.budget(length))
        return self._op_events

    def delete_steps(self, name: str) -> OpSteps:
        self._begin_op()
        st = self.state
        rec = st.objects.pop(name, None)
        if rec is None:
            raise NotFound(f"object {name!r} is not active")
        if self.flush_in_progress:
            # the object stays physically present until the log is replayed
            self._log("D", rec)
            yield from self._advance(self.budget(rec.length))
            return self._op_events
        L = self._dirty_extent()
        self._free(rec)
        self._refresh_tail()
        reg = self._eligible_region(rec.size_class, rec.length)
        if reg is not None:
            self._buffer_dummy(reg, rec)
            return self._op_events
        if st.tail.room() >= rec.length:
            self._tail_dummy(rec)
            return self._op_events
        self._start_flush(rec.size_class, L, 0)
        yield from self._advance(self.budget(rec.length))
        return self._op_events

    def finish_flush(self) -> OpSteps:
        """Run any in-progress flush to completion (not part of the update path)."""
        yield from self._advance(Fraction(10**18))
