"""Checkpoint-aware reallocator.

Writes may not touch cells freed since the last completed checkpoint, and no
move may overlap its own source.  Flushes therefore run in phases separated by
checkpoints, staging buffered objects far enough right (``B + delta`` past the
larger of the old and new structure ends) that every phase's sources and
destinations are disjoint.

Operations come in two flavours: ``insert``/``delete`` complete immediately,
granting every checkpoint they need, while ``insert_steps``/``delete_steps``
are generators that yield ``"checkpoint"`` each time the operation must wait
for one.  The harness uses the latter to model system-initiated checkpoints.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Generator, Iterator, Optional, Union

from .amortized import AmortizedAllocator, FlushPlan, find_boundary_class, plan_flush
from .core import (
    CheckpointEvent,
    FlushEvent,
    Interval,
    InvalidArgument,
    InvariantFailure,
    MoveEvent,
    NotFound,
    ObjectRecord,
    Residency,
)

MOVE = "move"
CKPT = "ckpt"
DRAIN = "drain"

Step = tuple[str, int]
OpSteps = Generator[str, None, list[MoveEvent]]


def run_to_completion(steps: OpSteps) -> list[MoveEvent]:
    """Drive an operation generator, granting every checkpoint it asks for."""
    while True:
        try:
            next(steps)
        except StopIteration as stop:
            return stop.value


class CheckpointLedger:
    """Freed-cell bookkeeping between checkpoints plus checkpoint counters."""

    def __init__(self) -> None:
        self.current_phase = 0
        self._starts: list[int] = []
        self._ends: list[int] = []
        self.dirty_high = 0
        self.checkpoints_this_flush = 0
        self.checkpoints_per_op: dict[int, int] = {}
        self.flush_checkpoints: list[int] = []
        self.total = 0

    @property
    def freed_since_checkpoint(self) -> list[Interval]:
        return list(zip(self._starts, self._ends))

    def free(self, interval: Interval) -> None:
        s, e = interval
        i = bisect_right(self._starts, s)
        self._starts.insert(i, s)
        self._ends.insert(i, e)
        self.dirty_high = max(self.dirty_high, e)

    @property
    def dirty(self) -> bool:
        return bool(self._starts)

    def conflicts(self, interval: Interval) -> Optional[Interval]:
        s, e = interval
        i = bisect_right(self._starts, s) - 1
        if i >= 0 and self._ends[i] > s:
            return (self._starts[i], self._ends[i])
        if i + 1 < len(self._starts) and self._starts[i + 1] < e:
            return (self._starts[i + 1], self._ends[i + 1])
        return None

    def checkpoint(self, op_index: Optional[int]) -> None:
        self._starts.clear()
        self._ends.clear()
        self.dirty_high = 0
        self.current_phase += 1
        self.total += 1
        self.checkpoints_this_flush += 1
        if op_index is not None:
            self.checkpoints_per_op[op_index] = self.checkpoints_per_op.get(op_index, 0) + 1


@dataclass
class PhasedFlushPlan:
    L: int
    L_prime: int
    B: int
    delta: int
    staging_start: int
    layout: FlushPlan
    phases: list[list[MoveEvent]] = field(default_factory=list)


class CheckpointedAllocator(AmortizedAllocator):
    mode = "checkpointed"

    def __init__(self, epsilon_prime: Union[str, Fraction, float] = Fraction(1, 16), *, delta_cap: Optional[int] = None):
        super().__init__(epsilon_prime)
        self.ledger = CheckpointLedger()
        self.delta_cap = delta_cap
        self.op_index = -1
        self.last_op_checkpoints = 0
        self.last_phased_plan: Optional[PhasedFlushPlan] = None
        self._phase_moves: list[MoveEvent] = []
        self._in_flush = False

    # -- discipline-checked writes -----------------------------------------

    def _check_write(self, rec: ObjectRecord, dest: Interval) -> None:
        hit = self.ledger.conflicts(dest)
        if hit is not None:
            raise InvariantFailure(f"{rec.name} written to {dest}, overlapping {hit} freed since the last checkpoint")

    def _place(self, rec: ObjectRecord, start: int, residency: Residency) -> None:
        self._check_write(rec, (start, start + rec.length))
        super()._place(rec, start, residency)

    def _move(self, rec: ObjectRecord, start: int, residency: Residency) -> None:
        if start == rec.start:
            rec.residency = residency
            return
        src = rec.interval
        dest = (start, start + rec.length)
        if dest[0] < src[1] and src[0] < dest[1]:
            raise InvariantFailure(f"{rec.name} moved from {src} to overlapping {dest}")
        self._check_write(rec, dest)
        super()._move(rec, start, residency)
        self.ledger.free(src)
        self._phase_moves.append(self._op_events[-1])

    def _free(self, rec: ObjectRecord) -> None:
        super()._free(rec)
        self.ledger.free(rec.interval)

    def _checkpoint(self) -> None:
        self.ledger.checkpoint(self.op_index)
        self._emit(CheckpointEvent(self.phase_id))
        self.phase_id += 1
        self.last_op_checkpoints += 1
        if self.last_phased_plan is not None and self._in_flush:
            self.last_phased_plan.phases.append(self._phase_moves)
        self._phase_moves = []

    def system_checkpoint(self) -> None:
        """A checkpoint initiated outside any operation (trace ``C`` events)."""
        self.ledger.checkpoint(None)
        self._emit(CheckpointEvent(self.phase_id))
        self.phase_id += 1

    def _begin_op(self) -> None:
        super()._begin_op()
        self.op_index += 1
        self.last_op_checkpoints = 0

    @property
    def flush_in_progress(self) -> bool:
        return self._in_flush

    def _dirty_extent(self) -> int:
        return max(self.state.extent, self.ledger.dirty_high)

    # -- operations -------------------------------------------------------

    def insert(self, name: str, length: int) -> list[MoveEvent]:
        return run_to_completion(self.insert_steps(name, length))

    def delete(self, name: str) -> list[MoveEvent]:
        return run_to_completion(self.delete_steps(name))

    def insert_steps(self, name: str, length: int) -> OpSteps:
        self._begin_op()
        if self.delta_cap is not None and length > self.delta_cap:
            raise InvalidArgument(f"length {length} exceeds the configured cap {self.delta_cap}")
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
        L = self._dirty_extent()
        self._buffer_object(st.regions[-1], rec)  # past capacity; the flush restores it
        b = find_boundary_class(st, rec.size_class)
        yield from self._drive(self.phased_flush(b, L, length))
        return self._op_events

    def delete_steps(self, name: str) -> OpSteps:
        self._begin_op()
        st = self.state
        rec = st.objects.pop(name, None)
        if rec is None:
            raise NotFound(f"object {name!r} is not active")
        L = self._dirty_extent()
        self._free(rec)
        reg = self._eligible_region(rec.size_class, rec.length)
        if reg is not None:
            self._buffer_dummy(reg, rec)
            return self._op_events
        b = find_boundary_class(st, rec.size_class)
        yield from self._drive(self.phased_flush(b, L, 0))
        return self._op_events

    def _drive(self, steps: Iterator[Step]) -> Generator[str, None, None]:
        for kind, _ in steps:
            if kind == CKPT:
                yield "checkpoint"

    # -- the phased flush -------------------------------------------------

    def _extra_buffered(self) -> list:
        return []

    def _extra_buffer_cap(self) -> int:
        return 0

    def _new_tail_cap(self) -> int:
        return 0

    def _install(self, plan: FlushPlan, b: int) -> None:
        st = self.state
        st.regions = [reg for reg in st.regions if reg.class_index < b] + plan.regions

    def _on_staging_planned(self, log_start: int) -> None:
        pass

    def phased_flush(self, b: int, L: int, trigger_length: int) -> Iterator[Step]:
        """Generator of announced steps; each step is applied when resumed.

        ``L`` is the structure end before the triggering operation and
        ``trigger_length`` the size of a triggering insert (0 for a delete).
        """
        st = self.state
        plan = plan_flush(st, b, extra_items=self._extra_buffered())
        B = sum(reg.buffer_cap for reg in st.regions if reg.class_index >= b) + self._extra_buffer_cap()
        new_end = plan.suffix_end + self._new_tail_cap()
        L_prime = new_end - trigger_length
        delta = st.delta
        # the last old payload object must end B + delta before the staging
        # point, otherwise unpacking could overlap its own packed copy
        T = max(L, L_prime, plan.last_payload_end()) + B + delta
        phased = PhasedFlushPlan(L, L_prime, B, delta, T, plan)
        self.last_phased_plan = phased
        self.ledger.checkpoints_this_flush = 0
        self._in_flush = True
        self._phase_moves = []
        staged_volume = sum(rec.length for rec in plan.buffered_objects)
        self._on_staging_planned(T + staged_volume)
        self._emit(FlushEvent("start", b, st.volume))

        # 1. stage buffered objects past T; nothing there was ever freed
        cursor = T
        for rec in plan.buffered_objects:
            yield MOVE, rec.length
            st.overflow.append(rec)
            self._move(rec, cursor, Residency.OVERFLOW)
            cursor += rec.length
        if plan.buffered_objects:
            yield CKPT, 0
            self._checkpoint()

        # 2. pack payloads against T, largest class first, in B+1..B+delta phases
        cursor = T
        batch = 0
        for rec in reversed(plan.payload_objects):
            cursor -= rec.length
            if rec.start == cursor:
                continue
            yield MOVE, rec.length
            self._move(rec, cursor, Residency.PAYLOAD)
            batch += rec.length
            if batch > B:
                yield CKPT, 0
                self._checkpoint()
                batch = 0
        if batch:
            yield CKPT, 0
            self._checkpoint()

        # 3. unpack to final slots, smallest class first, same phasing
        batch = 0
        for rec in plan.payload_objects:
            dest = plan.targets[rec.oid]
            if rec.start == dest:
                continue
            yield MOVE, rec.length
            self._move(rec, dest, Residency.PAYLOAD)
            batch += rec.length
            if batch > B:
                yield CKPT, 0
                self._checkpoint()
                batch = 0
        if batch:
            yield CKPT, 0
            self._checkpoint()

        # 4. staged objects to the ends of their payloads
        for rec in plan.buffered_objects:
            yield MOVE, rec.length
            self._move(rec, plan.targets[rec.oid], Residency.PAYLOAD)
        st.overflow.clear()
        self._install(plan, b)
        # also covers flushes that moved nothing but dropped deleted objects
        if self.ledger.dirty:
            yield CKPT, 0
            self._checkpoint()

        yield from self._after_placement()
        self._finish_flush(b)

    def _after_placement(self) -> Iterator[Step]:
        return iter(())

    def _finish_flush(self, b: int) -> None:
        self.ledger.flush_checkpoints.append(self.ledger.checkpoints_this_flush)
        self._in_flush = False
        self.flush_count += 1
        self.last_plan = self.last_phased_plan.layout if self.last_phased_plan else None
        self._emit(FlushEvent("end", b, self.state.volume))
