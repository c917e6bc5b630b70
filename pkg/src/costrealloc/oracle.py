"""Independent checker for allocator runs.

The oracle watches the raw event stream and keeps its own occupancy picture
(one owner id and one size class per cell, plus a freed-since-checkpoint mask)
in numpy arrays.  It shares no placement logic with the allocators: it only
reads their published layout (region boundaries, tail, log) to decide which
cells are supposed to hold which classes, and compares every object position
against its own shadow.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import CheckpointEvent, FlushEvent, FreeEvent, MoveEvent

CHECKPOINT_MODES = ("checkpointed", "deamortized")


@dataclass(frozen=True)
class Verdict:
    op_index: int
    invariant: str
    detail: str

    def line(self) -> str:
        return f"op {self.op_index}: {self.invariant}: {self.detail}"


def class_of(length: int) -> int:
    i = 0
    while (1 << i) <= length:
        i += 1
    return i


@dataclass
class _Shadow:
    name: str
    start: int
    length: int
    cls: int


@dataclass
class OracleStats:
    ops: int = 0
    max_boundary_ratio: Fraction = Fraction(0)  # extent / V at flush-free boundaries
    max_transient_excess: Fraction = Fraction(0)  # (peak - delta) / V_instant
    max_op_moved: int = 0
    max_op_moved_slack: Fraction = Fraction(-1)  # moved - (4/eps') w, must stay <= delta
    moved_volume_total: int = 0
    flushes: int = 0
    max_log_fraction: Fraction = Fraction(0)  # logged volume / (eps' V_f)
    extent_samples: list = field(default_factory=list)


class Oracle:
    """Shadow occupancy plus per-operation invariant checks.

    Subscribe :meth:`on_event` to an allocator, and bracket each client
    operation with :meth:`begin_op` / :meth:`end_op`.
    """

    def __init__(self, mode: str, epsilon_prime, *, work_factor: int = 4, sample_every: int = 0):
        self.mode = mode
        self.eps = Fraction(epsilon_prime)
        self.work_factor = Fraction(work_factor)
        self.checkpointed = mode in CHECKPOINT_MODES
        self.segments = not mode.startswith("baseline")
        size = 1 << 12
        self.owner = np.zeros(size, dtype=np.int32)
        self.cls = np.zeros(size, dtype=np.int8)
        self.freed = np.zeros(size, dtype=bool)
        self.freed_lo = size
        self.freed_hi = 0
        self.high = 0  # no cell at or past this address has ever been written
        self.objects: dict[int, _Shadow] = {}
        self.names: dict[str, int] = {}  # client name -> oid
        self.client_deleted: dict[int, int] = {}  # oid -> length, deleted by the client but still present
        self.trace_volume = 0
        self.shadow_volume = 0
        self.delta = 0
        self.verdicts: list[Verdict] = []
        self.stats = OracleStats()
        self.sample_every = sample_every
        self.op_index = -1
        self._op: Optional[tuple] = None
        self._touched: set[int] = set()
        self._moved = 0
        self._peak = 0
        self._flush_ended: list[int] = []
        self._in_flush = False
        self._flush_vf = 0
        self._logged = 0

    # -- helpers ----------------------------------------------------------

    def _flag(self, invariant: str, detail: str) -> None:
        self.verdicts.append(Verdict(self.op_index, invariant, detail))

    def _ensure(self, end: int) -> None:
        if end <= len(self.owner):
            return
        size = max(end, 2 * len(self.owner))
        for attr in ("owner", "cls", "freed"):
            old = getattr(self, attr)
            new = np.zeros(size, dtype=old.dtype)
            new[: len(old)] = old
            setattr(self, attr, new)

    def _mark_freed(self, s: int, e: int) -> None:
        if self.checkpointed:
            self.freed[s:e] = True
            self.freed_lo = min(self.freed_lo, s)
            self.freed_hi = max(self.freed_hi, e)

    # -- event stream -----------------------------------------------------

    def on_event(self, ev) -> None:
        if isinstance(ev, MoveEvent):
            self._on_move(ev)
        elif isinstance(ev, FreeEvent):
            self._on_free(ev)
        elif isinstance(ev, CheckpointEvent):
            if self.freed_hi > self.freed_lo:
                self.freed[self.freed_lo:self.freed_hi] = False
            self.freed_lo, self.freed_hi = len(self.freed), 0
        elif isinstance(ev, FlushEvent):
            if ev.stage == "start":
                self.stats.flushes += 1
                self._in_flush = True
                self._flush_vf = self.shadow_volume
                self._logged = 0
            else:
                self._in_flush = False
                self._flush_ended.append(ev.boundary_class)

    def _on_move(self, ev: MoveEvent) -> None:
        d0, d1 = ev.destination
        if d1 - d0 != ev.length or ev.length < 1 or d0 < 0:
            self._flag("interval length", f"{ev.name} destination {ev.destination} for length {ev.length}")
            return
        self._ensure(d1)
        oid = ev.oid
        sh = self.objects.get(oid)
        if ev.source is None:
            if sh is not None:
                self._flag("shadow divergence", f"{ev.name} placed again while present at {sh.start}")
                return
            sh = _Shadow(ev.name, d0, ev.length, class_of(ev.length))
            self.objects[oid] = sh
            self.shadow_volume += ev.length
            self.delta = max(self.delta, ev.length)
        else:
            s0, s1 = ev.source
            if sh is None or sh.start != s0 or sh.length != s1 - s0:
                where = None if sh is None else (sh.start, sh.start + sh.length)
                self._flag("shadow divergence", f"{ev.name} moved from {ev.source}, shadow has {where}")
                return
            if self.checkpointed and s0 < d1 and d0 < s1:
                self._flag("phase disjointness", f"{ev.name} moved from {ev.source} onto overlapping {ev.destination}")
            self.owner[s0:s1] = 0
            self.cls[s0:s1] = 0
            self._mark_freed(s0, s1)
            self._moved += ev.length
        if self.owner[d0:d1].any():
            others = sorted({int(x) for x in np.unique(self.owner[d0:d1]) if x})
            names = [self.objects[o].name if o in self.objects else str(o) for o in others]
            self._flag("disjointness", f"{ev.name} written to {ev.destination} over {names}")
        if self.checkpointed and d0 < self.freed_hi and self.freed[d0:d1].any():
            self._flag("freed-cell discipline", f"{ev.name} written to {ev.destination}, freed since the last checkpoint")
        self.owner[d0:d1] = oid
        self.cls[d0:d1] = sh.cls
        sh.start = d0
        self._touched.add(oid)
        self.high = max(self.high, d1)
        self._peak = max(self._peak, d1)

    def _on_free(self, ev: FreeEvent) -> None:
        sh = self.objects.pop(ev.oid, None)
        s0, s1 = ev.interval
        if sh is None or sh.start != s0 or sh.length != s1 - s0:
            self._flag("shadow divergence", f"free of {ev.name} at {ev.interval} does not match shadow")
            return
        self.owner[s0:s1] = 0
        self.cls[s0:s1] = 0
        self._mark_freed(s0, s1)
        self.shadow_volume -= sh.length
        self.client_deleted.pop(ev.oid, None)
        self._touched.discard(ev.oid)

    # -- operation brackets -------------------------------------------------

    def begin_op(self, kind: str, name: str, length: int = 0, allocator=None) -> None:
        self.op_index += 1
        self._touched = set()
        self._moved = 0
        self._flush_ended = []
        extent = allocator.state.extent if allocator is not None else self.high
        self._peak = extent
        self._v_start = self.trace_volume
        if kind == "I":
            w = length
            self.trace_volume += w
        else:
            oid = self.names.pop(name, None)
            if oid is None or oid not in self.objects:
                self._flag("shadow divergence", f"client delete of {name!r}, unknown to the shadow")
                w = 0
            else:
                w = self.objects[oid].length
                self.trace_volume -= w
                self.client_deleted[oid] = w
        if self._in_flush:
            self._logged += w
        self._op = (kind, name, w)

    def end_op(self, allocator) -> list[Verdict]:
        first = len(self.verdicts)
        kind, name, w = self._op
        st = allocator.state
        if kind == "I":
            rec = st.objects.get(name)
            if rec is None:
                self._flag("shadow divergence", f"insert of {name!r} not visible in the allocator")
            else:
                self.names[name] = rec.oid
                if rec.oid not in self.objects:
                    self._flag("shadow divergence", f"insert of {name!r} never placed")
        flushing = bool(getattr(allocator, "flush_in_progress", False))

        # positions of everything this op touched agree with the allocator
        for oid in self._touched:
            sh = self.objects.get(oid)
            rec = st.records.get(oid)
            if sh is None:
                continue
            if rec is None or rec.start != sh.start or rec.length != sh.length:
                self._flag("shadow divergence", f"{sh.name}: allocator {None if rec is None else rec.interval}, shadow {(sh.start, sh.start + sh.length)}")
        if len(st.records) != len(self.objects):
            self._flag("shadow divergence", f"allocator holds {len(st.records)} objects, shadow {len(self.objects)}")

        # volume ledgers
        pending = sum(self.client_deleted.values())
        if self.shadow_volume != self.trace_volume + pending:
            self._flag("volume ledger", f"shadow {self.shadow_volume} vs trace {self.trace_volume} + pending {pending}")
        if not flushing and pending:
            self._flag("volume ledger", f"{pending} cells deleted by the client still present with no flush running")

        extent = st.extent
        self._peak = max(self._peak, extent)
        if self.high > extent and self.owner[extent:self.high].any():
            hit = extent + int(np.flatnonzero(self.owner[extent:self.high])[0])
            self._flag("extent bound", f"cell {hit} occupied past extent {extent}")

        if not flushing:
            self._check_layout(st)
        else:
            self._check_flushing(st)
        if self._flush_ended:
            self._check_rebuilt(st, min(self._flush_ended))

        self._op_stats(allocator, st, extent, flushing, w)
        self._op = None
        return self.verdicts[first:]

    # -- layout checks ------------------------------------------------------

    def _classify(self, st, start: int):
        """('payload'|'buffer', class) of the region containing ``start``."""
        regions = st.regions
        starts = [r.payload_start for r in regions]
        k = bisect_right(starts, start) - 1
        if k < 0:
            return None
        reg = regions[k]
        if start < reg.payload_start + reg.payload_len:
            return "payload", reg.class_index
        if start < reg.payload_start + reg.payload_len + reg.buffer_cap:
            return "buffer", reg.class_index
        return None

    def _check_object(self, st, sh: _Shadow, flushing: bool) -> None:
        if not self.segments:
            return
        place = self._classify(st, sh.start)
        end = sh.start + sh.length
        tail = st.tail
        if place is None:
            if tail is not None and tail.start <= sh.start:
                if not flushing and end > tail.start + max(tail.capacity, tail.used):
                    self._flag("buffer bounds", f"{sh.name} {(sh.start, end)} past the tail")
                return
            if flushing:
                return
            self._flag("buffer bounds", f"{sh.name} at {(sh.start, end)} lies in no segment")
            return
        seg, ci = place
        if seg == "payload":
            if sh.cls != ci:
                self._flag("payload purity", f"{sh.name} (class {sh.cls}) in payload {ci}")
        elif sh.cls > ci:
            self._flag("buffer class bound", f"{sh.name} (class {sh.cls}) in buffer {ci}")

    def _check_layout(self, st) -> None:
        if st.overflow:
            self._flag("overflow emptiness", f"{len(st.overflow)} objects in overflow at an operation boundary")
        if st.log is not None:
            self._flag("log emptiness", "update log open with no flush running")
        if st.tail is not None and st.tail.used > st.tail.capacity:
            self._flag("tail bound", f"tail holds {st.tail.used} > {st.tail.capacity}")
        for reg in st.regions:
            if reg.buffer_used > reg.buffer_cap:
                self._flag("buffer bounds", f"buffer {reg.class_index} holds {reg.buffer_used} > {reg.buffer_cap}")
        for oid in self._touched:
            sh = self.objects.get(oid)
            if sh is not None:
                self._check_object(st, sh, False)

    def _check_flushing(self, st) -> None:
        # region geometry is stale until the flush installs the new one, so
        # only the log is checked here; the rebuilt suffix is checked at the end
        log = st.log
        if log is None:
            return
        for oid in self._touched:
            sh = self.objects.get(oid)
            if sh is not None and sh.start >= log.start and sh.start + sh.length > log.cursor:
                self._flag("log bounds", f"{sh.name} at {sh.start} runs past the log cursor {log.cursor}")

    def _check_rebuilt(self, st, b: int) -> None:
        """Segment-wide purity for the regions a flush just rebuilt."""
        prev = 0
        for reg in st.regions:
            p0 = reg.payload_start
            p1 = p0 + reg.payload_len
            b1 = p1 + reg.buffer_cap
            if p0 != prev:
                self._flag("region contiguity", f"region {reg.class_index} starts at {p0}, expected {prev}")
            prev = b1
            if reg.class_index < b:
                continue
            self._ensure(b1)
            cells = self.cls[p0:p1]
            wrong = cells != reg.class_index
            if self.mode == "deamortized":
                wrong &= cells != 0  # replayed deletes may already have emptied cells
            if p1 > p0 and wrong.any():
                bad = int(np.flatnonzero(wrong)[0])
                self._flag("payload purity", f"payload {reg.class_index} cell {p0 + bad} holds class {int(cells[bad])}")
            if buffer_cap(reg.payload_len, self.eps) != reg.buffer_cap:
                self._flag("buffer bounds", f"buffer {reg.class_index} capacity {reg.buffer_cap} for payload {reg.payload_len}")
            if b1 > p1:
                bcells = self.cls[p1:b1]
                if int(bcells.max()) > reg.class_index:
                    self._flag("buffer class bound", f"buffer {reg.class_index} holds class {int(bcells.max())}")
                if self.mode != "deamortized" and bcells.any():
                    self._flag("buffer bounds", f"buffer {reg.class_index} not empty right after a flush")

    # -- statistics ---------------------------------------------------------

    def _op_stats(self, allocator, st, extent: int, flushing: bool, w: int) -> None:
        s = self.stats
        s.ops += 1
        V = self.trace_volume
        if V > 0 and not flushing:
            r = Fraction(extent, V)
            if r > s.max_boundary_ratio:
                s.max_boundary_ratio = r
        v_inst = self._v_start + (w if self._op[0] == "I" else 0)
        if v_inst > 0:
            t = Fraction(max(self._peak - self.delta, 0), v_inst)
            if t > s.max_transient_excess:
                s.max_transient_excess = t
        s.moved_volume_total += self._moved
        s.max_op_moved = max(s.max_op_moved, self._moved)
        if self.mode == "deamortized" and w:
            slack = self._moved - self.work_factor / self.eps * w
            if slack > s.max_op_moved_slack:
                s.max_op_moved_slack = slack
            if slack > self.delta:
                self._flag("moved-volume cap", f"moved {self._moved} > (4/eps'){w} + {self.delta}")
            # the update that completes a flush may carry the log past eps' V_f;
            # while the flush is still running the log must stay within it
            if self._flush_vf and self._in_flush:
                frac = Fraction(self._logged) / (self.eps * self._flush_vf)
                if frac > s.max_log_fraction:
                    s.max_log_fraction = frac
                if frac > 1:
                    self._flag("log bound", f"logged {self._logged} > eps' * {self._flush_vf}")
        if self.sample_every and self.op_index % self.sample_every == 0:
            s.extent_samples.append((self.op_index, extent, V))

    # -- fault injection ----------------------------------------------------

    def inject_write(self, interval: tuple[int, int], op_index: int) -> list[Verdict]:
        """Judge a synthetic placement into ``interval`` as if op ``op_index``
        had made it, then forget it again."""
        saved = self.op_index
        self.op_index = op_index
        before = len(self.verdicts)
        s0, s1 = interval
        self._on_move(MoveEvent("<fault>", s1 - s0, None, interval, -1, -1))
        if self.objects.pop(-1, None) is not None:
            self.owner[s0:s1] = 0
            self.cls[s0:s1] = 0
            self.shadow_volume -= s1 - s0
        self._touched.discard(-1)
        self.op_index = saved
        return self.verdicts[before:]

    def freed_interval(self) -> Optional[tuple[int, int]]:
        """Some run of cells freed since the last checkpoint, if any."""
        if self.freed_hi <= self.freed_lo:
            return None
        idx = np.flatnonzero(self.freed[self.freed_lo:self.freed_hi])
        if not len(idx):
            return None
        s = self.freed_lo + int(idx[0])
        e = s
        while e < len(self.freed) and self.freed[e] and not self.owner[e]:
            e += 1
        return (s, e) if e > s else None


def buffer_cap(volume: int, eps: Fraction) -> int:
    return volume * eps.numerator // eps.denominator


def brute_force_boundary(state, pending_class: int) -> int:
    """Largest ``b`` such that every buffered item in regions ``>= b`` (and in
    the tail) has class ``>= b``, tried candidate by candidate."""
    buffers = [(reg.class_index, reg.buffer) for reg in state.regions]
    tail = list(state.tail.items) if state.tail is not None else []
    for b in range(pending_class, 0, -1):
        items = tail + [it for ci, buf in buffers if ci >= b for it in buf]
        if all(class_of(it.length) >= b for it in items):
            return b
    return 1


def lower_bound_trace(delta: int) -> list[tuple]:
    """One size-``delta`` object, ``delta`` unit objects, then delete the big one."""
    if delta < 2:
        raise ValueError("delta must be at least 2")
    ops = [("I", "X", delta)]
    ops += [("I", f"u{i}", 1) for i in range(1, delta + 1)]
    ops.append(("D", "X"))
    return ops
