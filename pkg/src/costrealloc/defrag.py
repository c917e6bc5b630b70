"""Sort an existing allocation in place with little extra space.

The objects start somewhere inside ``[0, (1+eps) V)``.  They are first
crunched against ``Z = floor((1+eps) V)``, which leaves an empty prefix of
``floor(eps V)`` cells.  An amortized reallocator is run in that prefix: the
suffix objects are fed to it one by one, then pulled out again in reverse
sorted order and stacked down from ``Z``.  The prefix never holds more than
``(1+eps) W`` cells while the suffix holds exactly ``V - W``, so the two never
meet.  One object at a time passes through a staging slot ``[Z, Z + delta)``,
so peak space is ``(1+eps) V + delta``.  A last pass shifts the sorted run
down to address 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .amortized import AmortizedAllocator
from .core import (
    FreeEvent,
    InvalidArgument,
    InvariantFailure,
    MoveEvent,
    as_fraction,
)


@dataclass
class DefragInput:
    objects: Sequence[tuple[str, int, int]]  # (name, length, start)
    epsilon: Fraction = Fraction(1, 2)
    key: Optional[Callable[[str], object]] = None  # sort key on names; None sorts names
    divisor: int = 8

    def __post_init__(self):
        self.epsilon = as_fraction(self.epsilon)
        if not (0 < self.epsilon <= Fraction(1, 2)):
            raise InvalidArgument("epsilon must lie in (0, 1/2]")
        names = [o[0] for o in self.objects]
        if len(set(names)) != len(names):
            raise InvalidArgument("object names must be unique")
        for name, length, start in self.objects:
            if length < 1 or start < 0:
                raise InvalidArgument(f"object {name!r} has a bad interval")

    @property
    def volume(self) -> int:
        return sum(o[1] for o in self.objects)


@dataclass
class DefragResult:
    events: list[MoveEvent]
    layout: dict[str, tuple[int, int]]
    order: list[str]
    peak: int
    volume: int
    delta: int
    Z: int
    moves: int = 0
    phase_moves: dict[str, int] = field(default_factory=dict)

    @property
    def bound(self) -> Fraction:
        """The working-space limit ``(1+eps) V + delta`` in cells (floored)."""
        return Fraction(self.Z + self.delta)


class _Defragmenter:
    def __init__(self, inp: DefragInput):
        self.inp = inp
        self.V = inp.volume
        self.delta = max((o[1] for o in inp.objects), default=0)
        self.Z = (inp.epsilon.numerator * self.V) // inp.epsilon.denominator + self.V
        self.pos: dict[str, int] = {}
        self.length: dict[str, int] = {}
        self.oid: dict[str, int] = {}
        self.events: list[MoveEvent] = []
        self.peak = 0
        self.phase = "initial"
        self.phase_moves: dict[str, int] = {}
        self.incoming: Optional[tuple[str, tuple[int, int]]] = None
        self.suffix_start = self.Z

    def emit(self, name: str, dest: int, source: Optional[tuple[int, int]]) -> None:
        w = self.length[name]
        ev = MoveEvent(name, w, source, (dest, dest + w), 0, self.oid[name])
        self.events.append(ev)
        self.pos[name] = dest
        self.peak = max(self.peak, dest + w)
        if source is not None:
            self.phase_moves[self.phase] = self.phase_moves.get(self.phase, 0) + 1

    def move(self, name: str, dest: int) -> None:
        src = self.pos[name]
        if src != dest:
            self.emit(name, dest, (src, src + self.length[name]))

    def move_via_staging(self, name: str, dest: int) -> None:
        """Direct when the target does not overlap the object, else through ``Z``."""
        src, w = self.pos[name], self.length[name]
        if src == dest:
            return
        if dest < src + w and src < dest + w:
            self.move(name, self.Z)
        self.move(name, dest)

    # the prefix allocator's events, rewritten into the defrag address space
    def on_alloc_event(self, ev) -> None:
        if isinstance(ev, FreeEvent):
            return
        if not isinstance(ev, MoveEvent):
            return
        if ev.destination[1] > self.suffix_start:
            raise InvariantFailure(
                f"prefix write {ev.destination} reaches the suffix at {self.suffix_start}"
            )
        if ev.source is None:
            name, staged = self.incoming
            if name != ev.name:
                raise InvariantFailure(f"unexpected placement of {ev.name}")
            self.emit(name, ev.destination[0], staged)
        else:
            self.emit(ev.name, ev.destination[0], ev.source)

    def run(self) -> DefragResult:
        inp = self.inp
        if not inp.objects:
            return DefragResult([], {}, [], 0, 0, 0, 0)
        for k, (name, length, start) in enumerate(inp.objects, 1):
            self.length[name] = length
            self.oid[name] = k
        initial = sorted(inp.objects, key=lambda o: o[2])
        prev_end = 0
        for name, length, start in initial:
            if start < prev_end:
                raise InvalidArgument(f"object {name!r} overlaps its predecessor")
            prev_end = start + length
        if prev_end > self.Z:
            raise InvalidArgument(f"initial extent {prev_end} exceeds (1+eps)V = {self.Z}")
        for name, length, start in inp.objects:
            self.emit(name, start, None)

        # crunch right against Z
        self.phase = "crunch"
        cursor = self.Z
        for name, length, start in reversed(initial):
            cursor -= length
            self.move_via_staging(name, cursor)
        self.suffix_start = self.Z - self.V

        # feed the suffix, left to right, to the prefix allocator
        self.phase = "gather"
        alloc = AmortizedAllocator(inp.epsilon / inp.divisor)
        alloc.subscribe(self.on_alloc_event)
        for name, length, _ in initial:
            self.move(name, self.Z)
            self.suffix_start += length
            self.incoming = (name, (self.Z, self.Z + length))
            alloc.insert(name, length)
            self.incoming = None

        # pull out in reverse sorted order, stacking down from Z
        self.phase = "scatter"
        key = inp.key or (lambda n: n)
        order = sorted(self.length, key=key)
        top = self.Z
        for name in reversed(order):
            length = self.length[name]
            self.move(name, self.Z)
            self.suffix_start = top  # the allocator may compact into the freed cells below
            alloc.delete(name)
            top -= length
            self.suffix_start = top
            self.move(name, top)

        # shift the sorted run down to address 0
        self.phase = "shift"
        cursor = 0
        for name in order:
            self.move_via_staging(name, cursor)
            cursor += self.length[name]

        layout = {n: (self.pos[n], self.pos[n] + self.length[n]) for n in order}
        return DefragResult(
            self.events, layout, order, self.peak, self.V, self.delta, self.Z,
            moves=sum(1 for e in self.events if e.source is not None),
            phase_moves=self.phase_moves,
        )


def defragment(inp: Union[DefragInput, Sequence[tuple[str, int, int]]], epsilon=None, key=None) -> DefragResult:
    """Sort ``inp`` by ``key`` (name order by default); see the module docstring."""
    if not isinstance(inp, DefragInput):
        inp = DefragInput(list(inp), as_fraction(epsilon if epsilon is not None else Fraction(1, 2)), key)
    return _Defragmenter(inp).run()
