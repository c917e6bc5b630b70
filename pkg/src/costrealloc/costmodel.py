"""Subadditive cost functions and the meter that prices move events.

Allocators never import this module.  They publish ``MoveEvent`` streams and
the meter prices them afterwards, which is what makes cost obliviousness
checkable: one event stream, many ledgers.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Union

from .core import MoveEvent, as_fraction

Cost = Union[int, Fraction]
KINDS = ("constant", "linear", "sqrt", "seek", "table")


class InvalidModel(ValueError):
    pass


@dataclass(frozen=True)
class Counterexample:
    x: int
    y: int
    reason: str


@dataclass
class CostModel:
    """A monotone subadditive size -> cost function priced in exact arithmetic."""

    kind: str
    a: Fraction = Fraction(0)
    b: Fraction = Fraction(1)
    table: tuple[tuple[int, Fraction], ...] = ()
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidModel(f"unknown cost model kind {self.kind!r}")
        self.a = as_fraction(self.a)
        self.b = as_fraction(self.b)
        if self.kind == "table":
            pts = sorted((int(w), as_fraction(c)) for w, c in self.table)
            if not pts or pts[0][0] != 1:
                raise InvalidModel("a cost table needs a sample at w = 1")
            if len({w for w, _ in pts}) != len(pts):
                raise InvalidModel("duplicate sizes in cost table")
            self.table = tuple(pts)
        if not self.label:
            self.label = describe(self)

    @staticmethod
    def constant(a=1) -> "CostModel":
        return CostModel("constant", a=a)

    @staticmethod
    def linear(b=1) -> "CostModel":
        return CostModel("linear", b=b)

    @staticmethod
    def sqrt(b=1) -> "CostModel":
        return CostModel("sqrt", b=b)

    @staticmethod
    def seek(a=10, b=1) -> "CostModel":
        return CostModel("seek", a=a, b=b)

    def price(self, length: int) -> Cost:
        if length < 1:
            raise ValueError(f"length must be positive, got {length}")
        hit = self._cache.get(length)
        if hit is not None:
            return hit
        if self.kind == "constant":
            c = self.a
        elif self.kind == "linear":
            c = self.b * length
        elif self.kind == "sqrt":
            r = math.isqrt(length)
            c = self.b * (r if r * r == length else r + 1)
        elif self.kind == "seek":
            c = self.a + self.b * length
        else:
            c = self._interpolate(length)
        if isinstance(c, Fraction) and c.denominator == 1:
            c = int(c)
        self._cache[length] = c
        return c

    __call__ = price

    def _interpolate(self, w: int) -> Fraction:
        pts = self.table
        for (w0, c0), (w1, c1) in zip(pts, pts[1:]):
            if w0 <= w <= w1:
                return c0 + (c1 - c0) * Fraction(w - w0, w1 - w0)
        if len(pts) == 1:
            return pts[0][1]
        # past the last sample keep the final segment's per-unit rate
        (w0, c0), (w1, c1) = pts[-2], pts[-1]
        return c1 + (c1 - c0) * Fraction(w - w1, w1 - w0)


def describe(model: CostModel) -> str:
    if model.kind == "constant":
        return f"constant:{model.a}"
    if model.kind in ("linear", "sqrt"):
        return f"{model.kind}:{model.b}"
    if model.kind == "seek":
        return f"seek:{model.a},{model.b}"
    return "table:" + ";".join(f"{w}={c}" for w, c in model.table)


def parse_model(spec: str) -> CostModel:
    """Parse a ``--cost`` value such as ``linear:1``, ``seek:10,1`` or ``table:path``."""
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "constant":
            return CostModel.constant(arg or 1)
        if kind == "linear":
            return CostModel.linear(arg or 1)
        if kind == "sqrt":
            return CostModel.sqrt(arg or 1)
        if kind in ("seek", "affine_seek"):
            parts = [p for p in arg.split(",") if p.strip()] if arg else []
            a, b = (parts + ["10", "1"][len(parts):])[:2]
            return CostModel.seek(a, b)
        if kind == "table":
            return load_table(Path(arg), label=f"table:{arg}")
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidModel(f"bad cost model {spec!r}: {exc}") from exc
    raise InvalidModel(f"unknown cost model {spec!r}")


def load_table(path: Path, label: str = "") -> CostModel:
    """Read ``size cost`` pairs (one per line, ``#`` comments) and validate them."""
    pts = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise InvalidModel(f"{path}:{lineno}: expected 'size cost'")
        pts.append((int(parts[0]), Fraction(parts[1])))
    model = CostModel("table", table=tuple(pts), label=label)
    bad = validate_subadditive(model)
    if bad is not None:
        raise InvalidModel(f"{path}: {bad.reason} at ({bad.x}, {bad.y})")
    return model


def validate_subadditive(model: CostModel, bound: int = 64, samples: int = 2000, seed: int = 0) -> Optional[Counterexample]:
    """First monotonicity or subadditivity violation found, else None.

    Pairs are checked exhaustively up to ``bound`` and then by random sampling
    of large sizes.
    """
    f = model.price
    if f(1) < 0:
        return Counterexample(1, 0, "negative cost")
    for x in range(1, 2 * bound):
        if f(x + 1) < f(x):
            return Counterexample(x, x + 1, "not monotone")
    for x in range(1, bound + 1):
        for y in range(x, bound + 1):
            if f(x + y) > f(x) + f(y):
                return Counterexample(x, y, "not subadditive")
    rng = random.Random(seed)
    for _ in range(samples):
        x = rng.randint(1, 1 << 20)
        y = rng.randint(1, 1 << 20)
        if f(x + y) > f(x) + f(y):
            return Counterexample(min(x, y), max(x, y), "not subadditive")
        if f(max(x, y)) < f(min(x, y)):
            return Counterexample(min(x, y), max(x, y), "not monotone")
    return None


class CostLedger:
    """Allocation and reallocation totals for one model over one run."""

    def __init__(self, model: CostModel):
        self.model = model
        self.allocation_cost_total: Cost = 0
        self.reallocation_cost_total: Cost = 0
        self.per_op_cost: list[Cost] = []
        self.max_op_cost: Cost = 0
        self._op: Cost = 0
        self._open = False

    def begin_op(self) -> None:
        if self._open:
            self.end_op()
        self._op = 0
        self._open = True

    def end_op(self) -> None:
        if not self._open:
            return
        self.per_op_cost.append(self._op)
        self.max_op_cost = max(self.max_op_cost, self._op)
        self._open = False

    def charge(self, ev: MoveEvent) -> None:
        c = self.model.price(ev.length)
        if ev.source is None:
            self.allocation_cost_total += c
        else:
            self.reallocation_cost_total += c
        self._op += c

    @property
    def b_ratio(self) -> Fraction:
        if not self.allocation_cost_total:
            return Fraction(0)
        return Fraction(self.reallocation_cost_total) / self.allocation_cost_total


def meter(ledger: CostLedger, events: Iterable) -> CostLedger:
    """Price every ``MoveEvent`` in ``events`` into ``ledger`` (other events are ignored)."""
    for ev in events:
        if isinstance(ev, MoveEvent):
            ledger.charge(ev)
    return ledger


class Meter:
    """Observer pricing one event stream under several models at once."""

    def __init__(self, models: Iterable[CostModel]):
        self.ledgers = [CostLedger(m) for m in models]

    def __call__(self, ev) -> None:
        if isinstance(ev, MoveEvent):
            for ledger in self.ledgers:
                ledger.charge(ev)

    def begin_op(self) -> None:
        for ledger in self.ledgers:
            ledger.begin_op()

    def end_op(self) -> None:
        for ledger in self.ledgers:
            ledger.end_op()
