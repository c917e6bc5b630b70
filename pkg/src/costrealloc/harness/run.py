"""Replay traces through an allocator, meter them, optionally under the oracle."""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ..amortized import AmortizedAllocator
from ..checkpointed import CheckpointedAllocator
from ..core import InvalidArgument, as_fraction
from ..costmodel import CostModel, Meter, parse_model
from ..deamortized import DeamortizedAllocator
from ..oracle import Oracle, Verdict
from .baselines import BASELINES
from .trace import Trace

ALLOCATORS = {
    "amortized": AmortizedAllocator,
    "checkpointed": CheckpointedAllocator,
    "deamortized": DeamortizedAllocator,
}
ALL_MODES = tuple(ALLOCATORS) + tuple(BASELINES)
DEFAULT_MODELS = ("constant:1", "linear:1", "sqrt:1", "seek:10,1")


@dataclass
class RunConfig:
    mode: str = "amortized"
    epsilon: Fraction = Fraction(1, 2)
    divisor: int = 8  # eps' = eps / divisor
    models: Sequence[str] = DEFAULT_MODELS
    validate: bool = False
    checkpoint_policy: str = "auto"
    work_factor: int = 4
    stop_on_violation: bool = False
    fault_op: Optional[int] = None  # inject a write into freed cells after this op
    record_events: bool = False
    sample_every: int = 0

    def __post_init__(self):
        self.epsilon = as_fraction(self.epsilon)
        if self.mode not in ALL_MODES:
            raise InvalidArgument(f"unknown mode {self.mode!r}")
        if self.checkpoint_policy not in ("auto", "trace"):
            raise InvalidArgument(f"unknown checkpoint policy {self.checkpoint_policy!r}")
        if not (0 < self.epsilon <= 1):
            raise InvalidArgument("epsilon must lie in (0, 1]")
        if self.divisor < 2:
            raise InvalidArgument("the epsilon-prime divisor must be at least 2")

    @property
    def epsilon_prime(self) -> Fraction:
        return self.epsilon / self.divisor


@dataclass
class ModelSummary:
    label: str
    allocation: Fraction
    reallocation: Fraction
    b_ratio: Fraction
    max_op: Fraction
    per_op: list = field(default_factory=list, repr=False)


@dataclass
class RunReport:
    mode: str
    epsilon: Fraction
    epsilon_prime: Fraction
    ops: int
    updates: int
    final_volume: int
    delta: int
    max_extent_ratio: Fraction
    c_boundary: Fraction
    max_transient_ratio: Fraction
    c_transient: Fraction
    flushes: int
    checkpoints_total: int
    max_checkpoints_per_op: int
    max_checkpoints_per_flush: int
    max_op_moved: int
    max_op_moved_slack: Fraction
    chained_flushes: int
    max_log_fraction: Fraction
    forced_checkpoints: int
    models: list[ModelSummary]
    violations: list[Verdict]
    wall_time: float
    events: list = field(default_factory=list, repr=False)
    oracle: Optional[Oracle] = field(default=None, repr=False)

    KEYS = (
        "mode", "epsilon", "epsilon_prime", "ops", "updates", "final_volume", "delta",
        "max_extent_ratio", "c_boundary", "max_transient_ratio", "c_transient",
        "flushes", "checkpoints_total", "max_checkpoints_per_op", "max_checkpoints_per_flush",
        "max_op_moved", "max_op_moved_slack", "chained_flushes", "max_log_fraction",
        "forced_checkpoints",
    )

    def model(self, label: str) -> ModelSummary:
        for m in self.models:
            if m.label == label or m.label.split(":")[0] == label:
                return m
        raise KeyError(label)

    def to_text(self, wall_time: bool = True) -> str:
        lines = []
        for key in self.KEYS:
            lines.append(f"{key}={_fmt(getattr(self, key))}")
        for m in self.models:
            lines.append(f"cost.{m.label}.allocation={_fmt(m.allocation)}")
            lines.append(f"cost.{m.label}.reallocation={_fmt(m.reallocation)}")
            lines.append(f"cost.{m.label}.b_ratio={_fmt(m.b_ratio)}")
            lines.append(f"cost.{m.label}.max_op={_fmt(m.max_op)}")
        lines.append(f"violations={len(self.violations)}")
        for v in self.violations[:20]:
            lines.append(f"violation={v.line()}")
        if wall_time:
            lines.append(f"wall_time={self.wall_time:.3f}")
        return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return str(x.numerator)
        return f"{float(x):.6f}"
    return str(x)


def make_allocator(config: RunConfig):
    if config.mode in BASELINES:
        return BASELINES[config.mode]()
    cls = ALLOCATORS[config.mode]
    if cls is DeamortizedAllocator:
        return cls(config.epsilon_prime, work_factor=config.work_factor)
    return cls(config.epsilon_prime)


def _steps(alloc, op):
    """Generator for one client update, yielding ``"checkpoint"`` while blocked."""
    if op[0] == "I":
        if hasattr(alloc, "insert_steps"):
            return alloc.insert_steps(op[1], op[2])
        return _immediate(alloc.insert, op[1], op[2])
    if hasattr(alloc, "delete_steps"):
        return alloc.delete_steps(op[1])
    return _immediate(alloc.delete, op[1])


def _immediate(fn, *args):
    return fn(*args)
    yield  # pragma: no cover - makes this a generator


class Driver:
    """Feeds trace operations to an allocator under a checkpoint policy."""

    def __init__(self, alloc, config: RunConfig, models: list[CostModel]):
        self.alloc = alloc
        self.config = config
        self.meter = Meter(models)
        alloc.subscribe(self.meter)
        self.oracle: Optional[Oracle] = None
        if config.validate:
            self.oracle = Oracle(config.mode, config.epsilon_prime, work_factor=config.work_factor, sample_every=config.sample_every)
            alloc.subscribe(self.oracle.on_event)
        self.events: list = []
        if config.record_events:
            alloc.subscribe(self.events.append)
        self.queue: deque = deque()
        self.blocked = None
        self.blocked_op = None
        self.completed = 0
        self.forced = 0
        self.max_ckpt_per_op = 0
        self._op_ckpts = 0
        self.verdicts: list[Verdict] = []

    def _start(self, op) -> None:
        if self.oracle is not None:
            w = op[2] if op[0] == "I" else 0
            self.oracle.begin_op(op[0], op[1], w, self.alloc)
        self.meter.begin_op()
        self._op_ckpts = 0
        self.blocked = _steps(self.alloc, op)
        self.blocked_op = op

    def _resume(self) -> bool:
        """Advance the current op; True once it has completed."""
        try:
            next(self.blocked)
        except StopIteration:
            self._finish()
            return True
        self._op_ckpts += 1
        return False

    def _finish(self) -> None:
        self.meter.end_op()
        ckpts = getattr(self.alloc, "last_op_checkpoints", self._op_ckpts)
        self.max_ckpt_per_op = max(self.max_ckpt_per_op, ckpts)
        if self.oracle is not None:
            found = self.oracle.end_op(self.alloc)
            self.verdicts.extend(found)
        self.blocked = None
        self.blocked_op = None
        if self.config.fault_op is not None and self.completed == self.config.fault_op:
            self._inject_fault()
        self.completed += 1

    def _pump(self) -> None:
        while self.blocked is None and self.queue:
            self._start(self.queue.popleft())
            if self.config.checkpoint_policy == "auto":
                while not self._resume():
                    pass
            else:
                self._resume()

    def update(self, op) -> None:
        self.queue.append(op)
        self._pump()

    def checkpoint(self) -> None:
        if self.blocked is not None:
            if not self._resume():
                return
            self._pump()
        elif hasattr(self.alloc, "system_checkpoint"):
            self.alloc.system_checkpoint()

    def finish(self) -> None:
        while self.blocked is not None or self.queue:
            if self.blocked is not None:
                self.forced += 1
                if self._resume():
                    self._pump()
            else:
                self._pump()

    def _inject_fault(self) -> None:
        """Judge a bogus placement into freed cells, attributed to the op just finished."""
        if self.oracle is None:
            return
        hit = self.oracle.freed_interval()
        if hit is not None:
            self.verdicts.extend(self.oracle.inject_write(hit, self.oracle.op_index))


def run(trace: Trace, config: RunConfig, models: Optional[Iterable] = None) -> RunReport:
    parsed = [m if isinstance(m, CostModel) else parse_model(m) for m in (models or config.models)]
    alloc = make_allocator(config)
    driver = Driver(alloc, config, parsed)
    t0 = time.perf_counter()
    for op in trace.ops:
        kind = op[0]
        if kind in ("I", "D"):
            driver.update(op)
            if config.stop_on_violation and driver.verdicts:
                break
        elif kind == "C":
            driver.checkpoint()
        else:
            raise InvalidArgument(f"operation {kind!r} is not valid in a replay trace")
    driver.finish()
    wall = time.perf_counter() - t0
    return _report(trace, config, alloc, driver, wall)


def _report(trace: Trace, config: RunConfig, alloc, driver: Driver, wall: float) -> RunReport:
    eps = config.epsilon_prime
    oracle = driver.oracle
    models = []
    for ledger in driver.meter.ledgers:
        models.append(ModelSummary(
            ledger.model.label,
            Fraction(ledger.allocation_cost_total),
            Fraction(ledger.reallocation_cost_total),
            ledger.b_ratio,
            Fraction(ledger.max_op_cost),
            ledger.per_op_cost,
        ))
    ledger = getattr(alloc, "ledger", None)
    if oracle is not None:
        s = oracle.stats
        ratio, trans = s.max_boundary_ratio, s.max_transient_excess
        moved, slack, logfrac = s.max_op_moved, s.max_op_moved_slack, s.max_log_fraction
        flushes = s.flushes
    else:
        ratio = trans = slack = logfrac = Fraction(0)
        moved = 0
        flushes = alloc.flush_count
    return RunReport(
        mode=config.mode,
        epsilon=config.epsilon,
        epsilon_prime=eps,
        ops=len(trace.ops),
        updates=driver.completed,
        final_volume=alloc.state.volume,
        delta=alloc.state.delta,
        max_extent_ratio=ratio,
        c_boundary=(ratio - 1) / eps if ratio else Fraction(0),
        max_transient_ratio=trans,
        c_transient=(trans - 1) / eps if trans else Fraction(0),
        flushes=flushes,
        checkpoints_total=ledger.total if ledger else 0,
        max_checkpoints_per_op=driver.max_ckpt_per_op if ledger else 0,
        max_checkpoints_per_flush=max(ledger.flush_checkpoints, default=0) if ledger else 0,
        max_op_moved=moved,
        max_op_moved_slack=slack,
        chained_flushes=getattr(alloc, "chained_flushes", 0),
        max_log_fraction=logfrac,
        forced_checkpoints=driver.forced,
        models=models,
        violations=driver.verdicts,
        wall_time=wall,
        events=driver.events,
        oracle=oracle,
    )


def sweep(traces: dict, configs: Iterable[RunConfig], jobs: int = 1) -> dict:
    """Run every (trace, config) cell; results keyed by ``(trace key, mode, eps)``."""
    cells = [(tk, cfg) for tk in traces for cfg in configs]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            reports = list(pool.map(_cell, [(traces[tk], cfg) for tk, cfg in cells]))
    else:
        reports = [_cell((traces[tk], cfg)) for tk, cfg in cells]
    out = {}
    for (tk, cfg), rep in zip(cells, reports):
        out[(tk, cfg.mode, str(cfg.epsilon))] = rep
    return dict(sorted(out.items()))


def _cell(args) -> RunReport:
    trace, cfg = args
    rep = run(trace, cfg)
    rep.oracle = None
    rep.events = []
    for m in rep.models:
        m.per_op = []
    return rep
