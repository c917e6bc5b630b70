"""Deterministic workload generators."""

from __future__ import annotations

import math
import random

from ..core import InvalidArgument
from ..oracle import lower_bound_trace
from .trace import Trace, from_ops

KINDS = ("uniform-random", "skewed-sizes", "churn", "lb-delta", "anti-compact", "anti-gap")


def _random_mix(rng: random.Random, n: int, p_delete: float, size) -> list[tuple]:
    ops: list[tuple] = []
    live: list[str] = []
    k = 0
    for _ in range(n):
        if live and rng.random() < p_delete:
            i = rng.randrange(len(live))
            live[i], live[-1] = live[-1], live[i]
            ops.append(("D", live.pop()))
        else:
            k += 1
            name = f"o{k}"
            ops.append(("I", name, size()))
            live.append(name)
    return ops


def uniform_random(n: int = 10_000, max_size: int = 1024, p_delete: float = 0.45, seed: int = 0) -> Trace:
    rng = random.Random(seed)
    ops = _random_mix(rng, n, p_delete, lambda: rng.randint(1, max_size))
    return from_ops(ops, kind="uniform-random", n=n, max_size=max_size, seed=seed)


def skewed_sizes(n: int = 10_000, max_size: int = 1024, p_delete: float = 0.45, seed: int = 0) -> Trace:
    """Sizes log-uniform over ``1..max_size``: small objects dominate by count."""
    rng = random.Random(seed)
    top = math.log2(max_size + 1)

    def size() -> int:
        return max(1, min(max_size, int(2 ** rng.uniform(0, top))))

    ops = _random_mix(rng, n, p_delete, size)
    return from_ops(ops, kind="skewed-sizes", n=n, max_size=max_size, seed=seed)


def churn(n: int = 10_000, max_size: int = 1024, live: int = 200, seed: int = 0) -> Trace:
    """Fill to ``live`` objects, then alternate a random delete with an insert."""
    rng = random.Random(seed)
    ops: list[tuple] = []
    names: list[str] = []
    k = 0
    while len(ops) < n:
        if len(names) >= live and len(ops) % 2 == 0:
            i = rng.randrange(len(names))
            names[i], names[-1] = names[-1], names[i]
            ops.append(("D", names.pop()))
        else:
            k += 1
            name = f"o{k}"
            ops.append(("I", name, rng.randint(1, max_size)))
            names.append(name)
    return from_ops(ops, kind="churn", n=n, max_size=max_size, live=live, seed=seed)


def lb_delta(delta: int = 64) -> Trace:
    return from_ops(lower_bound_trace(delta), kind="lb-delta", delta=delta)


def anti_compact(delta: int = 32, rounds: int = 10) -> Trace:
    """Big objects that die young among unit objects that survive.

    Starts with ``delta`` unit survivors.  Each round inserts ``k`` pairs of
    (one size-``delta`` object, ``delta/2`` unit objects) with
    ``k = ceil(2V / delta)``, then deletes the ``k`` big ones.  Every deleted
    cell of a compacting allocator's footprint is paid for by moving unit
    objects, roughly ``delta`` of them per delete.
    """
    if delta < 2:
        raise InvalidArgument("delta must be at least 2")
    ops: list[tuple] = []
    u = 0
    volume = 0
    for _ in range(delta):
        u += 1
        ops.append(("I", f"u{u}", 1))
        volume += 1
    for r in range(rounds):
        k = max(1, -(-2 * volume // delta))
        big = []
        for j in range(k):
            name = f"x{r}_{j}"
            ops.append(("I", name, delta))
            big.append(name)
            for _ in range(delta // 2):
                u += 1
                ops.append(("I", f"u{u}", 1))
            volume += delta // 2
        ops.extend(("D", name) for name in big)
    return from_ops(ops, kind="anti-compact", delta=delta, rounds=rounds)


def anti_gap(delta: int = 1024, units: int = 0) -> Trace:
    """One object of every power-of-two size up to ``delta``, then unit inserts.

    Each unit insert into a gapless size-class layout cascades displacements
    up the classes like a binary counter, so the class of size ``2**j`` moves
    every ``2**j`` inserts; under linear cost that is about ``lg delta`` per
    unit inserted.
    """
    if delta < 2:
        raise InvalidArgument("delta must be at least 2")
    ops: list[tuple] = []
    j = 0
    while (1 << j) <= delta:
        ops.append(("I", f"p{j}", 1 << j))
        j += 1
    for i in range(units or 4 * delta):
        ops.append(("I", f"u{i}", 1))
    return from_ops(ops, kind="anti-gap", delta=delta)


def generate(kind: str, params: dict | None = None, seed: int = 0) -> Trace:
    params = dict(params or {})
    if kind == "uniform-random":
        return uniform_random(seed=seed, **params)
    if kind == "skewed-sizes":
        return skewed_sizes(seed=seed, **params)
    if kind == "churn":
        return churn(seed=seed, **params)
    if kind == "lb-delta":
        return lb_delta(**params)
    if kind == "anti-compact":
        return anti_compact(**params)
    if kind == "anti-gap":
        return anti_gap(**params)
    raise InvalidArgument(f"unknown trace kind {kind!r}; choose from {', '.join(KINDS)}")
