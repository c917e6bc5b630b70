import random
from fractions import Fraction

import pytest

from costrealloc import DeamortizedAllocator, FlushEvent, InvalidArgument, NotFound, validate_layout
from costrealloc.core import Residency

from test_checkpointed import random_ops


def drive(a, op):
    steps = a.insert_steps(op[1], op[2]) if op[0] == "I" else a.delete_steps(op[1])
    for _ in steps:
        pass


def test_budget_is_four_over_eps_prime_times_w():
    a = DeamortizedAllocator(Fraction(1, 4))
    assert a.budget(3) == 48


def test_errors():
    a = DeamortizedAllocator(Fraction(1, 4))
    a.insert("x", 2)
    with pytest.raises(InvalidArgument):
        a.insert("x", 2)
    with pytest.raises(NotFound):
        a.delete("y")


def test_mid_flush_update_moves_between_16w_and_16w_plus_delta():
    eps = Fraction(1, 4)
    a = DeamortizedAllocator(eps)
    moved = [0]
    a.subscribe(lambda e: moved.__setitem__(0, moved[0] + e.length) if getattr(e, "source", None) is not None else None)
    checked = 0
    for op in random_ops(1, n=3000, max_size=50):
        was = a.flush_in_progress
        moved[0] = 0
        drive(a, op)
        if was and a.flush_in_progress:
            w = op[2] if op[0] == "I" else None
            if w is not None:
                # replaying a logged delete is flush work that moves nothing
                assert 16 * w <= a.last_op_work <= 16 * w + a.state.delta
                assert moved[0] <= 16 * w + a.state.delta
                checked += 1
    assert checked > 0


def test_mid_flush_inserts_land_in_the_log():
    a = DeamortizedAllocator(Fraction(1, 16))
    rng = random.Random(4)
    k = 0
    while not a.flush_in_progress:
        k += 1
        drive(a, ("I", f"o{k}", rng.randint(1, 40)))
    drive(a, ("I", "late", 1))
    if a.flush_in_progress:
        assert a.state.objects["late"].residency is Residency.LOG
        assert a.state.log.entries[-1].record.name == "late"


def test_empty_log_drain_is_noop():
    a = DeamortizedAllocator(Fraction(1, 2))
    a.insert("x", 4)
    assert a.state.log is None
    assert list(a.finish_flush()) == []


def test_only_the_tail_triggers_flushes():
    a = DeamortizedAllocator(Fraction(1, 8))
    ends = []
    a.subscribe(lambda e: ends.append(e) if isinstance(e, FlushEvent) and e.stage == "start" else None)
    for op in random_ops(9, n=1500):
        before = a.flush_in_progress
        n = len(ends)
        drive(a, op)
        if len(ends) > n and not before:
            # a fresh flush starts only from an overflowing tail
            assert a.state.tail is not None


def test_layout_valid_when_idle():
    a = DeamortizedAllocator(Fraction(1, 4))
    for op in random_ops(3, n=800):
        drive(a, op)
        if not a.flush_in_progress:
            assert validate_layout(a.state) == []


def test_update_storm_never_nests_flushes(replay_ops):
    # many small updates right after big ones keep flushes interrupted
    for seed in range(30):
        rng = random.Random(seed)
        ops, live = [], []
        for k in range(300):
            if live and rng.random() < 0.4:
                ops.append(("D", live.pop(rng.randrange(len(live)))))
            else:
                ops.append(("I", f"o{k}", rng.choice([1, 1, 2, 3, 200])))
                live.append(f"o{k}")
        rep = replay_ops(ops, mode="deamortized", epsilon=Fraction(1, rng.choice([2, 4, 16])))
        assert rep.violations == []


@pytest.mark.parametrize("eps", [Fraction(1, 16), Fraction(1, 4)])
def test_oracle_replay_clean(replay_ops, eps):
    rep = replay_ops(random_ops(6, n=1000), mode="deamortized", epsilon=eps)
    assert rep.violations == []
    assert rep.max_log_fraction <= 1
