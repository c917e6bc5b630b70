import random
from fractions import Fraction

import pytest

from costrealloc.core import InvalidArgument
from costrealloc.defrag import DefragInput, defragment
from costrealloc.oracle import Oracle


def scatter(rng, lengths, names, eps):
    """Place objects in a random order with random gaps inside floor((1+eps)V)."""
    V = sum(lengths)
    slack = int(eps * V)
    gaps = [0] * (len(lengths) + 1)
    for _ in range(slack):
        gaps[rng.randrange(len(gaps))] += 1
    out, pos = [], 0
    for i, (n, w) in enumerate(zip(names, lengths)):
        pos += gaps[i]
        out.append((n, w, pos))
        pos += w
    return out


def check(objs, eps, key=None):
    res = defragment(DefragInput(objs, eps, key))
    oracle = Oracle("defrag", eps / 8)
    for ev in res.events:
        oracle.on_event(ev)
    assert oracle.verdicts == []
    lengths = {n: w for n, w, _ in objs}
    expect = sorted(lengths, key=key) if key else sorted(lengths)
    assert res.order == expect
    cursor = 0
    for n in expect:
        assert res.layout[n] == (cursor, cursor + lengths[n])
        cursor += lengths[n]
    V = sum(lengths.values())
    assert res.peak <= (1 + eps) * V + max(lengths.values())
    return res


def test_already_sorted_gap_free_input():
    objs = [("a", 3, 0), ("b", 5, 3), ("c", 2, 8)]
    res = check(objs, Fraction(1, 2))
    assert res.moves > 0


def test_single_object():
    res = check([("x", 40, 0)], Fraction(1, 4))
    assert res.peak <= 40 + 10 + 40


def test_single_object_already_in_place_still_sorted():
    res = check([("x", 7, 0)], Fraction(1, 2))
    assert res.layout["x"] == (0, 7)


def test_custom_key_orders_by_length():
    rng = random.Random(1)
    names = [f"n{i}" for i in range(30)]
    lengths = [rng.randint(1, 50) for _ in names]
    objs = scatter(rng, lengths, names, Fraction(1, 4))
    by_len = dict(zip(names, lengths))
    check(objs, Fraction(1, 4), key=lambda n: (by_len[n], n))


@pytest.mark.parametrize("seed", range(15))
def test_random_instances(seed):
    rng = random.Random(seed)
    eps = rng.choice([Fraction(1, 2), Fraction(1, 4), Fraction(1, 16)])
    n = rng.randint(1, 120)
    names = [f"o{i}" for i in range(n)]
    rng.shuffle(names)
    lengths = [rng.randint(1, rng.choice([1, 8, 512])) for _ in names]
    check(scatter(rng, lengths, names, eps), eps)


def test_initial_extent_too_large():
    with pytest.raises(InvalidArgument):
        defragment(DefragInput([("a", 4, 0), ("b", 4, 10)], Fraction(1, 2)))


def test_overlapping_input_rejected():
    with pytest.raises(InvalidArgument):
        defragment(DefragInput([("a", 4, 0), ("b", 4, 2)], Fraction(1, 2)))


def test_bad_epsilon_and_duplicates():
    with pytest.raises(InvalidArgument):
        DefragInput([("a", 1, 0)], Fraction(3, 4))
    with pytest.raises(InvalidArgument):
        DefragInput([("a", 1, 0), ("a", 1, 1)], Fraction(1, 2))
