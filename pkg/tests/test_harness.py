from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from costrealloc.core import InvalidArgument
from costrealloc.harness import BASELINES, RunConfig, generate, run, sweep
from costrealloc.harness.baselines import FirstFit, GapClasses, LogCompact
from costrealloc.harness.trace import ParseError, from_ops, parse_trace, serialize_trace


def test_parse_basic():
    t = parse_trace("I a 4\nD a\n")
    assert t.ops == [("I", "a", 4), ("D", "a")]


@pytest.mark.parametrize("text, line", [
    ("D ghost\n", 1),
    ("I a 4\nI a 2\n", 2),
    ("I a 0\n", 1),
    ("I a -3\n", 1),
    ("I a x\n", 1),
    ("# c\nZ a\n", 2),
    ("I a 4\nP b 0\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as exc:
        parse_trace(text)
    assert exc.value.line == line


def test_parse_comments_header_and_checkpoints():
    t = parse_trace("# costrealloc-trace v1 kind=x eps=1/4\nI a 3  # trailing\nC\nP a 7\n")
    assert t.header == {"kind": "x", "eps": "1/4"}
    assert t.ops == [("I", "a", 3), ("C",), ("P", "a", 7)]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["uniform-random", "skewed-sizes", "churn"]), st.integers(0, 10**6), st.integers(0, 300))
def test_round_trip_generated(kind, seed, n):
    t = generate(kind, {"n": n}, seed=seed)
    back = parse_trace(serialize_trace(t))
    assert back.ops == t.ops and back.header == t.header


def test_generators_deterministic():
    assert generate("churn", {"n": 1000}, seed=7).ops == generate("churn", {"n": 1000}, seed=7).ops
    assert generate("churn", {"n": 1000}, seed=7).ops != generate("churn", {"n": 1000}, seed=8).ops


def test_lb_delta_trace_length():
    assert len(generate("lb-delta", {"delta": 64})) == 66


def test_unknown_kind():
    with pytest.raises(InvalidArgument):
        generate("nope")


def test_anti_compact_shape():
    t = generate("anti-compact", {"delta": 32, "rounds": 2})
    bigs = [op for op in t.ops if op[0] == "I" and op[2] == 32]
    dels = [op for op in t.ops if op[0] == "D"]
    assert len(bigs) == len(dels) > 0


def _replay(cls, ops):
    b = cls()
    moves = []
    b.subscribe(moves.append)
    for op in ops:
        b.insert(op[1], op[2]) if op[0] == "I" else b.delete(op[1])
    return b, moves


@pytest.mark.parametrize("kind", ["uniform-random", "churn"])
@pytest.mark.parametrize("mode", sorted(BASELINES))
def test_baselines_pass_oracle(mode, kind):
    rep = run(generate(kind, {"n": 600, "max_size": 64}, seed=3), RunConfig(mode, validate=True))
    assert rep.violations == []


def test_first_fit_never_moves():
    _, ev = _replay(FirstFit, generate("uniform-random", {"n": 500}, seed=1).ops)
    assert all(e.source is None for e in ev if hasattr(e, "source"))


def test_first_fit_reuses_lowest_hole():
    b, _ = _replay(FirstFit, [("I", "a", 4), ("I", "b", 4), ("I", "c", 4), ("D", "a"), ("I", "d", 2)])
    assert b.state.objects["d"].start == 0


def test_log_compact_keeps_extent_below_twice_volume():
    b = LogCompact()
    for op in generate("churn", {"n": 800, "max_size": 50}, seed=2).ops:
        b.insert(op[1], op[2]) if op[0] == "I" else b.delete(op[1])
        assert b.state.end < 2 * b.state.volume or b.state.volume == 0 or op[0] == "I"


def test_gap_classes_layout_is_class_ordered():
    b, _ = _replay(GapClasses, generate("anti-gap", {"delta": 64, "units": 40}).ops)
    starts = sorted((r.start, GapClasses.slot_exponent(r.length)) for r in b.state.objects.values())
    classes = [c for _, c in starts]
    assert classes == sorted(classes)


def test_run_report_text_is_deterministic():
    t = generate("uniform-random", {"n": 300}, seed=4)
    a = run(t, RunConfig("deamortized", Fraction(1, 4), validate=True)).to_text(wall_time=False)
    b = run(t, RunConfig("deamortized", Fraction(1, 4), validate=True)).to_text(wall_time=False)
    assert a == b
    keys = [line.split("=")[0] for line in a.splitlines()]
    assert keys[:3] == ["mode", "epsilon", "epsilon_prime"]


def test_run_rejects_unknown_mode_and_eps():
    with pytest.raises(InvalidArgument):
        RunConfig("nope")
    with pytest.raises(InvalidArgument):
        RunConfig("amortized", Fraction(3, 2))


def test_lb_delta_deamortized_moved_volume_cap():
    delta = 64
    cfg = RunConfig("deamortized", Fraction(1, 4), validate=True)
    rep = run(generate("lb-delta", {"delta": delta}), cfg)
    assert rep.violations == []
    assert rep.max_op_moved_slack <= rep.delta


def test_sweep_keys_sorted_and_parallel_matches_serial():
    traces = {"a": generate("uniform-random", {"n": 200}, seed=1), "b": generate("churn", {"n": 200}, seed=2)}
    cfgs = [RunConfig(m, Fraction(1, 4)) for m in ("amortized", "deamortized")]
    serial = sweep(traces, cfgs)
    par = sweep(traces, cfgs, jobs=2)
    assert list(serial) == list(par) == sorted(serial)
    for k in serial:
        assert serial[k].to_text(wall_time=False) == par[k].to_text(wall_time=False)
