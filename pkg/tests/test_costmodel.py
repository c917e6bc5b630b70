from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from costrealloc.core import MoveEvent
from costrealloc.costmodel import CostLedger, CostModel, InvalidModel, Meter, meter, parse_model, validate_subadditive


def test_price_examples():
    assert CostModel.linear(1).price(7) == 7
    assert CostModel.constant(1).price(1024) == 1
    assert CostModel.seek(10, 1).price(4) == 14
    assert CostModel.sqrt(1).price(9) == 3
    assert CostModel.sqrt(1).price(10) == 4


def test_price_rejects_nonpositive():
    with pytest.raises(ValueError):
        CostModel.linear().price(0)


@pytest.mark.parametrize("spec", ["constant:1", "linear:1", "sqrt:1", "seek:10,1", "linear:3/2"])
def test_standard_models_are_subadditive(spec):
    assert validate_subadditive(parse_model(spec)) is None


def test_superadditive_table_gives_counterexample():
    bad = validate_subadditive(CostModel("table", table=((1, 1), (2, 3))))
    assert (bad.x, bad.y) == (1, 1)


def test_table_interpolates_and_extrapolates():
    m = CostModel("table", table=((1, 2), (5, 4), (9, 5)))
    assert m.price(3) == 3
    assert m.price(7) == Fraction(9, 2)
    assert m.price(13) == 6


def test_table_file_validation(tmp_path):
    good = tmp_path / "good.txt"
    good.write_text("# size cost\n1 1\n4 2\n16 4\n")
    assert parse_model(f"table:{good}").price(16) == 4
    bad = tmp_path / "bad.txt"
    bad.write_text("1 1\n2 3\n")
    with pytest.raises(InvalidModel):
        parse_model(f"table:{bad}")


@pytest.mark.parametrize("spec", ["cubic:1", "linear:x", "seek:a,b"])
def test_bad_specs(spec):
    with pytest.raises(InvalidModel):
        parse_model(spec)


def _ev(w, moved):
    return MoveEvent("x", w, (0, w) if moved else None, (w, 2 * w), 0, 1)


def test_ledger_one_insert_no_flush():
    led = meter(CostLedger(CostModel.linear()), [_ev(5, False)])
    assert (led.allocation_cost_total, led.reallocation_cost_total, led.b_ratio) == (5, 0, 0)


def test_ledger_two_moves_cost_twice():
    led = meter(CostLedger(CostModel.sqrt()), [_ev(5, False), _ev(5, True), _ev(5, True)])
    assert led.reallocation_cost_total == 2 * CostModel.sqrt().price(5)


def test_meter_prices_one_stream_under_many_models():
    m = Meter([parse_model(s) for s in ("constant:1", "linear:1", "sqrt:1", "seek:10,1")])
    for ev in [_ev(4, False), _ev(4, True), _ev(9, False)]:
        m(ev)
    assert [l.reallocation_cost_total for l in m.ledgers] == [1, 4, 2, 14]
    assert [l.allocation_cost_total for l in m.ledgers] == [2, 13, 5, 33]


def test_per_op_costs():
    led = CostLedger(CostModel.linear())
    led.begin_op()
    led.charge(_ev(3, False))
    led.end_op()
    led.begin_op()
    led.charge(_ev(3, True))
    led.charge(_ev(2, True))
    led.end_op()
    assert led.per_op_cost == [3, 5] and led.max_op_cost == 5


@given(st.integers(1, 10**6), st.integers(1, 10**6), st.sampled_from(["constant:2", "linear:1", "sqrt:3", "seek:10,1"]))
def test_models_monotone_and_subadditive(x, y, spec):
    f = parse_model(spec).price
    assert f(x + y) <= f(x) + f(y)
    assert f(min(x, y)) <= f(max(x, y))
