from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from costrealloc import InvalidArgument, LayoutState, Residency, size_class, validate_layout
from costrealloc.core import ObjectRecord, Region, buffer_capacity


@pytest.mark.parametrize("length, cls", [(1, 1), (8, 4), (5, 3), (2, 2), (7, 3), (1024, 11)])
def test_size_class_examples(length, cls):
    assert size_class(length) == cls


@pytest.mark.parametrize("bad", [0, -3])
def test_size_class_rejects_nonpositive(bad):
    with pytest.raises(InvalidArgument):
        size_class(bad)


@given(st.integers(min_value=0, max_value=60))
def test_size_class_powers_of_two(k):
    assert size_class(2**k) == k + 1


@given(st.integers(1, 10**9), st.integers(1, 10**9))
def test_size_class_monotone(a, b):
    lo, hi = sorted((a, b))
    assert size_class(lo) <= size_class(hi)
    c = size_class(a)
    assert 2 ** (c - 1) <= a < 2**c


@pytest.mark.parametrize("vol, eps, cap", [(8, "1/2", 4), (3, "1/2", 1), (1, "1/4", 0), (0, "1/8", 0)])
def test_buffer_capacity_examples(vol, eps, cap):
    assert buffer_capacity(vol, Fraction(eps)) == cap


def test_empty_state_is_valid():
    assert validate_layout(LayoutState(Fraction(1, 2))) == []


def test_misplaced_object_flags_payload_purity():
    st_ = LayoutState(Fraction(1, 2))
    rec = ObjectRecord(st_.new_oid(), "x", 2, 2, 0, Residency.PAYLOAD)
    reg = Region(3, 0, 4, 2, payload=[rec])
    st_.regions.append(reg)
    st_.objects["x"] = rec
    st_.records[rec.oid] = rec
    st_.volume = 2
    names = [v.invariant for v in validate_layout(st_)]
    assert "payload purity" in names


def test_layout_rejects_bad_epsilon():
    with pytest.raises(InvalidArgument):
        LayoutState(Fraction(3, 4))
