from fractions import Fraction

from hypothesis import HealthCheck, given, settings, strategies as st

from costrealloc import AmortizedAllocator, find_boundary_class
from costrealloc.harness import RunConfig, run
from costrealloc.harness.trace import from_ops
from costrealloc.oracle import brute_force_boundary


@st.composite
def op_lists(draw, max_ops=120, max_size=96):
    n = draw(st.integers(0, max_ops))
    ops, live = [], []
    for k in range(n):
        if live and draw(st.booleans()):
            ops.append(("D", live.pop(draw(st.integers(0, len(live) - 1)))))
        else:
            ops.append(("I", f"o{k}", draw(st.integers(1, max_size))))
            live.append(f"o{k}")
    return ops


EPS = st.sampled_from([Fraction(1, 2), Fraction(1, 4), Fraction(1, 16)])
SLOW = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@SLOW
@given(op_lists(), EPS, st.sampled_from(["amortized", "checkpointed", "deamortized"]))
def test_random_traces_keep_every_invariant(ops, eps, mode):
    rep = run(from_ops(ops), RunConfig(mode, eps, validate=True))
    assert rep.violations == []


@SLOW
@given(op_lists(), EPS, st.integers(1, 8))
def test_boundary_scan_matches_brute_force(ops, eps, pending):
    a = AmortizedAllocator(eps / 2)
    for op in ops:
        a.insert(op[1], op[2]) if op[0] == "I" else a.delete(op[1])
    assert find_boundary_class(a.state, pending) == brute_force_boundary(a.state, pending)
