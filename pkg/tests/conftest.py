from fractions import Fraction

import pytest

from costrealloc.harness import RunConfig, run
from costrealloc.harness.trace import from_ops


def replay(ops, mode="amortized", epsilon=Fraction(1, 2), **kw):
    """Run a list of ops under the oracle and return the report."""
    trace = from_ops(ops)
    return run(trace, RunConfig(mode, epsilon, validate=True, **kw))


@pytest.fixture
def replay_ops():
    return replay
