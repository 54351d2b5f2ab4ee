import numpy as np
import pytest

from powermod.core import (
    CounterSchema,
    NormalizedVector,
    SimilarityBounds,
    Vector,
)


@pytest.fixture
def schema2():
    return CounterSchema(names=("alpha", "beta"))


@pytest.fixture
def schema1():
    return CounterSchema(names=("alpha",))


def make_vec(counters, p=1.0, trace="t", seq=0):
    return Vector(p_dynamic=p, counters=np.asarray(counters, dtype=float), trace_id=trace, seq=seq)


def make_nv(counters, p=1.0, trace="t", seq=0):
    return NormalizedVector(
        p_dynamic=p, counters=np.asarray(counters, dtype=float), trace_id=trace, seq=seq
    )


@pytest.fixture
def bounds():
    return SimilarityBounds(0.9)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance pass/fail lines where they are always visible."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
