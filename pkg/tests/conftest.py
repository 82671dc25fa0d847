import numpy as np
import pytest
from hypothesis import strategies as st

from gwnary.offspring import Binomial, Finite, Geometric, OneOrMany, Poisson

FAMILY_SPECS = [
    Geometric(0.8),
    Geometric(0.3),
    Poisson(3.3509),
    Poisson(0.7),
    OneOrMany(8 / 9, 3),
    OneOrMany(0.5, 5),
    Binomial(9, 0.9),
    Binomial(3, 0.2),
    Finite((0.2, 0.3, 0.5)),
    Finite((0.1, 0.0, 0.2, 0.0, 0.3, 0.15, 0.25)),
]


@pytest.fixture(params=FAMILY_SPECS, ids=lambda s: repr(s))
def family_spec(request):
    return request.param


@st.composite
def finite_specs(draw, max_len=7, min_len=1):
    n = draw(st.integers(min_len, max_len))
    raw = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    if sum(raw) == 0.0:
        raw[-1] = 1.0
    w = np.asarray(raw) / sum(raw)
    return Finite(tuple(w))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("]")[1].split(".")[0])):
            terminalreporter.write_line(line)
