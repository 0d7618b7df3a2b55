import numpy as np
import pytest
from hypothesis import settings

from evflow import _backend
from evflow.datatypes import EdgeImage, SensorGeometry

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


def edge_from(rows):
    """EdgeImage from a list of strings, '#' = edge pixel."""
    bits = np.array([[c == "#" for c in r] for r in rows], np.uint8)
    return EdgeImage(SensorGeometry(bits.shape[1], bits.shape[0]), bits)


def as_rows(edge):
    return ["".join("#" if b else "." for b in row) for row in edge.bits]


@pytest.fixture(params=_backend.available())
def backend(request):
    previous = _backend.use(request.param)
    yield request.param
    _backend.use(previous)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
