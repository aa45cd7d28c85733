import math

import pytest

from kmrstrip.surface import build_graph_piece
from kmrstrip.weierstrass import SurfaceParams

GRID_THETA = (0.3, 0.7, 1.1, 1.5)
GRID_ALPHA = (0.0, 0.5, 1.0, math.pi / 2)
GRID = [(t, a) for t in GRID_THETA for a in GRID_ALPHA]

ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail=""):
    """Store the pass/fail line of an acceptance criterion for the terminal summary."""
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
    ACCEPTANCE_LINES[number] = line
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def sp_generic():
    return SurfaceParams(1.0, 0.7)


@pytest.fixture(scope="session")
def mesh_generic(sp_generic):
    return build_graph_piece(sp_generic, (64, 64))
