from fractions import Fraction

import pytest

from wallcross.bundle import GradedBundle, Piece
from wallcross.cohomology import CohClass, IntersectionForm


def make_e1(edges=((0, 1),), omega=(1, 0)):
    form = IntersectionForm.diagonal([1, -1])
    pieces = (Piece(1, CohClass.of(1, 1)), Piece(1, CohClass.of(1, -1)))
    return GradedBundle(form, CohClass(omega), pieces, edges)


def make_e5():
    form = IntersectionForm.diagonal([1, -1, -1])
    pieces = (
        Piece(1, CohClass.of(1, 1, 0)),
        Piece(1, CohClass.of(1, -1, 1)),
        Piece(1, CohClass.of(1, 0, -1)),
    )
    return GradedBundle(form, CohClass.of(1, 0, 0), pieces, ((0, 1), (1, 2)))


def make_line_bundles(edges, length=3):
    """All pieces trivial: only the quiver matters (cone tests)."""
    form = IntersectionForm.diagonal([1, -1])
    pieces = tuple(Piece(1, CohClass.of(0, 0)) for _ in range(length))
    return GradedBundle(form, CohClass.of(1, 0), pieces, edges)


@pytest.fixture
def e1():
    return make_e1()


@pytest.fixture
def e5():
    return make_e5()


@pytest.fixture
def half():
    return Fraction(1, 2)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
