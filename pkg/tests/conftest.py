import pytest

from parachar.charfn import abelian_structure
from parachar.frobenius import FrobTwist
from parachar.induction import sigma_torus
from parachar.matgroup import GroupContext

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def make_structure(kind: str, n: int, q: int, r: int, twist=None):
    ctx = GroupContext.make(kind, n, q, r)
    tw = FrobTwist.from_one_line(twist, kind) if twist else FrobTwist.split(n, kind)
    T = sigma_torus(ctx, tw)
    return ctx, tw, T, abelian_structure(T)


@pytest.fixture(scope="session")
def gl2_q3():
    return make_structure("GL", 2, 3, 1)


@pytest.fixture(scope="session")
def gl2_q2():
    return make_structure("GL", 2, 2, 1)


@pytest.fixture(scope="session")
def gl2_q2_swap():
    return make_structure("GL", 2, 2, 1, [2, 1])


@pytest.fixture(scope="session")
def gl3_q2():
    return make_structure("GL", 3, 2, 1)
