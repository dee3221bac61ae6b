import pytest

from gwrg.ball import build_ball
from gwrg.host import make_host

SMALL_FIXTURES = [("z1", 3), ("z2", 3), ("btree2", 4), ("tree-d3", 3), ("hyptree", 3),
                  ("lamplighter", 2)]


@pytest.fixture(scope="session")
def ball_cache():
    cache = {}

    def get(host, n):
        if (host, n) not in cache:
            cache[host, n] = build_ball(make_host(host), n)
        return cache[host, n]

    return get


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
