import random

import pytest

from prsmc import fixture
from prsmc.gen import random_mbrs
from prsmc.oracle import explore
from prsmc.terms import var


@pytest.fixture(scope="session")
def s1():
    return fixture("S1")


@pytest.fixture(scope="session")
def s1p():
    return fixture("S1prime")


@pytest.fixture(scope="session")
def s2():
    return fixture("S2")


def closed_corpus(seed: int, count: int, node_budget: int = 5000, **kw):
    """Random normal-form systems whose reachable graph from X closes."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        m = random_mbrs(rng, **kw)
        if explore(m, var("X"), node_budget).closed:
            out.append(m)
    return out


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
