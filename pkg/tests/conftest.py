import itertools

import numpy as np
import pytest

import hetfact
from hetfact.factor import Variable, evaluate, make_factor


@pytest.fixture(scope="session")
def example_net():
    return hetfact.load_network(hetfact.data_path("figure1.net"))


@pytest.fixture(scope="session")
def deputized_example(example_net):
    return hetfact.deputize(example_net)


@pytest.fixture(scope="session")
def example_hf(deputized_example):
    return hetfact.build_hf(*deputized_example)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def brute_combine(f, g, decls):
    """Reference combination by explicit enumeration of assignments and value pairs."""
    ops = {d.variable.id: d.op for d in decls}
    by_id = {v.id: v for v in f.scope + g.scope}
    scope = sorted(by_id.values())
    shared = [v for v in scope if v.id in ops and v in f and v in g]
    table = np.zeros([v.frame_size for v in scope])
    for assignment in itertools.product(*(range(v.frame_size) for v in scope)):
        a = dict(zip(scope, assignment))
        total = 0.0
        pairs = [
            [(x, y) for x in range(v.frame_size) for y in range(v.frame_size)
             if ops[v.id](x, y) == a[v]]
            for v in shared
        ]
        for choice in itertools.product(*pairs):
            fa, ga = dict(a), dict(a)
            for v, (x, y) in zip(shared, choice):
                fa[v], ga[v] = x, y
            total += evaluate(f, fa) * evaluate(g, ga)
        table[assignment] = total
    return make_factor(scope, table.ravel())


def binary(i, name):
    return Variable(i, name, 2)


# -- acceptance reporting ----------------------------------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[marker] = "PASS" if report.passed else "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"{status} criterion {number:>2}: {title}")
