import itertools
import math
from collections import Counter

import numpy as np
import pytest

from clusterdyn.core import Node, Role, Team, make_clustering
from clusterdyn.synthetic import SyntheticSpec, generate_stream

# A 24-node worked pair with a known confusion matrix (WORKED_COUNTS) and cell
# table (WORKED_CELLS). Rows and columns follow the list order below.
WORKED_SOURCE = [
    [0, 1], [2, 3], [4, 5, 6], [7, 8], [9, 10, 14],
    [11, 13, 15], [16, 17, 18], [12, 20, 22, 21], [19, 23],
]
WORKED_DEST = [
    [0, 1], [2, 3], [4, 5, 6, 7, 8], [11, 13], [15, 16],
    [17, 18], [12, 20, 22], [9, 10, 14, 21], [19, 23],
]
WORKED_COUNTS = [
    [2, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 2, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 3, 0, 0, 0, 0, 0, 0],
    [0, 0, 2, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 3, 0],
    [0, 0, 0, 2, 1, 0, 0, 0, 0],
    [0, 0, 0, 0, 1, 2, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 3, 1, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 2],
]
WORKED_CELLS = [
    [0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0.092121, 0, 0, 0, 0, 0, 0],
    [0, 0, 0.110161, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0.05188, 0],
    [0, 0, 0, 0.048747, 0.107707, 0, 0, 0, 0],
    [0, 0, 0, 0, 0.107707, 0.048747, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0.05188, 0.166667, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0],
]

# home: ids 0..11 (0 is the home goal frame), visitors: 12..23 (23 the visitor goal)
WORKED_NODES = {
    v: Node(v, Team.HOME if v < 12 else Team.VISITOR, Role.GOAL if v in (0, 23) else Role.PLAYER)
    for v in range(24)
}

CORNER_BURSTS = (320, 845, 1360, 1870, 2430, 3135, 3705, 4205, 4715, 5180)


def vi_oracle(x_clusters, y_clusters):
    """VI from joint and marginal entropies of node labels (natural log, converted)."""
    lx = {v: i for i, c in enumerate(x_clusters) for v in c}
    ly = {v: j for j, c in enumerate(y_clusters) for v in c}
    nodes = sorted(lx)
    n = len(nodes)

    def h(counter):
        return -sum(c / n * math.log(c / n) for c in counter.values())

    hx = h(Counter(lx[v] for v in nodes))
    hy = h(Counter(ly[v] for v in nodes))
    hxy = h(Counter((lx[v], ly[v]) for v in nodes))
    return (2 * hxy - hx - hy) / math.log(2)


def set_partitions(items):
    """All set partitions of ``items`` (brute force)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def random_partition(rng, nodes, max_clusters=None, min_size=1):
    nodes = list(nodes)
    rng.shuffle(nodes)
    n = len(nodes)
    kmax = n // min_size if max_clusters is None else min(max_clusters, n // min_size)
    k = int(rng.integers(1, kmax + 1))
    labels = list(range(k)) * min_size + list(rng.integers(0, k, size=n - k * min_size))
    rng.shuffle(labels)
    groups = {}
    for v, lab in zip(nodes, labels):
        groups.setdefault(lab, []).append(v)
    return list(groups.values())


@pytest.fixture
def worked_pair():
    x = make_clustering(WORKED_SOURCE, range(24), "soccer")
    y = make_clustering(WORKED_DEST, range(24), "soccer")
    return x, y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corner_match():
    spec = SyntheticSpec(burst_times=CORNER_BURSTS)
    return generate_stream(spec, seed=1)


# --------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement summary to the running criterion."""
    def _note(text):
        request.node.criterion_note = text
        print(text)
    return _note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ACCEPTANCE_RESULTS[marker.args[0]] = (
            marker.args[1],
            "PASS" if rep.outcome == "passed" else "FAIL",
            getattr(item, "criterion_note", ""),
        )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, status, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number:2d} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
