import pytest

from palwabp import bundled_instance
from palwabp.core import Instance, Station
from palwabp.instance_io import seeded_suite

# second line of the HESKIA_64 illustration: workers W3, W2, W6 (1-based tasks)
HESKIA_LINE2 = (
    ("W3", (1, 2, 3, 5, 6, 7, 8, 9, 10, 11, 12, 15, 18, 19, 23, 26)),
    ("W2", (13, 14, 20, 22)),
    ("W6", (4, 16, 17, 21, 24, 25, 27, 28)),
)


def stations_from(inst, layout):
    return tuple(Station(inst.workers.index(w), tuple(t - 1 for t in tasks)) for w, tasks in layout)


@pytest.fixture(scope="session")
def toy():
    return bundled_instance("toy5")


@pytest.fixture(scope="session")
def heskia():
    return bundled_instance("heskia64")


@pytest.fixture(scope="session")
def heskia_line2(heskia):
    return stations_from(heskia, HESKIA_LINE2)


@pytest.fixture(scope="session")
def small_suite():
    return seeded_suite(30, seed=3)


def single_task(p=7):
    return Instance(1, frozenset(), ("A",), ((p,),))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
