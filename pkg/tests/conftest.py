import numpy as np
import pytest

from trusstopo import load_benchmark, make_instance


def axial_bar(length=120.0, area_set=(0.5, 1.0, 2.0), force=10.0, modulus=3.0e4):
    return make_instance(
        name="axial_bar",
        dimension=2,
        coords={1: (0.0, 0.0), 2: (length, 0.0)},
        supports={1: (True, True), 2: (False, True)},
        connectivity=[(1, 2)],
        groups=[[1]],
        loads=[{2: (force, 0.0)}],
        size_set=area_set,
        density=0.1,
        elastic_modulus=modulus,
        stress_limit=20.0,
        displacement_limit=0.5,
    )


def two_bar(force=(3.0, -8.0), sizes=None, disp=None, modulus=1.0e3):
    """Apex 3 hangs off two pinned supports; statically determinate."""
    return make_instance(
        name="two_bar",
        dimension=2,
        coords={1: (0.0, 0.0), 2: (4.0, 0.0), 3: (1.0, 3.0)},
        supports={1: (True, True), 2: (True, True)},
        connectivity=[(1, 3), (2, 3)],
        groups=[[1], [2]],
        loads=[{3: force}],
        size_set=sizes or [0.1 * k for k in range(1, 21)],
        density=1.0,
        elastic_modulus=modulus,
        stress_limit=10.0,
        displacement_limit=disp,
    )


def three_bar(sizes=None):
    """Classic three-bar truss, two load cases, one group per bar."""
    return make_instance(
        name="three_bar",
        dimension=2,
        coords={1: (-100.0, 0.0), 2: (0.0, 0.0), 3: (100.0, 0.0), 4: (0.0, -100.0)},
        supports={1: (True, True), 2: (True, True), 3: (True, True)},
        connectivity=[(1, 4), (2, 4), (3, 4)],
        groups=[[1], [2], [3]],
        loads=[{4: (20.0, -20.0)}, {4: (-20.0, -20.0)}],
        size_set=sizes or [0.1 * k for k in range(1, 21)],
        density=0.1,
        elastic_modulus=1.0e4,
        stress_limit=20.0,
        displacement_limit=0.3,
    )


@pytest.fixture
def bar():
    return axial_bar()


@pytest.fixture
def triangle():
    return two_bar()


@pytest.fixture(scope="session")
def ten():
    return load_benchmark("ten_bar")


@pytest.fixture(scope="session")
def twentyfive():
    return load_benchmark("twentyfive_bar_case1")


@pytest.fixture(scope="session")
def fiftytwo():
    return load_benchmark("fiftytwo_bar")


@pytest.fixture(scope="session")
def seventytwo():
    return load_benchmark("seventytwo_bar")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one verdict line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
