import numpy as np
import pytest

from kernelsmith.cli import SUITES, base_point, run_suites
from kernelsmith.geometry import domain_from_spec

SPECS = {
    "disc": {"type": "circles", "centers": [[0, 0]], "radii": [1], "M": 256},
    "annulus": {"type": "circles", "centers": [[0, 0], [0, 0]], "radii": [1, 0.5], "M": 256},
    "ar3": {"type": "ar", "r": 3.0, "M": 256},
    "c3": {"type": "circles", "centers": [[0, 0], [-0.5, 0], [0.5, 0]], "radii": [1, 0.2, 0.2], "M": 256},
}

# criterion number -> (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


class _Cache:
    def __init__(self):
        self.domains = {}
        self.reports = {}

    def domain(self, name):
        if name not in self.domains:
            self.domains[name] = domain_from_spec(SPECS[name])
        return self.domains[name]

    def report(self, name):
        if name not in self.reports:
            self.reports[name] = run_suites(self.domain(name), SPECS[name], SUITES)
        return self.reports[name]


_CACHE = _Cache()


@pytest.fixture(scope="session")
def cache():
    return _CACHE


@pytest.fixture(scope="session")
def disc(cache):
    return cache.domain("disc")


@pytest.fixture(scope="session")
def annulus(cache):
    return cache.domain("annulus")


@pytest.fixture(scope="session")
def ar3(cache):
    return cache.domain("ar3")


@pytest.fixture(scope="session")
def c3(cache):
    return cache.domain("c3")


@pytest.fixture(scope="session")
def base_points(cache):
    return {k: base_point(cache.domain(k), SPECS[k]) for k in SPECS}


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
