import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rcx.core import Alphabet
from rcx.counts import Sample

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def ab():
    return Alphabet.of("ab")


@pytest.fixture
def aabab(ab):
    return Sample.from_text(ab, "aabab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
