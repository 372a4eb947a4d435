import numpy as np
import pytest

from rvarscore.core import LevelPair


@pytest.fixture
def central():
    return LevelPair(0.1, 0.9)


@pytest.fixture
def tail():
    return LevelPair(0.01, 0.05)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
