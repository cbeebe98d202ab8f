"""Shared fixtures."""

import numpy as np
import pytest

from wqed2p.core_model import HIGH_Q, LOW_Q, TWO_PI


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(all="ignore"):
        yield


@pytest.fixture
def low_q():
    return LOW_Q


@pytest.fixture
def high_q():
    return HIGH_Q


def energy(e_half: float) -> float:
    """Total energy in angular units for a pair at E/2 = e_half (units 2 pi c / l)."""
    return 2.0 * e_half * TWO_PI


#: One verdict line per acceptance criterion, filled by tests/test_acceptance.py.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
