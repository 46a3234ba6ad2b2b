from pathlib import Path

import numpy as np
import pytest

from specstack import _accel

DATA = Path(__file__).parent / "data"


@pytest.fixture(params=_accel.available_backends())
def backend(request):
    """Run a test once per kernel backend."""
    with _accel.using_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir():
    return DATA


# filled by test_acceptance.py, one entry per acceptance criterion
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, name, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"C{number:<2} {'PASS' if passed else 'FAIL'}  {name}: {detail}")
