import numpy as np
import pytest

from qcfr import CodeParams

# Acceptance outcomes, filled in by tests/test_acceptance.py and echoed at session end.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def f5_code():
    return CodeParams(3, 5, (1, 1, 2))


@pytest.fixture
def f8_code():
    return CodeParams(3, 8, (1, 1, 2))  # (1, 1, z) with z = x


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
