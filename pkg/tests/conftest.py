import pytest

from onebit_emr.signal import noise_only, single_pu


@pytest.fixture
def h0_small():
    return noise_only(m=4, n=64)


@pytest.fixture
def h1_small():
    return single_pu(m=4, n=64, snr_db=0.0)


ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
