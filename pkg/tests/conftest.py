import numpy as np
import pytest
from hypothesis import settings

from hmofdm.config import ChannelProfile, OfdmConfig

settings.register_profile("hmofdm", max_examples=40, deadline=None)
settings.load_profile("hmofdm")


@pytest.fixture
def cfg():
    return OfdmConfig()


@pytest.fixture
def small_cfg():
    return OfdmConfig(n_subcarriers=16, cp_length=4, blocks_per_frame=3, n_rx_antennas=4)


@pytest.fixture
def profile():
    return ChannelProfile()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(criterion: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        print(ACCEPTANCE_LINES[-1])

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
