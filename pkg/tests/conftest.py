import numpy as np
import pytest

from bosepair.model import LevelSpectrum, PairSector, equal_spacing_spectrum

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def two_level():
    sp = LevelSpectrum.from_arrays([0.0, 1.0])
    return sp, PairSector.for_spectrum(sp, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def equal(L, M):
    sp = equal_spacing_spectrum(L)
    return sp, PairSector.for_spectrum(sp, M)
