import numpy as np
import pytest

from radialtv import DiscreteMeasure, SamplingScheme


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_measure(rng, M=3, d=2, radius=0.45):
    pts = []
    while len(pts) < M:
        x = rng.uniform(-radius, radius, d)
        if np.linalg.norm(x) <= radius:
            pts.append(x)
    amps = rng.uniform(1, 2, M) * np.exp(2j * np.pi * rng.uniform(size=M))
    return DiscreteMeasure(np.array(pts), amps)


def unit_dirs(angles):
    a = np.asarray(angles, dtype=float)
    return np.stack([np.cos(a), np.sin(a)], axis=1)


def full_scheme(dirs, N):
    return SamplingScheme(dirs, np.arange(-N, N + 1), N)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(k: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[k] = f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
