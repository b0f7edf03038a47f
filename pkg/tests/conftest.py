import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from stereoconv.core import DisparityMap, Frame

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_frame(rng, h, w):
    return Frame(rng.random((h, w, 3)).astype(np.float32))


def random_disparity(rng, h, w, top=6.0, integer=False):
    d = rng.random((h, w)) * min(top, w)
    if integer:
        d = np.floor(d)
    return DisparityMap(d.astype(np.float32))


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record a one-line PASS/FAIL for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
