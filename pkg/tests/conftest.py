import numpy as np
import pytest

from la3d import _backend

BACKENDS = ["python"] + (["cython"] if _backend.has_compiled() else [])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def random_frame(rng, h, w):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
