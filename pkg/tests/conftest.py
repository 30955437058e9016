import numpy as np
import pytest
from hypothesis import settings

from strichartz_lab.spectral import GridSpec, default_bump

settings.register_profile("lab", max_examples=60, deadline=None)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def bump():
    return default_bump()


@pytest.fixture(scope="session")
def grid1d():
    return GridSpec(1, 64.0, 256, 16.0, 256, t0=-8.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def record_criterion():
    """Store one verdict line per acceptance criterion for the terminal summary."""
    def record(k: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(_ACCEPTANCE[k])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
