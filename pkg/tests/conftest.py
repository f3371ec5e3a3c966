import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_sl2(rng, scale=1.0):
    """A random SL(2) matrix with entries of order ``scale``."""
    from cocyclelab import Mat2
    while True:
        a, b, c = rng.normal(0, scale, 3)
        if abs(a) > 1e-3:
            return Mat2(a, b, c, (1 + b * c) / a)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(num, ok, detail):
    """Store and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[num] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for num in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[num])
