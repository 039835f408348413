import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


ACCEPTANCE_RESULTS = {}
ACCEPTANCE_TITLES = {
    1: "Naimark dilation",
    2: "RN derivative exists iff L <= K",
    3: "product-space disintegration",
    4: "tensor-product identities",
    5: "classical/quantum consistency",
    6: "covariance trace",
    7: "kernel linking",
    8: "suite determinism and runtime",
}


@pytest.fixture
def acceptance():
    def record(n, ok, detail):
        line = f"criterion {n} [{ACCEPTANCE_TITLES[n]}]: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_RESULTS[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    failed = [r.nodeid for r in terminalreporter.stats.get("failed", [])]
    if not ACCEPTANCE_RESULTS and not any("test_acceptance" in f for f in failed):
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        line = ACCEPTANCE_RESULTS.get(n)
        if line is None:
            crashed = any(f"test_criterion_{n}_" in f for f in failed)
            line = f"criterion {n} [{title}]: {'FAIL (error before measurement)' if crashed else 'not run'}"
        terminalreporter.write_line(line)
