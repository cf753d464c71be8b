import numpy as np
import pytest


def random_metric(rng, k):
    """Shortest-path closure of random positive weights: always a metric."""
    w = rng.uniform(0.2, 2.0, size=(k, k))
    d = np.minimum(w, w.T)
    np.fill_diagonal(d, 0.0)
    for m in range(k):
        d = np.minimum(d, d[:, m:m + 1] + d[m:m + 1, :])
    return d


def random_probability(rng, k):
    p = rng.exponential(size=k)
    return p / p.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, text: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {text}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
