import numpy as np
import pytest

from ptgame.game import case1, make_scenario


@pytest.fixture
def s():
    return case1()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def central_diff(f, x, i, h=1e-5):
    xp, xm = x.copy(), x.copy()
    xp[i] += h
    xm[i] -= h
    return (f(xp) - f(xm)) / (2 * h)


def random_scenario(rng, n=None, homogeneous=False):
    n = n or int(rng.integers(2, 6))
    m = int(rng.integers(2, 5))
    a = np.full(n, rng.uniform(0.2, 2.0)) if homogeneous else rng.uniform(0.2, 2.0, n)
    support = np.sort(rng.choice(np.arange(5.0, 80.0, 5.0), m, replace=False))
    probs = rng.dirichlet(np.ones(m))
    probs[-1] = 1.0 - probs[:-1].sum()
    return make_scenario(a, rng.uniform(0, 20, n), rng.uniform(1, 10, n), support, probs)


ACCEPTANCE: dict[int, str] = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    """Log one acceptance line and fail the calling test when the criterion is not met."""
    line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
