import math

import numpy as np
import pytest
from scipy import special

from veinforge.metrics.kforms import KFormParams, kform_pdf



def exact_moment_data(kurtosis: float, variance: float, reps: int = 4) -> np.ndarray:
    """Symmetric data with population kurtosis/variance equal to the targets.

    Four atoms +-a, +-b carry weight 1/16 each and the rest is zeros. With
    s = a^2 + b^2 and q = a^4 + b^4 we need m2 = s/8 and m4 = q/8.
    Feasible for 4 <= kurtosis <= 8.
    """
    if not 4.0 <= kurtosis <= 8.0:
        raise ValueError("construction covers kurtosis in [4, 8]")
    s = 8.0 * variance
    q = kurtosis * s * s / 8.0
    disc = math.sqrt(2.0 * q - s * s)
    a2, b2 = (s + disc) / 2.0, (s - disc) / 2.0
    a, b = math.sqrt(a2), math.sqrt(b2)
    block = np.array([a, -a, b, -b] + [0.0] * 12)
    return np.tile(block, reps)


def sample_kform(params: KFormParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Accept-reject draws from a K-form with a Laplace envelope (p >= 1)."""
    if params.p < 1:
        raise ValueError("Laplace envelope needs a bounded density (p >= 1)")
    b = math.sqrt(2.0 / params.c)
    rate = b if params.p == 1 else 0.5 * b
    grid = np.linspace(0.0, 60.0 / rate, 4001)[1:]
    envelope = 0.5 * rate * np.exp(-rate * grid)
    bound = 1.01 * float(np.max(kform_pdf(grid, params) / envelope))
    out = []
    while sum(len(o) for o in out) < n:
        m = 2 * n
        x = rng.laplace(scale=1.0 / rate, size=m)
        g = 0.5 * rate * np.exp(-rate * np.abs(x))
        if params.p == 1:
            # the p = 1 density is exactly Laplace(rate = b): accept all
            accept = np.ones(m, dtype=bool)
        else:
            accept = rng.random(m) * bound * g <= kform_pdf(x, params)
        out.append(x[accept])
    return np.concatenate(out)[:n]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# frozen reference values, computed once with scipy.special.kv
K0_AT_1 = float(special.kv(0, 1.0))


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
