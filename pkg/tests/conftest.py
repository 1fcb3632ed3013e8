import numpy as np
import pytest

from dydd.estimation import CLSProblem


def make_problem(rng, n, m1=None, diagonal_weights=True, noise=0.01):
    """Random well-conditioned CLS problem in the scenario generator's style:
    uniform state block with a 2*sqrt(m0) diagonal boost, indicator
    observation rows, identity weights."""
    m0 = n + max(1, n // 4)
    m1 = m1 if m1 is not None else 2 * n
    h0 = rng.uniform(-1.0, 1.0, (m0, n))
    h0[:n, :n] += 2.0 * np.sqrt(m0) * np.eye(n)
    x_true = rng.standard_normal(n)
    y0 = h0 @ x_true + noise * rng.standard_normal(m0)
    h1 = np.zeros((m1, n))
    h1[np.arange(m1), rng.integers(0, n, m1)] = 1.0
    y1 = h1 @ x_true + noise * rng.standard_normal(m1)
    if diagonal_weights:
        r0, r1 = np.ones(m0), np.ones(m1)
    else:
        r0, r1 = np.eye(m0), np.eye(m1)
    return CLSProblem(H0=h0, y0=y0, H1=h1, y1=y1, R0=r0, R1=r1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
