import numpy as np
import pytest

from tubal.sampling import TangentSpace
from tubal.tsvd import t_svd_reduced


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)


def circconv(a, b):
    """Circular convolution of two tubes, by the definition."""
    n = len(a)
    return np.array([sum(a[t] * b[(k - t) % n] for t in range(n)) for k in range(n)])


def t_product_bruteforce(A, B):
    n1, n2, n3 = A.shape
    n4 = B.shape[1]
    C = np.zeros((n1, n4, n3))
    for i in range(n1):
        for j in range(n4):
            for k in range(n2):
                C[i, j] += circconv(A[i, k], B[k, j])
    return C


def random_tangent(n1, n2, n3, r, seed):
    G = np.random.default_rng(seed).standard_normal((n1, n2, n3))
    f = t_svd_reduced(G, r)
    return f, TangentSpace.from_factors(f)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
