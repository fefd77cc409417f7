import numpy as np
import pytest
from hypothesis import settings

from kdecoreset import Dataset, Domain, KernelSpec

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

CENTERS = np.array([[2.0, 2.0], [2.0, -2.0], [-2.0, 2.0], [-2.0, -2.0]])


def mixture(n: int, seed: int) -> np.ndarray:
    """Four unit-variance Gaussian blobs centered at (+-2, +-2)."""
    rng = np.random.default_rng(seed)
    return CENTERS[rng.integers(0, 4, n)] + rng.normal(size=(n, 2))


def random_domain_points(domain: Domain, m: int, rng) -> np.ndarray:
    D = domain.ambient_dim
    if domain.kind == "simplex":
        return rng.dirichlet(np.ones(D), size=m)
    if domain.kind == "sphere":
        return domain.project(rng.normal(size=(m, D)))
    return rng.normal(size=(m, D))


ALL_KERNELS = [
    ("gaussian", Domain.euclidean(3)),
    ("laplacian", Domain.euclidean(3)),
    ("sinc", Domain.euclidean(3)),
    ("exponential", Domain.sphere(3)),
    ("jensen_shannon", Domain.simplex(3)),
    ("hellinger", Domain.simplex(3)),
]


@pytest.fixture
def gauss2():
    return KernelSpec("gaussian", 1.0, Domain.euclidean(2))


@pytest.fixture
def mixture_dataset():
    return Dataset(mixture(512, 7), Domain.euclidean(2))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
