import math

import numpy as np
import pytest
from hypothesis import settings

from jacobi_stolz.families import FamilySpec, make_family
from jacobi_stolz.jacobi_core import CoefficientModel

settings.register_profile("repo", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("repo")


def brute_polys(a, b, x, n_max):
    """Plain-float recurrence oracle, independent of the library code."""
    p = [1.0, (x - b(0)) / a(0)]
    for n in range(1, n_max):
        p.append(((x - b(n)) * p[n] - a(n - 1) * p[n - 1]) / a(n))
    return p[: n_max + 1]


def cheb_u(n, x):
    """U_n(x/2), the free orthonormal polynomial, from its trigonometric form."""
    t = math.acos(x / 2)
    return math.sin((n + 1) * t) / math.sin(t)


@pytest.fixture(scope="session")
def free():
    return make_family(FamilySpec())


@pytest.fixture(scope="session")
def intro_spec():
    return FamilySpec(kind="intro_oscillation", gamma=0.5)


@pytest.fixture(scope="session")
def intro(intro_spec):
    return make_family(intro_spec)


@pytest.fixture(scope="session")
def two_periodic():
    return make_family(FamilySpec(kind="constant", N=2, alpha=(2.0, 1.0), beta=(0.0, 0.0)))


@pytest.fixture(scope="session")
def decaying():
    """a = 1, b_n = 1/(n+1): converges fast to the free model."""
    return CoefficientModel(a=lambda n: np.ones(np.shape(n)), b=lambda n: 1.0 / (n + 1.0),
                            label="decaying")
