import os
import sys

import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from polaron.bulk import ModelParams  # noqa: E402
from polaron.grassmann import FULL, QUOTIENT, GrassmannNumber  # noqa: E402

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)


def grassmann_strategy(algebra=QUOTIENT, parity=None):
    """Random elements of ``algebra``; ``parity`` restricts to one grade."""
    def build(values):
        c = np.array(values, dtype=complex)
        if parity is not None:
            c = c * (algebra.parities == parity)
        return GrassmannNumber(c, algebra)
    return st.lists(cplx, min_size=algebra.dim, max_size=algebra.dim).map(build)


def random_grassmann(rng, algebra=QUOTIENT, parity=None):
    c = rng.normal(size=algebra.dim) + 1j * rng.normal(size=algebra.dim)
    if parity is not None:
        c = c * (algebra.parities == parity)
    return GrassmannNumber(c, algebra)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def nondiag_params():
    def make(N, eta=0.3 + 0.1j):
        return ModelParams.open(N, eta, 0.4 + 0.2j, -0.7 + 0.1j, alpha_m=0.3,
                                beta_m=-0.2 + 0.1j, alpha_p=0.5, beta_p=0.7)
    return make


@pytest.fixture
def diag_params():
    def make(N, eta=0.3 + 0.1j):
        return ModelParams.open(N, eta, 0.4 + 0.2j, -0.7 + 0.1j)
    return make


__all__ = ["FULL", "QUOTIENT", "cplx", "grassmann_strategy", "random_grassmann"]
