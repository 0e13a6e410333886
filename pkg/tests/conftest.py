from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from qtorus.algebra import DeformationMatrix, TorusPolynomial

TEST_THETAS = [Fraction(0), Fraction(1, 3), Fraction(1, 5), Fraction(2, 7), 0.41421356237]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def poly_strategy(d: int = 2, deg: int = 3, max_terms: int = 5):
    alpha = st.tuples(*[st.integers(-deg, deg)] * d)
    coeff = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)
    return st.dictionaries(alpha, coeff, min_size=1, max_size=max_terms).map(
        lambda c: TorusPolynomial(d, c))


def theta_strategy():
    return st.sampled_from(TEST_THETAS).map(DeformationMatrix.scalar)


def theta3_strategy():
    frac = st.integers(1, 12).flatmap(lambda q: st.integers(0, q - 1).map(lambda p: Fraction(p, q)))

    def build(t):
        a, b, c = t
        return DeformationMatrix([[0, a, b], [(-a) % 1, 0, c], [(-b) % 1, (-c) % 1, 0]])
    return st.tuples(frac, frac, frac).map(build)
