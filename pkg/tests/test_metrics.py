import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from equirender.metrics import l1_mean, mse, psnr, rms


def test_identical():
    a = np.random.default_rng(0).random((3, 4, 4))
    assert mse(a, a) == 0.0
    assert psnr(a, a) == 99.0


def test_constant_difference():
    a = np.zeros((3, 8, 8))
    b = np.full((3, 8, 8), 0.1)
    assert mse(a, b) == pytest.approx(0.01, rel=1e-12)
    assert psnr(a, b) == pytest.approx(20.0, rel=1e-12)


def test_two_element():
    assert l1_mean([0.0, 1.0], [1.0, 0.0]) == 1.0
    assert mse([0.0, 1.0], [1.0, 0.0]) == 1.0


def test_rms_of_constant():
    assert rms(np.full(10, -0.2)) == pytest.approx(0.2, rel=1e-15)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        mse(np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError):
        psnr(np.zeros((1, 2, 2)), np.zeros((1, 2, 3)))


pairs = st.integers(1, 20).flatmap(lambda n: st.tuples(
    hnp.arrays(np.float64, n, elements=st.floats(0, 1)),
    hnp.arrays(np.float64, n, elements=st.floats(0, 1))))


@settings(max_examples=100)
@given(pairs)
def test_symmetry_and_sign(ab):
    a, b = ab
    assert mse(a, b) == mse(b, a) >= 0
    assert l1_mean(a, b) == l1_mean(b, a) >= 0
    assert psnr(a, b) == psnr(b, a)
    assert not math.isnan(psnr(a, b))
