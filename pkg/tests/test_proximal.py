import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mtsparse.proximal import prox_l1, prox_l21

matrices = arrays(np.float64, (5, 3), elements=st.floats(-50, 50, allow_nan=False))


def test_l21_identity_at_zero_threshold(rng):
    v = rng.standard_normal((4, 3))
    np.testing.assert_array_equal(prox_l21(v, 0.0), v)


def test_l21_hand_value():
    np.testing.assert_allclose(prox_l21(np.array([[3.0, 4.0]]), 2.0), [[1.8, 2.4]], rtol=1e-15)


def test_l21_full_shrinkage_and_zero_row():
    out = prox_l21(np.array([[0.3, 0.4], [0.0, 0.0], [3.0, 4.0]]), 0.5)
    np.testing.assert_array_equal(out[:2], 0.0)
    assert np.all(np.isfinite(out))


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        prox_l21(np.ones((2, 2)), -1.0)
    with pytest.raises(ValueError):
        prox_l1(np.ones(2), -0.1)


def test_l1_values():
    np.testing.assert_array_equal(prox_l1(np.array([3.0, -1.0]), 2.0), [1.0, 0.0])
    np.testing.assert_array_equal(prox_l1(np.array([3.0, -1.0]), 0.0), [3.0, -1.0])
    np.testing.assert_array_equal(prox_l1(np.zeros(4), 1.0), np.zeros(4))


@settings(max_examples=60, deadline=None)
@given(a=matrices, b=matrices, tau=st.floats(0, 30))
def test_l21_non_expansive(a, b, tau):
    assert np.linalg.norm(prox_l21(a, tau) - prox_l21(b, tau)) <= np.linalg.norm(a - b) * (1 + 1e-12) + 1e-12


@settings(max_examples=60, deadline=None)
@given(v=matrices, tau=st.floats(0.01, 30))
def test_l21_row_support(v, tau):
    out = prox_l21(v, tau)
    zero_rows = np.all(out == 0, axis=1)
    norms = np.linalg.norm(v, axis=1)
    clear = np.abs(norms - tau) > 1e-12
    np.testing.assert_array_equal(zero_rows[clear], (norms <= tau)[clear])
