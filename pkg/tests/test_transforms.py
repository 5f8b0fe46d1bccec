import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mgframes.transforms import Abc, AlphaBeta, Dq, clarke, inv_clarke, inv_park, park

finite = st.floats(-1e4, 1e4, allow_nan=False)
angle = st.floats(-20.0, 20.0, allow_nan=False)
S3 = math.sqrt(3) / 2


def balanced(v, theta):
    return Abc(v * math.cos(theta), v * math.cos(theta - 2 * math.pi / 3),
               v * math.cos(theta + 2 * math.pi / 3))


@pytest.mark.parametrize("x, expected", [
    ((1, -0.5, -0.5), (1, 0)),
    ((0, 0, 0), (0, 0)),
    ((0, S3, -S3), (0, 1)),
])
def test_clarke_examples(x, expected):
    assert np.allclose(clarke(Abc(*x)), expected, atol=1e-15)


def test_inv_clarke_examples():
    assert np.allclose(inv_clarke(AlphaBeta(1, 0)), (1, -0.5, -0.5))
    assert inv_clarke(AlphaBeta(0, 0)) == (0, 0, 0)


def test_park_examples():
    assert np.allclose(park(AlphaBeta(1, 0), 0), (1, 0))
    assert np.allclose(park(AlphaBeta(1, 0), math.pi / 2), (0, -1), atol=1e-15)
    assert np.allclose(inv_park(Dq(1, 0), 0), (1, 0))


@given(st.floats(0, 1e3), angle)
def test_synchronous_vector_is_dc(v, theta):
    d, q = park(AlphaBeta(v * math.cos(theta), v * math.sin(theta)), theta)
    assert d == pytest.approx(v, abs=1e-12 * max(v, 1))
    assert q == pytest.approx(0, abs=1e-12 * max(v, 1))


@given(st.floats(0, 1e3), angle)
def test_inv_park_forward(v, theta):
    a, b = inv_park(Dq(v, 0), theta)
    assert a == pytest.approx(v * math.cos(theta), abs=1e-12 * max(v, 1))
    assert b == pytest.approx(v * math.sin(theta), abs=1e-12 * max(v, 1))


@given(finite, finite, angle)
def test_park_round_trip_and_norm(a, b, theta):
    x = AlphaBeta(a, b)
    y = park(x, theta)
    scale = max(1.0, math.hypot(a, b))
    assert math.hypot(*y) == pytest.approx(math.hypot(a, b), abs=1e-12 * scale)
    assert np.allclose(inv_park(y, theta), x, rtol=0, atol=1e-12 * scale)


@given(finite, finite)
def test_clarke_round_trip_zero_sequence_free(a, b):
    x = Abc(a, b, -a - b)
    scale = max(1.0, abs(a), abs(b))
    assert np.allclose(inv_clarke(clarke(x)), x, rtol=0, atol=1e-12 * scale)


@given(finite, finite, finite, finite, finite, finite, finite, finite)
def test_clarke_linear(x1, x2, x3, y1, y2, y3, ca, cb):
    lhs = clarke(Abc(ca * x1 + cb * y1, ca * x2 + cb * y2, ca * x3 + cb * y3))
    cx, cy = clarke(Abc(x1, x2, x3)), clarke(Abc(y1, y2, y3))
    rhs = [ca * u + cb * w for u, w in zip(cx, cy)]
    scale = max(1.0, *(abs(v) for v in (*lhs, *rhs)))
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * scale)


@given(st.floats(0, 1e3), angle)
def test_balanced_amplitude_invariance(v, theta):
    ab = clarke(balanced(v, theta))
    assert math.hypot(*ab) == pytest.approx(v, abs=1e-12 * max(v, 1))


def test_vectorized_components():
    t = np.linspace(0, 0.02, 50)
    x = Abc(
        311 * np.cos(100 * np.pi * t), 311 * np.cos(100 * np.pi * t - 2 * np.pi / 3),
        311 * np.cos(100 * np.pi * t + 2 * np.pi / 3))
    d, q = park(clarke(x), 100 * np.pi * t)
    assert np.allclose(d, 311) and np.allclose(q, 0, atol=1e-9)
