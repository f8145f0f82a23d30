import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reactive_setpoint.dq import (
    J,
    DqVector,
    instantaneous_power,
    inverse_park_transform,
    park_transform,
    rotate90,
    sat_circular,
    sat_scalar,
)
from reactive_setpoint.errors import InvalidArgument

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_rotate90_examples():
    assert rotate90(DqVector(1, 0)) == DqVector(0, 1)
    assert rotate90(DqVector(0, 1)) == DqVector(-1, 0)
    assert rotate90(rotate90(DqVector(2, -3))) == DqVector(-2, 3)


def test_rotate90_matches_matrix():
    x = DqVector(0.3, -1.7)
    np.testing.assert_array_equal(rotate90(x).as_array(), J @ x.as_array())
    np.testing.assert_array_equal(J @ J, -np.eye(2))
    np.testing.assert_array_equal(J.T, -J)


@pytest.mark.parametrize(
    "v, i, expected",
    [((1, 0), (1, 0), (1, 0)), ((1, 0), (0, 1), (0, -1)), ((3, 4), (3, 4), (25, 0))],
)
def test_instantaneous_power_examples(v, i, expected):
    assert instantaneous_power(DqVector(*v), DqVector(*i)) == expected


@given(finite, finite)
def test_no_reactive_power_on_itself(a, b):
    v = DqVector(a, b)
    assert instantaneous_power(v, v)[1] == 0.0


@given(finite, finite, finite, finite)
def test_reactive_power_is_vT_J_i(vd, vq, id_, iq):
    v, i = DqVector(vd, vq), DqVector(id_, iq)
    P, Q = instantaneous_power(v, i)
    assert P == pytest.approx(float(v.as_array() @ i.as_array()), rel=1e-12, abs=1e-3)
    assert Q == pytest.approx(float(v.as_array() @ J @ i.as_array()), rel=1e-12, abs=1e-3)


def test_sat_scalar_examples():
    assert sat_scalar(0.5, 1) == 0.5
    assert sat_scalar(1.5, 1) == 1.0
    assert sat_scalar(-2, 1) == -1.0
    with pytest.raises(InvalidArgument):
        sat_scalar(0.0, -1.0)


def test_sat_circular_examples():
    y = sat_circular(DqVector(3, 4), 1)
    assert (y.d, y.q) == pytest.approx((0.6, 0.8), abs=1e-15)
    assert sat_circular(DqVector(0.1, 0), 1) == DqVector(0.1, 0)
    assert sat_circular(DqVector(0, 0), 0) == DqVector(0, 0)
    with pytest.raises(InvalidArgument):
        sat_circular(DqVector(1, 1), -0.1)


@given(finite, finite, st.floats(0, 1e6))
def test_saturations_idempotent_and_bounded(a, b, lim):
    x = DqVector(a, b)
    y = sat_circular(x, lim)
    assert y.norm() <= lim * (1 + 1e-12)
    z = sat_circular(y, lim)
    assert (z.d, z.q) == pytest.approx((y.d, y.q), rel=1e-12, abs=1e-300)
    s = sat_scalar(a, lim)
    assert abs(s) <= lim and sat_scalar(s, lim) == s


def test_park_common_mode():
    np.testing.assert_allclose(park_transform([1, 1, 1], 0.0), [0, 0, math.sqrt(3)], atol=1e-15)


def test_park_isometry_and_inverse():
    x = np.array([1.0, -2.0, 0.5])
    y = park_transform(x, 0.7)
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), abs=1e-12)
    np.testing.assert_allclose(inverse_park_transform(y, 0.7), x, atol=1e-12)


@pytest.mark.parametrize("theta", [0.0, 0.4, 2.0, -2.9])
def test_park_balanced_set(theta):
    # brute force: x_a = A cos(theta), x_b, x_c lag by 120 degrees; the
    # trigonometric sum identities give d = sqrt(3/2) A, q = 0, zero = 0
    A = 2.5
    x = [A * math.cos(theta - k * 2 * math.pi / 3) for k in range(3)]
    d = math.sqrt(2 / 3) * sum(x[k] * math.cos(theta - k * 2 * math.pi / 3) for k in range(3))
    q = -math.sqrt(2 / 3) * sum(x[k] * math.sin(theta - k * 2 * math.pi / 3) for k in range(3))
    y = park_transform(x, theta)
    np.testing.assert_allclose(y, [math.sqrt(1.5) * A, 0.0, 0.0], atol=1e-12)
    assert y[0] == pytest.approx(d, abs=1e-12)
    assert y[1] == pytest.approx(q, abs=1e-12)
