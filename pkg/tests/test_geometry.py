import math

import numpy as np
import pytest

from transversal_lab.exceptions import DegenerateInput, InvalidFlat
from transversal_lab.geometry import (ClosedBall, Cone, KFlat, angle_between, ball_max_angle,
                                      canonicalize_flat, complement_basis, cone_contains,
                                      dist_ball_flat, dist_point_flat, dist_points_flat,
                                      flat_axis_angle, flat_through_points, same_flat)

X_AXIS = canonicalize_flat([0.0, 0.0], [[1.0, 0.0]])
Y_AXIS = canonicalize_flat([0.0, 0.0], [[0.0, 1.0]])


def test_canonical_vertical_line():
    f = canonicalize_flat([1, 1], [[0, 2]])
    np.testing.assert_allclose(f.c, [1, 0], atol=1e-12)
    np.testing.assert_allclose(np.abs(f.basis), [[0, 1]], atol=1e-12)


def test_canonical_point():
    f = canonicalize_flat([3, 4])
    assert f.dim_flat == 0
    np.testing.assert_array_equal(f.c, [3, 4])


def test_canonical_diagonal():
    f = canonicalize_flat([2, 0], [[1, -1]])
    np.testing.assert_allclose(f.c, [1, 1], atol=1e-12)
    s = 1 / math.sqrt(2)
    assert np.allclose(f.basis, [[s, -s]]) or np.allclose(f.basis, [[-s, s]])


def test_invalid_flats():
    with pytest.raises(InvalidFlat):
        KFlat(np.zeros(2), np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(InvalidFlat):
        KFlat(np.zeros(2), np.array([[1.0, 1.0]]))
    with pytest.raises(InvalidFlat):
        KFlat(np.array([1.0, 0.0]), np.array([[1.0, 0.0]]))


@pytest.mark.parametrize("p, f, expected", [
    ([0, 0], X_AXIS, 0.0),
    ([3, 4], canonicalize_flat([0, 0]), 5.0),
    ([1, 1, 1], canonicalize_flat([0, 0, 0], [[1, 0, 0], [0, 1, 0]]), 1.0),
])
def test_point_distance(p, f, expected):
    assert dist_point_flat(p, f) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("center, r, f, expected", [
    ([0, 3], 1, X_AXIS, 2.0),
    ([0, 1], 1, X_AXIS, 0.0),
    ([5, 0], 2, Y_AXIS, 3.0),
])
def test_ball_distance(center, r, f, expected):
    assert dist_ball_flat(ClosedBall(center, r), f) == pytest.approx(expected, abs=1e-12)


def test_points_distance_vectorised(rng):
    f = canonicalize_flat(rng.normal(size=3), rng.normal(size=(1, 3)))
    P = rng.normal(size=(20, 3))
    got = dist_points_flat(P, f)
    want = [dist_point_flat(p, f) for p in P]
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_flat_axis_angles():
    assert flat_axis_angle(X_AXIS, [1, 0]) == pytest.approx(0.0, abs=1e-12)
    plane = canonicalize_flat([0, 0, 0], [[1, 0, 0], [0, 1, 0]])
    assert flat_axis_angle(plane, [0, 0, 1]) == pytest.approx(math.pi / 2)
    diag = canonicalize_flat([0, 0], [[1, 1]])
    assert flat_axis_angle(diag, [1, 0]) == pytest.approx(math.pi / 4)


def test_cone_membership():
    up = Cone(np.array([0.0, 0.0, 1.0]), math.pi / 4)
    assert cone_contains(up, [0, 0, 1])
    assert not cone_contains(up, [1, 0, 0])
    assert cone_contains(Cone(np.array([0.0, 1.0]), math.pi / 4), [1, 1])
    with pytest.raises(DegenerateInput):
        Cone(np.array([0.0, 2.0]), 0.5)


def test_angle_between_and_ball_max_angle():
    assert angle_between([1, 0], [0, 3]) == pytest.approx(math.pi / 2)
    assert ball_max_angle([1, 0], [2, 0], 1) == pytest.approx(math.pi / 6)


def test_flat_through_points_and_same_flat():
    f = flat_through_points([[0, 1], [2, 1]])
    assert same_flat(f, canonicalize_flat([5, 1], [[-3, 0]]))
    assert not same_flat(f, X_AXIS)


def test_complement_basis(rng):
    V = np.linalg.qr(rng.normal(size=(4, 2)))[0].T
    W = complement_basis(V, 4)
    M = np.vstack([V, W])
    np.testing.assert_allclose(M @ M.T, np.eye(4), atol=1e-10)
