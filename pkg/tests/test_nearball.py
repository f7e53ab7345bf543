import numpy as np
import pytest

from transversal_lab.constructions import counterexample_discs, sharpness_family2
from transversal_lab.exceptions import DegenerateInput, DimensionMismatch
from transversal_lab.geometry import ClosedBall, canonicalize_flat
from transversal_lab.nearball import (Family, NearBall, Unbounded, check_weak_condition_r,
                                      nearball_constant, nearball_stats, pierces,
                                      running_nearball_constant)

X_AXIS = canonicalize_flat([0.0, 0.0], [[1.0, 0.0]])
TWO_PART = NearBall((ClosedBall([0, 0], 1), ClosedBall([3, 0], 1)), 0)


def test_stats_single_ball():
    x, r_in, r_esc = nearball_stats(NearBall.ball([0, 0], 2))
    np.testing.assert_array_equal(x, [0, 0])
    assert (r_in, r_esc) == (2, 2)


def test_stats_two_parts():
    x, r_in, r_esc = nearball_stats(TWO_PART)
    assert r_in == 1 and r_esc == pytest.approx(4.0)


def test_constants():
    fam = Family.from_balls(np.random.default_rng(0).normal(size=(5, 2)), np.full(5, 0.3))
    assert nearball_constant(fam) == 1.0
    assert Family.from_members([TWO_PART]).K == pytest.approx(4.0)


def test_invalid_members():
    with pytest.raises(DegenerateInput):
        NearBall(())
    with pytest.raises(DegenerateInput):
        NearBall.ball([0, 0], 0.0, open_flag=True)
    with pytest.raises(DimensionMismatch):
        NearBall((ClosedBall([0, 0], 1), ClosedBall([0, 0, 0], 1)))
    with pytest.raises(DegenerateInput):
        Family.from_members([NearBall.ball([0, 0], 1), NearBall.ball([1, 1], 1, open_flag=True)])


def test_piercing_closed_vs_open():
    closed = NearBall.ball([3, 1 / 3], 1 / 3)
    opened = NearBall.ball([3, 1 / 3], 1 / 3, open_flag=True)
    assert pierces(X_AXIS, closed)
    assert not pierces(X_AXIS, opened)


def test_flat_through_core_pierces(rng):
    for _ in range(20):
        x = rng.normal(size=3)
        b = NearBall((ClosedBall(x, 0.1), ClosedBall(x + rng.normal(size=3), 0.2)), 0)
        f = canonicalize_flat(x, rng.normal(size=(1, 3)))
        assert pierces(f, b)


def test_running_constant_grows_for_sharpness_family():
    fam = sharpness_family2(12)
    running = np.maximum.accumulate(fam.member_constants)
    assert np.all(np.diff(running) >= 0)
    assert running[-1] > 4 * running[2]


def test_running_constant_stream():
    stream = [NearBall((ClosedBall([0, 0], 1), ClosedBall([s, 0], 1)), 0) for s in (0, 1, 3, 7, 15)]
    values = list(running_nearball_constant(stream))
    np.testing.assert_allclose(values, [1, 2, 4, 8, 16])
    capped = list(running_nearball_constant(stream, cap=5))
    assert len(capped) == 4 and isinstance(capped[-1], Unbounded)


def test_weak_condition_rows():
    fam = Family.from_balls(np.zeros((3, 2)), np.ones(3))
    assert check_weak_condition_r(fam, [0.5]) == [(0.5, 0.0)]
    n = np.arange(1, 11)
    shrinking = Family.from_balls(np.column_stack([n * 3.0, np.zeros(10)]), 1.0 / n)
    (r, sup), = check_weak_condition_r(shrinking, [0.2])
    assert sup == pytest.approx(0.2)


def test_family_views():
    fam = counterexample_discs(5)
    assert len(fam) == 5 and fam.open_flag
    sub = fam.subfamily([4, 0])
    np.testing.assert_allclose(sub.x_b, [[5, 0.2], [1, 1]])
    assert isinstance(fam[2], NearBall)
    assert len(fam[1:3]) == 2
    gaps = fam.member_gaps(X_AXIS)
    np.testing.assert_allclose(gaps, 0.0, atol=1e-15)
