import math

import numpy as np
import pytest

from transversal_lab.claims import (_max_angles, verify_claim_cone, verify_claim_ktok,
                                    verify_claim_wide_cone)
from transversal_lab.exceptions import CounterexampleFound, DegenerateInput


def _alpha(K):
    return 0.9 * (math.pi / 4) / (1 + math.pi * K / 2)


def test_cone_claim_holds():
    rep = verify_claim_cone(2, 10, 0.1, trials=2000, seed=1)
    assert rep.passed and rep.max_observed <= 0.1
    assert rep.extra["sampled_escapes"] == 0


def test_cone_negative_control_escapes():
    rep = verify_claim_cone(2, 10, 0.1, trials=2000, seed=1, inflate=10, raise_on_violation=False)
    assert rep.violations >= 1
    with pytest.raises(CounterexampleFound) as info:
        verify_claim_cone(2, 10, 0.1, trials=2000, seed=1, inflate=10)
    assert info.value.report.violations == rep.violations


def test_cone_without_inflation_is_set_membership():
    # D = 0: only the members themselves, which sit well inside the cone
    rep = verify_claim_cone(3, 0, 0.1, trials=2000, seed=2)
    eps_p = 0.1 / (1 + math.pi / 2 * 3)
    assert rep.passed and rep.max_observed < 0.1
    assert rep.extra["eps_prime"] == pytest.approx(eps_p)


def test_cone_bad_parameters():
    with pytest.raises(DegenerateInput):
        verify_claim_cone(0.5, 1, 0.1)


@pytest.mark.parametrize("K", [1, 3])
def test_wide_cone_claim_holds(K):
    rep = verify_claim_wide_cone(K, _alpha(K), trials=2000, seed=K)
    assert rep.passed
    assert rep.max_observed <= _alpha(K) * (1 + math.pi * K / 2) + 1e-9 < math.pi / 4


def test_wide_cone_premise():
    with pytest.raises(DegenerateInput):
        verify_claim_wide_cone(3, 0.3)
    rep = verify_claim_wide_cone(3, 0.3, trials=2000, raise_on_violation=False, enforce_premise=False)
    assert rep.violations >= 1


def test_axis_member_aperture_is_tangent_angle():
    axis = np.array([0.0, 0.0, -1.0])
    X = np.array([[0.0, 0.0, -5.0]])
    got = _max_angles(axis, X, np.array([1e-3]))
    assert got[0] == pytest.approx(math.asin(1e-3 / 5))


@pytest.mark.parametrize("K", [1.5, 3, 10])
def test_ktok_ratio_bound(K):
    rep = verify_claim_ktok(K, trials=2000, seed=7)
    assert rep.passed and rep.max_observed <= math.sqrt(2) * K + 1e-6
    # sampler reaches the edge of the premise
    assert rep.max_observed >= 0.95 * math.sqrt(2) * K


def test_reports_serialise():
    d = verify_claim_ktok(2, trials=50).to_dict()
    assert d["passed"] and d["claim"] == "ktok"
