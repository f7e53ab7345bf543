"""Property-based checks of the kernel predicates and solver contracts."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from transversal_lab._minimax import convex_minimax, point_values
from transversal_lab.geometry import canonicalize_flat, dist_point_flat
from transversal_lab.independence import lift_flat, orthogonal_project_family
from transversal_lab.nearball import Family, member_pierced, pierces
from transversal_lab.solver import exists_transversal, fit_flat

coord = st.floats(-20, 20, allow_nan=False)
rad = st.floats(0.01, 3, allow_nan=False)


def vecs(n, d):
    return arrays(np.float64, (n, d), elements=coord)


@st.composite
def families(draw, d=None, max_n=5, parts=3):
    d = draw(st.integers(2, 3)) if d is None else d
    n = draw(st.integers(1, max_n))
    centers, radii, sizes = [], [], []
    for _ in range(n):
        m = draw(st.integers(1, parts))
        c = draw(vecs(1, d))[0]
        centers.append(c)
        radii.append(draw(rad))
        for _ in range(m - 1):
            centers.append(c + draw(vecs(1, d))[0] / 10)
            radii.append(draw(rad))
        sizes.append(m)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return Family(np.array(centers), radii, offsets, np.zeros(n, dtype=int))


@st.composite
def flats(draw, d, k):
    c = draw(vecs(1, d))[0]
    V = draw(vecs(k, d)) if k else np.zeros((0, d))
    if k and np.linalg.matrix_rank(V) < k:
        V = np.eye(d)[:k]
    return canonicalize_flat(c, V)


@given(vecs(1, 3), st.integers(0, 2), st.data())
def test_canonical_form_invariants(p, k, data):
    f = data.draw(flats(3, k))
    B = f.basis
    np.testing.assert_allclose(B @ B.T, np.eye(k), atol=1e-10)
    if k:
        assert np.max(np.abs(B @ f.c)) <= 1e-10 * max(1, np.linalg.norm(f.c))
    # re-canonicalising from another anchor on the flat gives the same anchor
    shift = f.c + (np.ones(k) @ B if k else 0)
    g = canonicalize_flat(shift, B)
    np.testing.assert_allclose(g.c, f.c, atol=1e-9 * max(1, np.linalg.norm(f.c)))


@given(st.data())
def test_distance_is_norm_of_residual(data):
    f = data.draw(flats(3, data.draw(st.integers(0, 2))))
    p = data.draw(vecs(1, 3))[0]
    d = dist_point_flat(p, f)
    q = p - f.c
    r = q - f.basis.T @ (f.basis @ q)
    assert math.isclose(d, float(np.linalg.norm(r)), rel_tol=1e-9, abs_tol=1e-9)


@given(families(), st.data())
def test_flat_through_core_pierces_member(fam, data):
    k = data.draw(st.integers(0, fam.dim - 1))
    i = data.draw(st.integers(0, len(fam) - 1))
    V = data.draw(vecs(k, fam.dim)) if k else None
    if k and np.linalg.matrix_rank(V) < k:
        V = np.eye(fam.dim)[:k]
    f = canonicalize_flat(fam.x_b[i], V if k else ())
    assert pierces(f, fam.member(i))


@given(families(max_n=6, parts=1))
def test_k0_solution_is_globally_optimal(fam):
    x, v, lb = convex_minimax(fam.centers, fam.radii)
    assert lb <= v + 1e-9
    assert abs(point_values(x, fam.centers, fam.radii).max() - v) <= 1e-9
    # nothing on a coarse cloud around the answer beats it
    rng = np.random.default_rng(0)
    trial = x + rng.normal(size=(200, fam.dim))
    vals = np.max(np.linalg.norm(trial[:, None] - fam.centers[None], axis=2) - fam.radii, axis=1)
    assert vals.min() >= v - 1e-9


@settings(max_examples=25)
@given(families(d=2, max_n=4))
def test_solver_reports_achieved_value(fam):
    for k in (0, 1):
        fit = fit_flat(fam, k)
        assert math.isclose(fit.signed, float(fam.member_gaps(fit.flat).max()), abs_tol=1e-9)


@settings(max_examples=25)
@given(families(d=2, max_n=4))
def test_yes_answers_are_real(fam):
    res = exists_transversal(fam, 1)
    if res.found:
        assert member_pierced(fam.member_gaps(res.flat), False, 1e-7, 1e-7).all()


@given(families(d=3))
def test_projection_never_increases_constant(fam):
    assert orthogonal_project_family(fam).K <= fam.K + 1e-12


@given(families(d=3), st.data())
def test_lifted_flat_pierces_preimage(fam, data):
    proj = orthogonal_project_family(fam)
    i = data.draw(st.integers(0, len(fam) - 1))
    f = canonicalize_flat(proj.x_b[i], data.draw(st.sampled_from([(), [[1.0, 0.0]], [[0.6, 0.8]]])))
    assert pierces(lift_flat(f), fam.member(i))
    gaps_low = proj.member_gaps(f)
    gaps_high = fam.member_gaps(lift_flat(f))
    np.testing.assert_allclose(gaps_high, gaps_low, atol=1e-9)
