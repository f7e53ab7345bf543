"""Points, balls, k-flats and cones in R^d.

Flats are stored in canonical form: an anchor ``c`` that is the point of the
flat closest to the origin, plus an orthonormal basis of its direction space.
The basis is not unique, so flats are compared through their anchors and
projectors, never through basis vectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateInput,
    DimensionMismatch,
    DirectionUndefined,
    InvalidFlat,
)

TAU_GEO = 1e-9
TAU_ORTH = 1e-10
RANK_RTOL = 1e-8
# slack for boundary decisions on angles computed with atan2
TAU_ANGLE = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class KFlat:
    """Affine k-flat ``{c + B.T @ lam}`` with orthonormal rows in ``basis``."""

    c: np.ndarray
    basis: np.ndarray = field(default=None)

    def __post_init__(self):
        c = _frozen(self.c).reshape(-1)
        d = c.shape[0]
        basis = np.zeros((0, d)) if self.basis is None else self.basis
        basis = _frozen(np.asarray(basis, dtype=float).reshape(-1, d))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "basis", basis)
        if d < 1:
            raise InvalidFlat("ambient dimension must be at least 1")
        if basis.shape[0] > d - 1:
            raise InvalidFlat(f"a {basis.shape[0]}-flat does not fit in R^{d}")
        gram = basis @ basis.T
        if not np.allclose(gram, np.eye(len(basis)), atol=TAU_ORTH, rtol=0):
            raise InvalidFlat("basis is not orthonormal")
        if basis.size and np.max(np.abs(basis @ c)) > TAU_ORTH * max(1.0, np.linalg.norm(c)):
            raise InvalidFlat("anchor is not orthogonal to the basis")

    @property
    def dim_ambient(self) -> int:
        return self.c.shape[0]

    @property
    def dim_flat(self) -> int:
        return self.basis.shape[0]

    def project(self, p):
        """Orthogonal projection of a point (or rows of points) onto the flat."""
        p = np.asarray(p, dtype=float)
        r = p - self.c
        return self.c + (r @ self.basis.T) @ self.basis

    def projector(self) -> np.ndarray:
        return self.basis.T @ self.basis

    def to_dict(self):
        return {"c": self.c.tolist(), "basis": self.basis.tolist()}

    @classmethod
    def from_dict(cls, doc):
        c = np.asarray(doc["c"], dtype=float)
        basis = np.asarray(doc.get("basis", []), dtype=float).reshape(-1, c.shape[0])
        return cls(c, basis)

    def __repr__(self):
        return f"KFlat(k={self.dim_flat}, d={self.dim_ambient}, c={self.c.tolist()})"


@dataclass(frozen=True, eq=False)
class ClosedBall:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen(self.center).reshape(-1))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius >= 0:
            raise DegenerateInput(f"negative radius {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def __repr__(self):
        return f"ClosedBall({self.center.tolist()}, {self.radius!r})"


@dataclass(frozen=True, eq=False)
class Cone:
    """Closed cone with apex at the origin: angle(axis, x) <= aperture."""

    axis: np.ndarray
    aperture: float

    def __post_init__(self):
        axis = _frozen(self.axis).reshape(-1)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "aperture", float(self.aperture))
        if abs(np.linalg.norm(axis) - 1.0) > TAU_ORTH:
            raise DegenerateInput("cone axis must be a unit vector")
        if not 0 < self.aperture <= math.pi / 2 + TAU_ANGLE:
            raise DegenerateInput(f"aperture {self.aperture} outside (0, pi/2]")


def _check_dims(*dims):
    if len(set(dims)) > 1:
        raise DimensionMismatch(f"ambient dimensions differ: {dims}")


def canonicalize_flat(anchor, spanning=()) -> KFlat:
    """Build the canonical flat through ``anchor`` spanned by ``spanning``.

    The spanning set may be rank deficient; its numerical rank (singular
    values above ``RANK_RTOL`` times the largest) fixes k.
    """
    anchor = np.asarray(anchor, dtype=float).reshape(-1)
    d = anchor.shape[0]
    S = np.asarray(spanning, dtype=float).reshape(-1, d) if len(spanning) else np.zeros((0, d))
    basis = np.zeros((0, d))
    if S.shape[0]:
        sv = np.linalg.svd(S, compute_uv=False)
        rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
        if rank > d - 1:
            raise InvalidFlat(f"spanning set has rank {rank} > d-1 = {d - 1}")
        if rank:
            Q, _, _ = scipy.linalg.qr(S.T, mode="economic", pivoting=True)
            basis = Q[:, :rank].T
            # one Gram-Schmidt pass to push orthogonality to machine precision
            basis, _ = np.linalg.qr(basis.T)
            basis = basis.T
    c = anchor - (basis @ anchor) @ basis
    return KFlat(c, basis)


def flat_through_points(points) -> KFlat:
    """Smallest flat containing the given points (rank decided numerically)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    return canonicalize_flat(P[0], P[1:] - P[0])


def same_flat(f: KFlat, g: KFlat, tol: float = 1e-9) -> bool:
    if f.dim_ambient != g.dim_ambient or f.dim_flat != g.dim_flat:
        return False
    return bool(
        np.linalg.norm(f.c - g.c) <= tol
        and np.max(np.abs(f.projector() - g.projector()), initial=0.0) <= tol
    )


def dist_points_flat(P, f: KFlat) -> np.ndarray:
    """Vectorised distance from each row of ``P`` to ``f``."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    _check_dims(P.shape[1], f.dim_ambient)
    r = P - f.c
    if f.dim_flat:
        r = r - (r @ f.basis.T) @ f.basis
    return np.linalg.norm(r, axis=1)


def dist_point_flat(p, f: KFlat) -> float:
    return float(dist_points_flat(np.asarray(p, dtype=float).reshape(1, -1), f)[0])


def dist_ball_flat(b: ClosedBall, f: KFlat) -> float:
    return max(0.0, dist_point_flat(b.center, f) - b.radius)


def angle_between(u, x) -> float:
    """Angle in [0, pi] between two nonzero vectors, via atan2."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    nu, nx = np.linalg.norm(u), np.linalg.norm(x)
    if nu == 0 or nx == 0:
        raise DegenerateInput("angle with the zero vector is undefined")
    uh = u / nu
    along = float(x @ uh)
    across = float(np.linalg.norm(x - along * uh))
    return math.atan2(across, along)


def flat_axis_angle(f: KFlat, u) -> float:
    """Angle between the unit vector ``u`` and the direction space of ``f``."""
    if f.dim_flat == 0:
        raise DirectionUndefined("a 0-flat has no direction")
    u = np.asarray(u, dtype=float).reshape(-1)
    _check_dims(u.shape[0], f.dim_ambient)
    inside = f.basis @ u
    outside = u - inside @ f.basis
    return math.atan2(float(np.linalg.norm(outside)), float(np.linalg.norm(inside)))


def cone_contains(cone: Cone, x) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    _check_dims(x.shape[0], cone.axis.shape[0])
    if not np.any(x):
        raise DegenerateInput("the apex is excluded from the cone")
    return angle_between(cone.axis, x) <= cone.aperture + TAU_ANGLE


def ball_max_angle(axis, center, radius) -> float:
    """Largest angle to ``axis`` over points of B(center, radius), origin outside."""
    dist = float(np.linalg.norm(center))
    if radius >= dist:
        return math.pi
    return angle_between(axis, center) + math.asin(radius / dist)


def complement_basis(V: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal rows spanning the orthogonal complement of the rows of V."""
    V = np.asarray(V, dtype=float).reshape(-1, d)
    if V.shape[0] == 0:
        return np.eye(d)
    Q, _ = np.linalg.qr(V.T, mode="complete")
    return Q[:, V.shape[0]:].T
