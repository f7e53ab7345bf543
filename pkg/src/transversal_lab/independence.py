"""k-independence: certification, greedy extraction and projection reductions.

A family is k-independent when no k-flat meets k + 2 of its members.  Each
(k+2)-subset is tested with the transversal solver; a subset counts as
non-pierceable only when the best residual stays above ``tol_indep`` after
the full restart budget, which keeps solver noise away from the verdict.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize

from . import _minimax
from .exceptions import (
    DegenerateInput,
    PreconditionViolated,
    SequenceExhausted,
    TupleHasAxisParallelTransversal,
)
from .geometry import TAU_GEO, Cone, KFlat, ball_max_angle, canonicalize_flat, complement_basis
from .nearball import Family, member_pierced
from .solver import SolveOptions, exists_transversal, fit_flat, greedy_piercing_upper

TOL_INDEP = 1e-4
TAU_PROJ = 1e-6
_CHUNK = 64


def worker_count() -> int:
    """Thread budget, capped by ``TRANSVERSAL_LAB_THREADS`` when set."""
    n = os.cpu_count() or 1
    env = os.environ.get("TRANSVERSAL_LAB_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return max(1, min(n, 8))


@dataclass
class Violation:
    """A subset met by one flat (or by one whose residual is within ``tol_indep``)."""

    subset: tuple
    flat: KFlat
    residual: float
    pierces: bool

    def __bool__(self):
        return False

    def to_dict(self):
        return {"subset": list(self.subset), "flat": self.flat.to_dict(),
                "residual": self.residual, "pierces": self.pierces}


@dataclass
class IndependenceWitness:
    """Evidence that no k-flat meets k + 2 of the listed members.

    ``evidence`` holds one record per (k+2)-subset with the solver's best
    signed value and whether that value is certified.  ``affine_check``
    covers the small-family clause when fewer than k + 2 members exist.
    """

    member_indices: list
    k: int
    evidence: list = field(default_factory=list)
    affine_check: Optional[dict] = None
    tol_indep: float = TOL_INDEP
    tol_feas: float = 1e-7

    def __post_init__(self):
        if not self.tol_indep > self.tol_feas:
            raise ValueError("tol_indep must exceed tol_feas")

    @property
    def heuristic(self) -> bool:
        recs = list(self.evidence)
        if self.affine_check:
            recs.append(self.affine_check)
        return not all(r["certified"] for r in recs)

    def __len__(self):
        return len(self.member_indices)

    def to_dict(self):
        return {
            "member_indices": [int(i) for i in self.member_indices],
            "k": self.k,
            "evidence": self.evidence,
            "affine_check": self.affine_check,
            "tol_indep": self.tol_indep,
            "tol_feas": self.tol_feas,
            "heuristic": self.heuristic,
        }


def _subset_record(family: Family, idx, k: int, opts: SolveOptions, tol_indep: float):
    sub = family.subfamily(list(idx))
    res = exists_transversal(sub, k, opts)
    fit = res.fit
    separated = fit.signed > tol_indep
    rec = {
        "subset": [int(i) for i in idx],
        "value": float(fit.signed),
        "lower_bound": float(fit.lower_bound) if math.isfinite(fit.lower_bound) else None,
        "certified": bool(separated and fit.lower_bound > tol_indep),
    }
    return separated, rec, res


def _check_subsets(family, subsets, k, opts, tol_indep, workers=None):
    """Evaluate subsets in order; return (records, first violation or None)."""
    workers = worker_count() if workers is None else workers
    records = []
    subsets = list(subsets)

    def run(idx):
        return _subset_record(family, idx, k, opts, tol_indep)

    pool = ThreadPoolExecutor(workers) if workers > 1 and len(subsets) > 1 else None
    try:
        for start in range(0, len(subsets), _CHUNK):
            chunk = subsets[start:start + _CHUNK]
            out = list(pool.map(run, chunk)) if pool else [run(s) for s in chunk]
            for idx, (ok, rec, res) in zip(chunk, out):
                if not ok:
                    return records, Violation(tuple(int(i) for i in idx), res.flat,
                                              float(res.fit.signed), bool(res.found))
                records.append(rec)
    finally:
        if pool:
            pool.shutdown()
    return records, None


def is_k_independent(family: Family, k: int, opts: Optional[SolveOptions] = None,
                     tol_indep: float = TOL_INDEP, workers: Optional[int] = None):
    """Return an :class:`IndependenceWitness` or the first :class:`Violation`.

    For k = 0 with single-part members the verdicts are exact (pairwise
    disjointness); for k >= 1 a witness is heuristic unless every subset's
    lower bound clears ``tol_indep``.
    """
    opts = opts or SolveOptions()
    if not 0 <= k <= family.dim - 1:
        raise DegenerateInput(f"k={k} outside [0, {family.dim - 1}]")
    n = len(family)
    wit = IndependenceWitness(list(range(n)), k, tol_indep=tol_indep, tol_feas=opts.tol_feas)
    if n < k + 2:
        if n >= 2:
            ok, rec, res = _subset_record(family, range(n), n - 2, opts, tol_indep)
            if not ok:
                return Violation(tuple(range(n)), res.flat, float(res.fit.signed), bool(res.found))
            rec["flat_dim"] = n - 2
            wit.affine_check = rec
        return wit
    records, bad = _check_subsets(family, itertools.combinations(range(n), k + 2), k, opts,
                                  tol_indep, workers)
    if bad is not None:
        return bad
    wit.evidence = records
    return wit


def greedy_independent_subsequence(seq: Family, k: int, target_len: int,
                                   opts: Optional[SolveOptions] = None,
                                   tol_indep: float = TOL_INDEP) -> IndependenceWitness:
    """Scan ``seq`` in order, keeping members that stay k-independent.

    The first k + 1 members are taken as they come.  A later candidate is
    kept iff no k-flat meets it together with any k + 1 kept members.
    Raises :class:`SequenceExhausted` (carrying the kept indices) when the
    sequence ends before ``target_len`` members are kept.
    """
    opts = opts or SolveOptions()
    if target_len < k + 2:
        raise ValueError("target_len must be at least k + 2")
    n = len(seq)
    accepted = list(range(min(k + 1, n)))
    evidence = []
    j = len(accepted)
    while len(accepted) < target_len and j < n:
        subsets = [S + (j,) for S in itertools.combinations(accepted, k + 1)]
        records, bad = _check_subsets(seq, subsets, k, opts, tol_indep)
        if bad is None:
            accepted.append(j)
            evidence.extend(records)
        j += 1
    if len(accepted) < target_len:
        raise SequenceExhausted(
            f"kept {len(accepted)} of {target_len} members before the sequence ended", accepted)
    return IndependenceWitness(accepted, k, evidence, tol_indep=tol_indep, tol_feas=opts.tol_feas)


# projections ------------------------------------------------------------

def orthogonal_project_family(family: Family) -> Family:
    """Drop the last coordinate of every part; radii and cores are kept."""
    if family.dim < 2:
        raise DegenerateInput("cannot project a family in R^1")
    out = family.with_parts(family.centers[:, :-1], family.radii)
    if out.K > family.K + 1e-12:  # pragma: no cover - distances only shrink
        raise AssertionError("near-ball constant increased under projection")
    return out


def lift_flat(flat: KFlat) -> KFlat:
    """Pre-image cylinder of a flat in R^(d-1): add the dropped axis."""
    d = flat.dim_ambient + 1
    c = np.append(flat.c, 0.0)
    B = np.hstack([flat.basis, np.zeros((flat.dim_flat, 1))])
    e = np.zeros((1, d))
    e[0, -1] = 1.0
    return canonicalize_flat(c, np.vstack([B, e]))


# ray coverings ----------------------------------------------------------------

def ray_covering(d: int, alpha: float) -> np.ndarray:
    """Unit directions such that every direction is within ``alpha`` of one.

    The plane gets ``ceil(pi / alpha)`` equally spaced directions.  In higher
    dimensions a grid on the faces of the cube [-1, 1]^d is normalised; the
    spacing h = 2 sin(alpha / 2) / sqrt(d - 1) bounds the chord between a
    direction and its nearest node by 2 sin(alpha / 2).  The cardinality is
    ``len`` of the result.
    """
    if d < 2 or not 0 < alpha <= math.pi:
        raise DegenerateInput("need d >= 2 and 0 < alpha <= pi")
    if d == 2:
        n = max(2, math.ceil(math.pi / alpha))
        t = 2 * math.pi * np.arange(n) / n
        return np.column_stack([np.cos(t), np.sin(t)])
    h = 2 * math.sin(alpha / 2) / math.sqrt(d - 1)
    n = math.ceil(2 / h) + 1
    ticks = np.linspace(-1.0, 1.0, n)
    face = np.stack(np.meshgrid(*([ticks] * (d - 1)), indexing="ij"), -1).reshape(-1, d - 1)
    pts = []
    for j in range(d):
        for s in (-1.0, 1.0):
            pts.append(np.insert(face, j, s, axis=1))
    P = np.unique(np.vstack(pts), axis=0)
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def members_met_by_rays(family: Family, rays, apex=None, tol: float = TAU_GEO) -> np.ndarray:
    """Boolean mask of members met by some ray from ``apex`` (default origin)."""
    U = np.atleast_2d(np.asarray(rays, dtype=float))
    a = np.zeros(family.dim) if apex is None else np.asarray(apex, dtype=float)
    X = family.centers - a
    t = np.maximum(X @ U.T, 0.0)
    dist = np.sqrt(np.maximum(np.sum(X * X, axis=1)[:, None] - t * t, 0.0))
    gaps = family.reduce_members(np.min(dist, axis=1) - family.radii)
    return member_pierced(gaps, family.open_flag, tol, tol)


def tangent_frame(axis) -> np.ndarray:
    """Orthonormal rows spanning the hyperplane orthogonal to ``axis``.

    Coordinate axes get the obvious frame (drop that coordinate) so that
    projected coordinates stay readable.
    """
    u = np.asarray(axis, dtype=float)
    d = len(u)
    j = int(np.argmax(np.abs(u)))
    if abs(abs(u[j]) - 1.0) <= 1e-15:
        return np.delete(np.eye(d), j, axis=0)
    return complement_basis(u[None, :], d)


def central_image_extremes(center, radius, axis):
    """Min and max distance from ``pi(center)`` to the image of a ball's boundary.

    ``pi`` maps x to x / <x, axis> on the hyperplane <y, axis> = 1.  Rays
    tangent to the ball are w = cos(z) x_hat + sin(z) e with e a unit vector
    orthogonal to x_hat, and with t = <e, axis> and a = <x_hat, axis> the
    image distance is sin(z) sqrt(a^2 + t^2) / (a (a cos(z) + sin(z) t)).
    t ranges over [-P, P] with P = |axis - a x_hat| (only the endpoints in
    the plane); the interior critical point t = a tan(z) gives sin(z) / a.
    Returns ``(y, dmin, dmax)`` with ``y`` in ambient coordinates.
    """
    x = np.asarray(center, dtype=float)
    u = np.asarray(axis, dtype=float)
    nx = float(np.linalg.norm(x))
    xh = x / nx
    a = float(xh @ u)
    s = radius / nx
    if not s < 1 or a <= 0:
        raise PreconditionViolated("ball is not strictly on the axis side of the origin")
    c = math.sqrt(1.0 - s * s)
    P = float(np.linalg.norm(u - a * xh))
    if a * c - s * P <= 0:
        raise PreconditionViolated("ball is not strictly on the axis side of the origin")

    def dist(t):
        return s * math.hypot(a, t) / (a * (a * c + s * t))

    ends = (dist(-P), dist(P))
    lo = min(ends)
    if len(x) >= 3 and a * s / c <= P:
        lo = min(lo, s / a)
    return xh / a, lo, max(ends)


def central_project_family(family: Family, apex_cone: Cone, tau_proj: float = TAU_PROJ) -> Family:
    """Central projection from the origin onto the hyperplane tangent at the cone axis.

    Each member becomes two concentric balls at the image of x_B: the core is
    the largest ball inside the image of the inscribed ball, the outer part
    the smallest ball containing the image of the escribed ball (hence of the
    whole member).  Raises :class:`PreconditionViolated` when an escribed
    ball leaves the cone.
    """
    u = apex_cone.axis
    d = family.dim
    if d < 2:
        raise DegenerateInput("central projection needs d >= 2")
    T = tangent_frame(u)
    centres, radii = [], []
    for i in range(len(family)):
        x, r_in, r_esc = family.x_b[i], float(family.r_in[i]), float(family.r_esc[i])
        if r_esc >= np.linalg.norm(x) or ball_max_angle(u, x, r_esc) >= apex_cone.aperture:
            raise PreconditionViolated(f"member {i} leaves the cone around the axis")
        y, inner, _ = central_image_extremes(x, r_in, u)
        _, _, outer = central_image_extremes(x, r_esc, u)
        if inner <= 0:
            raise PreconditionViolated(f"member {i} has a degenerate image")
        yc = (y - u) @ T.T
        centres += [yc, yc]
        radii += [inner, max(outer, inner)]
    n = len(family)
    out = Family(np.array(centres), np.array(radii), np.arange(0, 2 * n + 1, 2),
                 np.zeros(n, dtype=int), family.open_flag)
    ratio_bound = math.sqrt(2.0) * float(np.max(family.r_esc / family.r_in)) * (1.0 + tau_proj)
    if float(np.max(out.r_esc / out.r_in)) > ratio_bound:
        raise AssertionError("projected escribed/inscribed ratio exceeds sqrt(2) K")
    return out


def project_flat_through_origin(flat: KFlat, axis) -> KFlat:
    """Image of a flat through the origin: a (k-1)-flat in tangent coordinates."""
    u = np.asarray(axis, dtype=float)
    T = tangent_frame(u)
    B = flat.basis
    # points of the flat on the hyperplane <y, u> = 1
    w = B @ u
    if np.linalg.norm(w) < TAU_GEO:
        raise DegenerateInput("flat is parallel to the tangent hyperplane")
    p = (w / (w @ w)) @ B
    # directions of the flat orthogonal to u (rank k - 1)
    dirs = B - np.outer(w, w @ B) / (w @ w)
    return canonicalize_flat((p - u) @ T.T, dirs @ T.T)


# epsilon_0 ----------------------------------------------------------------

@dataclass
class Epsilon0Estimate:
    """Conservative angle ``eps0`` (half of ``raw``) and the flat realising ``raw``."""

    eps0: float
    raw: float
    flat: KFlat

    def __float__(self):
        return self.eps0


def _direction_value(family: Family, V):
    W = complement_basis(V, family.dim)
    coords = family.centers @ W.T
    if family.single_part:
        x, v, _ = _minimax.convex_minimax(coords, family.radii)
    else:
        x, v, _, _ = _minimax.general_minimax(coords, family.radii, family.offsets)
    return x @ W, v


def epsilon0_for_tuple(members: Family, axis, k: Optional[int] = None,
                       opts: Optional[SolveOptions] = None) -> Epsilon0Estimate:
    """Smallest angle between ``axis`` and the direction of a flat meeting every member.

    Minimises angle + mu * (infeasibility) over direction charts with an
    increasing penalty.  ``k`` defaults to ``len(members) - 1``.
    """
    opts = opts or SolveOptions()
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    d = members.dim
    k = len(members) - 1 if k is None else k
    if not 1 <= k <= d - 1:
        raise DegenerateInput("epsilon0 needs 1 <= k <= d - 1")
    tol = opts.tol_feas

    def qr_rows(M):
        Q, _ = np.linalg.qr(np.asarray(M, dtype=float).reshape(k, d).T)
        return Q.T

    def angle(V):
        inside = V @ u
        return math.atan2(float(np.linalg.norm(u - inside @ V)), float(np.linalg.norm(inside)))

    # axis-parallel flats first: any direction space containing u
    rest = complement_basis(u[None, :], d)
    if k == 1:
        axis_dirs = [u[None, :]]
    else:
        axis_dirs = [np.vstack([u, rest[list(c)]]) for c in itertools.combinations(range(d - 1), k - 1)]
    for V in axis_dirs:
        if _direction_value(members, qr_rows(V))[1] <= tol:
            raise TupleHasAxisParallelTransversal("a flat parallel to the axis meets every member")

    rng = np.random.default_rng(opts.seed)
    seeds = []
    cores = members.x_b
    for sub in itertools.combinations(range(len(members)), k + 1):
        diffs = cores[list(sub[1:])] - cores[sub[0]]
        if np.linalg.matrix_rank(diffs, tol=1e-12) == k:
            seeds.append(qr_rows(diffs))
    for _ in range(opts.restarts):
        seeds.append(qr_rows(rng.normal(size=(k, d))))
    for V in axis_dirs:
        seeds.append(qr_rows(V + 0.05 * rng.normal(size=V.shape)))

    best = [math.inf, None, None]

    def consider(V):
        c, v = _direction_value(members, V)
        if v <= tol:
            a = angle(V)
            if a < best[0]:
                best[:] = [a, V, c]
        return v

    for V in seeds:
        consider(V)
    dim = k * (d - k)
    for V0 in seeds[: max(opts.restarts, 4)]:
        V = V0
        for mu in (10.0, 1e3, 1e5):
            W0 = complement_basis(V, d)

            def pen(z, V=V, W0=W0, mu=mu):
                Vz = qr_rows(V + z.reshape(k, -1) @ W0)
                return angle(Vz) + mu * max(0.0, consider(Vz))

            res = scipy.optimize.minimize(
                pen, np.zeros(dim), method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": opts.max_iters,
                         "initial_simplex": np.vstack([np.zeros(dim), 0.2 * np.eye(dim)])},
            )
            V = qr_rows(V + res.x.reshape(k, -1) @ W0)
    if best[1] is None:
        raise DegenerateInput("no flat meeting every member was found")
    raw = float(best[0])
    if raw <= TAU_GEO:
        raise TupleHasAxisParallelTransversal("minimisation reached an axis-parallel transversal")
    return Epsilon0Estimate(0.5 * raw, raw, canonicalize_flat(best[2], best[1]))


# strong points ------------------------------------------------------------

@dataclass
class StrongPointReport:
    """Finite-scale proxy for a strong point; a heuristic, not a proof device."""

    location: object
    score: int
    neighborhood_radii: list
    required_budgets: list
    strong: bool
    label: str = "finite-scale heuristic proxy"

    def to_dict(self):
        return {
            "location": self.location.to_dict(),
            "score": self.score,
            "neighborhood_radii": list(self.neighborhood_radii),
            "required_budgets": list(self.required_budgets),
            "strong": self.strong,
            "label": self.label,
        }


def find_strong_point_proxy(family: Family, k: int, flat_budget: int, radii,
                            opts: Optional[SolveOptions] = None, n_candidates: int = 8):
    """Locate the point whose shrinking neighbourhoods keep demanding flats.

    Candidates are the compactification centre, the compactified centres of
    the last members and, for members far out, their directions at infinity.
    For each candidate and radius (in the compactified metric) the members
    inside are pierced greedily; a candidate is called strong when the
    demand at the smallest radius is at least the demand at the largest and
    at least 2.  ``score`` counts radii whose demand exceeds
    ``flat_budget``.  Equal demands are broken by fragility (the best single
    flat's signed value on the smallest nonempty neighbourhood, closer to
    zero is more fragile) and then by distance from the centre.
    """
    from .constructions import CompactifiedPoint, compactify

    opts = opts or SolveOptions()
    radii = sorted((float(r) for r in radii), reverse=True)
    H = np.array([compactify(x) for x in family.x_b])
    edge = math.pi / 2
    cands = [(CompactifiedPoint("finite", np.zeros(family.dim)), np.zeros(family.dim))]
    tail = range(max(0, len(family) - n_candidates), len(family))
    for i in tail:
        x = family.x_b[i]
        cands.append((CompactifiedPoint("finite", x), H[i]))
        if np.linalg.norm(H[i]) > edge - radii[-1]:
            u = x / np.linalg.norm(x)
            cands.append((CompactifiedPoint("at_infinity", u), edge * u))
    best = None
    for point, y in cands:
        dist = np.linalg.norm(H - y, axis=1)
        need, inner = [], None
        for r in radii:
            idx = np.flatnonzero(dist < r)
            if len(idx):
                inner = idx
            need.append(0 if len(idx) == 0 else greedy_piercing_upper(family.subfamily(idx), k, opts)[0])
        strong = need[-1] >= need[0] and need[-1] >= 2
        score = sum(1 for m in need if m > flat_budget)
        fragility = -math.inf if inner is None else fit_flat(family.subfamily(inner), k, opts).signed
        key = (strong, need[-1], sum(need), round(fragility, 12), float(np.linalg.norm(y)))
        if best is None or key > best[0]:
            best = (key, StrongPointReport(point, score, radii, need, strong))
    return best[1]
