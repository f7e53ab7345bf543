"""Monte-Carlo checks of the cone, wide-cone and projection-ratio bounds.

Each sampler draws near-balls that satisfy a claim's premises, often right
at the edge of them, and measures the quantity the claim bounds.  A
violation raises :class:`CounterexampleFound` unless ``raise_on_violation``
is off (negative controls want to count escapes, not stop at the first).
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import CounterexampleFound, DegenerateInput
from .independence import central_image_extremes

QUARTER_PI = math.pi / 4


@dataclass
class ClaimReport:
    claim: str
    params: dict
    trials: int
    violations: int
    max_observed: float
    bound: float
    seconds: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


def _unit_rows(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _rays_at_angle(rng, axis, angles):
    """Unit vectors at the given angles from ``axis`` in random azimuths."""
    n, d = len(angles), len(axis)
    w = _unit_rows(rng, n, d)
    w -= np.outer(w @ axis, axis)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return np.cos(angles)[:, None] * axis + np.sin(angles)[:, None] * w


def _edge_biased(rng, n, hi):
    """Values in [0, hi) with a third of them squeezed against ``hi``."""
    t = rng.uniform(size=n)
    edge = rng.uniform(size=n) < 1 / 3
    t[edge] = 1.0 - rng.uniform(size=edge.sum()) * 1e-6
    return hi * t


def _max_angles(axis, C, R):
    """Exact largest angle to ``axis`` over each ball B(C[i], R[i])."""
    nc = np.linalg.norm(C, axis=1)
    along = C @ axis
    across = np.linalg.norm(C - np.outer(along, axis), axis=1)
    ang = np.arctan2(across, along)
    out = np.full(len(C), math.pi)
    ok = R < nc
    out[ok] = ang[ok] + np.arcsin(R[ok] / nc[ok])
    return out


def _sample_boundary(rng, C, R, m):
    """``m`` boundary points per ball, stacked."""
    u = _unit_rows(rng, len(C) * m, C.shape[1])
    return np.repeat(C, m, axis=0) + np.repeat(R, m)[:, None] * u


def _sample_members(rng, n, d, K, x_dir, x_angle, x_norm, core_cap):
    """Near-balls with centre x = x_norm * dir(x_angle) and constant <= K.

    ``core_cap[i]`` bounds the core radius (the distance to the axis).  Each
    member is its core plus up to two satellites inside the escribed ball of
    radius K r_in (the ratio condition); satellites may touch that sphere.
    """
    X = x_norm[:, None] * _rays_at_angle(rng, x_dir, x_angle)
    r_in = core_cap * (1.0 - rng.uniform(size=n) ** 3 * 0.999)
    ratio = 1.0 + (K - 1.0) * np.where(rng.uniform(size=n) < 0.5, 1.0, rng.uniform(size=n))
    # additive condition r_esc <= K + r_in as well
    r_esc = np.minimum(ratio * r_in, K + r_in)
    n_sat = rng.integers(0, 3, size=n)
    centres, radii, owner = [X], [r_in], [np.arange(n)]
    for s in range(2):
        has = n_sat > s
        idx = np.flatnonzero(has)
        rho = r_esc[idx] * rng.uniform(0.05, 1.0, size=len(idx))
        u = _unit_rows(rng, len(idx), d)
        centres.append(X[idx] + (r_esc[idx] - rho)[:, None] * u)
        radii.append(rho)
        owner.append(idx)
    return X, r_in, r_esc, np.vstack(centres), np.concatenate(radii), np.concatenate(owner)


def verify_claim_cone(K: float, D: float, eps1: float, trials: int = 10_000, seed: int = 0,
                      d: int = 3, inflate: float = 1.0, raise_on_violation: bool = True,
                      boundary_samples: int = 8) -> ClaimReport:
    """Inflated near-balls far out in the thin cone stay in the eps1 cone.

    With eps' = eps1 / (1 + (pi/2)(K + D)), members have |x_B| >= 1/eps',
    x_B within eps' of the axis, constant <= K and cores off the axis.
    ``inflate`` scales eps' (values > 1 break the premise).  Every part of
    every member, grown by D, is checked exactly; sampled boundary points
    are checked as well.
    """
    if not (K >= 1 and D >= 0 and eps1 > 0):
        raise DegenerateInput("need K >= 1, D >= 0, eps1 > 0")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    axis = np.zeros(d)
    axis[-1] = 1.0
    eps_p = inflate * eps1 / (1.0 + (math.pi / 2) * (K + D))
    alpha = _edge_biased(rng, trials, eps_p)
    alpha = np.maximum(alpha, 1e-300)
    norm = (1.0 / eps_p) * (1.0 + np.where(rng.uniform(size=trials) < 0.5, 0.0,
                                            rng.exponential(1.0, size=trials)))
    core_cap = norm * np.sin(alpha)
    X, r_in, r_esc, C, R, owner = _sample_members(rng, trials, d, K, axis, alpha, norm, core_cap)
    worst_ball = _max_angles(axis, C, R + D)
    worst = np.full(trials, -np.inf)
    np.maximum.at(worst, owner, worst_ball)
    P = _sample_boundary(rng, C, R + D, boundary_samples)
    sampled = np.arctan2(np.linalg.norm(P - np.outer(P @ axis, axis), axis=1), P @ axis)
    esc = worst > eps1
    n_bad = int(esc.sum())
    rep = ClaimReport("cone", {"K": K, "D": D, "eps1": eps1, "d": d, "inflate": inflate, "seed": seed},
                      trials, n_bad, float(worst.max()), float(eps1), time.perf_counter() - t0,
                      {"eps_prime": eps_p, "max_sampled_angle": float(sampled.max()),
                       "sampled_escapes": int((sampled > eps1).sum())})
    if n_bad and raise_on_violation:
        raise CounterexampleFound(f"{n_bad} inflated members leave the cone", rep)
    return rep


def verify_claim_wide_cone(K: float, alpha: float, trials: int = 10_000, seed: int = 0,
                           d: int = 3, raise_on_violation: bool = True,
                           enforce_premise: bool = True) -> ClaimReport:
    """Escribed balls of members centred in C(l, alpha) stay in the pi/4 cone.

    Members have x_B at angle beta <= alpha from the ray l, a core disjoint
    from l and r_esc <= K r_in.  The measured aperture beta + gamma must
    respect alpha (1 + pi K / 2), and the escribed ball must stay within
    pi/4 of l.  ``enforce_premise=False`` lets a negative control run with
    an alpha that is too large.
    """
    bound = alpha * (1.0 + math.pi * K / 2.0)
    if enforce_premise and not bound < QUARTER_PI:
        raise DegenerateInput("premise alpha (1 + pi K / 2) < pi/4 fails")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    axis = np.zeros(d)
    axis[-1] = -1.0
    beta = np.maximum(_edge_biased(rng, trials, alpha), 1e-300)
    norm = np.exp(rng.uniform(-3, 3, size=trials))
    # distance from x_B to the ray equals |x| sin(beta) for beta < pi/2
    core_cap = norm * np.sin(np.minimum(beta, math.pi / 2))
    X, r_in, r_esc, C, R, owner = _sample_members(rng, trials, d, K, axis, beta, norm, core_cap)
    aperture = _max_angles(axis, X, r_esc)
    n_bad = int(np.sum(aperture > bound + 1e-9) + np.sum(aperture >= QUARTER_PI))
    rep = ClaimReport("wide-cone", {"K": K, "alpha": alpha, "d": d, "seed": seed}, trials, n_bad,
                      float(aperture.max()), bound, time.perf_counter() - t0,
                      {"quarter_pi": QUARTER_PI})
    if n_bad and raise_on_violation:
        raise CounterexampleFound(f"{n_bad} escribed balls exceed the aperture bound", rep)
    return rep


def verify_claim_ktok(K: float, trials: int = 10_000, seed: int = 0, d: int = 3,
                      raise_on_violation: bool = True) -> ClaimReport:
    """Projected escribed/inscribed ratio stays at most sqrt(2) K.

    Balls D = B(x, rho) centred at angle beta from the axis with beta plus
    the tangent half-angle at most pi/4 are centrally projected onto the
    tangent hyperplane; the ratio is the largest image distance for the
    escribed ball over the smallest for the core.
    """
    if K < 1:
        raise DegenerateInput("K must be >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    axis = np.zeros(d)
    axis[-1] = -1.0
    beta = _edge_biased(rng, trials, QUARTER_PI * (1 - 1e-9))
    zeta_esc = _edge_biased(rng, trials, QUARTER_PI - beta)
    zeta_esc = np.maximum(zeta_esc, 1e-9)
    norm = np.exp(rng.uniform(-4, 4, size=trials))
    X = norm[:, None] * _rays_at_angle(rng, axis, beta)
    member_K = 1.0 + (K - 1.0) * np.where(rng.uniform(size=trials) < 0.5, 1.0, rng.uniform(size=trials))
    r_esc = norm * np.sin(zeta_esc)
    r_in = r_esc / member_K
    ratios = np.empty(trials)
    for i in range(trials):
        _, inner, _ = central_image_extremes(X[i], r_in[i], axis)
        _, _, outer = central_image_extremes(X[i], r_esc[i], axis)
        ratios[i] = outer / inner
    bound = math.sqrt(2.0) * K
    n_bad = int(np.sum(ratios > bound + 1e-6))
    rep = ClaimReport("ktok", {"K": K, "d": d, "seed": seed}, trials, n_bad,
                      float(ratios.max()), bound, time.perf_counter() - t0,
                      {"max_ratio_over_member_K": float(np.max(ratios / member_K))})
    if n_bad and raise_on_violation:
        raise CounterexampleFound(f"{n_bad} projected members exceed sqrt(2) K", rep)
    return rep
