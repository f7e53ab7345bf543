"""Point minimax kernels: min over x of max_i min_{p in i} (||x - c_p|| - r_p).

These are the k = 0 building blocks; flat fitting reduces to them after
projecting onto the orthogonal complement of a candidate direction space.
Values are signed: negative means every member is penetrated.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import scipy.optimize
from scipy.spatial.distance import pdist

_PAIR_LIMIT = 1500
_SELECTION_LIMIT = 256


def point_values(x, C, r, offsets=None):
    """Signed gaps of a single point against every member."""
    gaps = np.linalg.norm(C - x, axis=1) - r
    if offsets is None:
        return gaps
    return np.minimum.reduceat(gaps, offsets[:-1])


def interval_minimax(a, r):
    """Exact 1-d solution for single-part members: returns (x, value)."""
    lo = np.max(a - r)
    hi = np.min(a + r)
    return 0.5 * (lo + hi), 0.5 * (lo - hi)


def interval_minimax_multi(a, r, offsets):
    """Exact 1-d solution when members are unions of intervals.

    The objective is piecewise linear with slopes +-1, so its minimum sits at
    the midpoint of some right endpoint ``a_p + r_p`` and left endpoint
    ``a_q - r_q``.
    """
    right = a + r
    left = a - r
    cand = np.unique(0.5 * (right[:, None] + left[None, :]).ravel())
    best_x, best_v = None, math.inf
    for chunk in np.array_split(cand, max(1, len(cand) // 4096)):
        gaps = np.abs(chunk[:, None] - a[None, :]) - r[None, :]
        vals = np.minimum.reduceat(gaps, offsets[:-1], axis=1).max(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_x, best_v = chunk[i], float(vals[i])
    return best_x, best_v


def _pair_lower_bound(C, r):
    n = len(r)
    if n < 2:
        return -float(r[0])
    if n > _PAIR_LIMIT:
        idx = np.argsort(-np.linalg.norm(C - C.mean(0), axis=1))[:_PAIR_LIMIT]
        C, r = C[idx], r[idx]
    D = pdist(C)
    i, j = np.triu_indices(len(r), 1)
    rr = r[i] + r[j]
    return float(max(np.max((D - rr) / 2.0), np.max(-r)))


def _dual_lower_bound(C, r, x, v):
    """Lower bound from a convex combination of subgradients at ``x``.

    Each ||y - c_i|| - r_i is underestimated by its linearisation at x, and
    any minimiser y* lies within ||x - c_i|| + v + r_i of x.
    """
    f = np.linalg.norm(C - x, axis=1) - r
    active = np.flatnonzero(f >= v - 1e-7 * (1.0 + abs(v)))
    diff = x - C[active]
    nrm = np.linalg.norm(diff, axis=1)
    S = np.divide(diff, nrm[:, None], out=np.zeros_like(diff), where=nrm[:, None] > 0)
    w = 1e3
    A = np.vstack([S.T, w * np.ones((1, len(active)))])
    b = np.concatenate([np.zeros(S.shape[1]), [w]])
    lam, _ = scipy.optimize.nnls(A, b)
    if lam.sum() <= 0:
        return -math.inf
    lam = lam / lam.sum()
    sbar = float(np.linalg.norm(lam @ S))
    R = float(np.min(np.linalg.norm(C - x, axis=1) + v + r))
    return float(lam @ f[active]) - sbar * max(R, 0.0)


def convex_minimax(C, r):
    """Solve min_x max_i (||x - c_i|| - r_i) for single-part members.

    Returns ``(x, value, lower_bound)``; ``lower_bound`` is a certified
    bound on the optimum (tight for one or two members).
    """
    C = np.asarray(C, dtype=float)
    r = np.asarray(r, dtype=float)
    n, m = C.shape
    if n == 1:
        return C[0].copy(), -float(r[0]), -float(r[0])
    if m == 1:
        x, v = interval_minimax(C[:, 0], r)
        return np.array([x]), float(v), float(v)
    shift = C.mean(axis=0)
    scale = float(max(np.max(np.abs(C - shift)), np.max(r), 1e-300))
    Cn = (C - shift) / scale
    rn = r / scale

    def obj(z):
        return z[m]

    def obj_grad(z):
        g = np.zeros(m + 1)
        g[m] = 1.0
        return g

    def cons(z):
        x, t = z[:m], z[m]
        d2 = np.sum((x - Cn) ** 2, axis=1)
        return np.concatenate([(rn + t) ** 2 - d2, rn + t])

    def cons_jac(z):
        x, t = z[:m], z[m]
        J1 = np.hstack([-2.0 * (x - Cn), 2.0 * (rn + t)[:, None]])
        J2 = np.hstack([np.zeros((n, m)), np.ones((n, 1))])
        return np.vstack([J1, J2])

    candidates = [np.zeros(m)]
    # pairwise optimum of the two members farthest apart is a good warm start
    i, j = np.unravel_index(np.argmax(np.sum((Cn[:, None] - Cn[None]) ** 2, axis=2)), (n, n))
    dij = np.linalg.norm(Cn[j] - Cn[i])
    if dij > 0:
        a = np.clip((dij + rn[i] - rn[j]) / 2.0, 0.0, dij)
        candidates.append(Cn[i] + a * (Cn[j] - Cn[i]) / dij)
    best_x, best_v = None, math.inf
    for x0 in candidates:
        v0 = float(np.max(np.linalg.norm(x0 - Cn, axis=1) - rn))
        res = scipy.optimize.minimize(
            obj, np.append(x0, v0), jac=obj_grad, method="SLSQP",
            constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
            options={"ftol": 1e-15, "maxiter": 500},
        )
        x = res.x[:m]
        v = float(np.max(np.linalg.norm(x - Cn, axis=1) - rn))
        if v < best_v:
            best_x, best_v = x, v
    if not np.isfinite(best_v):
        best_x = np.zeros(m)
        best_v = float(np.max(np.linalg.norm(Cn, axis=1) - rn))
    res = scipy.optimize.minimize(
        lambda x: np.max(np.linalg.norm(x - Cn, axis=1) - rn), best_x,
        method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 400 * m},
    )
    if res.fun < best_v:
        best_x, best_v = res.x, float(res.fun)
    x = best_x * scale + shift
    v = float(np.max(np.linalg.norm(x - C, axis=1) - r))
    lb = max(_pair_lower_bound(C, r), _dual_lower_bound(C, r, x, v))
    return x, v, min(lb, v)


def general_minimax(C, r, offsets, rng=None):
    """Minimax for members that are unions of balls.

    Enumerates one part per member when the number of selections is small
    (exact, since each selection is convex); otherwise runs Nelder-Mead from
    several starts.  Returns ``(x, value, lower_bound, exact)``.
    """
    C = np.asarray(C, dtype=float)
    r = np.asarray(r, dtype=float)
    offsets = np.asarray(offsets)
    sizes = np.diff(offsets)
    n_members = len(sizes)
    if np.all(sizes == 1):
        x, v, lb = convex_minimax(C, r)
        return x, v, lb, True
    m = C.shape[1]
    if m == 1:
        x, v = interval_minimax_multi(C[:, 0], r, offsets)
        return np.array([x]), v, v, True
    n_select = math.prod(int(s) for s in sizes)
    if n_select <= _SELECTION_LIMIT:
        best = (None, math.inf, math.inf)
        lb_all = math.inf
        for sel in itertools.product(*[range(lo, hi) for lo, hi in zip(offsets[:-1], offsets[1:])]):
            sel = list(sel)
            x, v, lb = convex_minimax(C[sel], r[sel])
            lb_all = min(lb_all, lb)
            if v < best[1]:
                best = (x, v, lb)
        return best[0], best[1], lb_all, True

    rng = np.random.default_rng(0) if rng is None else rng

    def g(x):
        return float(np.max(point_values(x, C, r, offsets)))

    starts = [C[offsets[:-1][i]] for i in range(min(n_members, 8))]
    starts.append(C.mean(axis=0))
    best_x, best_v = None, math.inf
    for x0 in starts:
        res = scipy.optimize.minimize(g, x0, method="Nelder-Mead",
                                      options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 600 * m})
        if res.fun < best_v:
            best_x, best_v = res.x, float(res.fun)
    return best_x, best_v, -math.inf, False
