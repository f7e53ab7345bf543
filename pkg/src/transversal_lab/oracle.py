"""Brute-force oracles for small instances (d <= 3).

Nothing here calls the descent solver: directions are swept on grids that
are refined around the best cells, and anchors come either from an exact
1-d candidate enumeration or from a zooming point grid.
"""
from __future__ import annotations

import math

import numpy as np

from .geometry import KFlat, canonicalize_flat, complement_basis
from .nearball import Family
from .solver import FlatFit

MAX_ORACLE_DIM = 3
MAX_ORACLE_MEMBERS = 8


def interval_depth(a, r, offsets=None):
    """Exact best signed value along one axis, vectorised over rows of ``a``.

    ``a`` has shape (n_dirs, n_parts).  For single-part members the members'
    intervals [a - r, a + r] share a point iff max(a - r) <= min(a + r) (1-d
    Helly); the best offset is the midpoint of that gap.  For unions the
    objective is evaluated at every midpoint of a right and a left endpoint.
    """
    a = np.atleast_2d(a)
    if offsets is None or len(offsets) - 1 == a.shape[1]:
        left = np.max(a - r, axis=1)
        right = np.min(a + r, axis=1)
        return 0.5 * (left - right), 0.5 * (left + right)
    right_end = a + r
    left_end = a - r
    cand = 0.5 * (right_end[:, :, None] + left_end[:, None, :]).reshape(a.shape[0], -1)
    gaps = np.abs(cand[:, :, None] - a[:, None, :]) - r
    vals = np.minimum.reduceat(gaps, offsets[:-1], axis=2).max(axis=2)
    j = np.argmin(vals, axis=1)
    rows = np.arange(a.shape[0])
    return vals[rows, j], cand[rows, j]


def _line_normals(thetas):
    N = np.column_stack([np.cos(thetas), np.sin(thetas)])
    # exact axes where the grid hits them
    for q in range(3):
        hit = np.isclose(thetas, q * math.pi / 2, atol=1e-15, rtol=0)
        N[hit] = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)][q]
    return N


def sweep_lines_2d(family: Family, n_angles: int = 3600, rounds: int = 6, top: int = 8):
    """Best signed minimax value over all lines in the plane.

    Sweeps the normal angle over [0, pi) and refines around the best angles.
    Returns ``(signed, theta, offset)`` for the line ``<n(theta), x> = offset``.
    """
    if family.dim != 2:
        raise ValueError("line sweep needs d = 2")
    C, r, off = family.centers, family.radii, family.offsets

    def evaluate(thetas):
        N = _line_normals(thetas)
        a = N @ C.T
        return interval_depth(a, r, off)

    thetas = np.arange(n_angles) * (math.pi / n_angles)
    vals, offs = evaluate(thetas)
    step = math.pi / n_angles
    order = np.argsort(vals, kind="stable")[:top]
    best = (float(vals[order[0]]), float(thetas[order[0]]), float(offs[order[0]]))
    centres = thetas[order]
    for _ in range(rounds):
        new_centres = []
        for t0 in centres:
            local = t0 + np.linspace(-step, step, 41)
            v, o = evaluate(np.mod(local, math.pi))
            i = int(np.argmin(v))
            if v[i] < best[0]:
                best = (float(v[i]), float(np.mod(local[i], math.pi)), float(o[i]))
            new_centres.append(local[i])
        centres = new_centres
        step /= 20.0
    return best


def line_from_normal(theta: float, offset: float) -> KFlat:
    n = _line_normals(np.array([theta]))[0]
    return canonicalize_flat(offset * n, [[-n[1], n[0]]])


def _point_grid_minimax(C, r, offsets, rounds=10, G=21, keep=3):
    """Zooming grid search for min_x max_i min_p ||x - c_p|| - r_p."""
    m = C.shape[1]
    if m == 0:
        return np.zeros(0), float(np.max(np.minimum.reduceat(-r, offsets[:-1])))
    lo = C.min(axis=0) - r.max()
    hi = C.max(axis=0) + r.max()
    centre = 0.5 * (lo + hi)
    half = 0.5 * float(np.max(hi - lo)) + 1e-12
    boxes = [(centre, half)]
    best_x, best_v = centre, math.inf
    for _ in range(rounds):
        pts = []
        for c0, h in boxes:
            axes = [np.linspace(c0[j] - h, c0[j] + h, G) for j in range(m)]
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
            pts.append(mesh)
        P = np.vstack(pts)
        gaps = np.linalg.norm(P[:, None, :] - C[None], axis=2) - r
        vals = np.minimum.reduceat(gaps, offsets[:-1], axis=1).max(axis=1)
        order = np.argsort(vals, kind="stable")[:keep]
        if vals[order[0]] < best_v:
            best_x, best_v = P[order[0]], float(vals[order[0]])
        h_new = 2.0 * boxes[0][1] / (G - 1)
        boxes = [(P[i], h_new) for i in order]
    return best_x, best_v


def _sphere_directions(n: int, d: int):
    if d == 2:
        t = np.arange(n) * (math.pi / n)
        return np.column_stack([np.cos(t), np.sin(t)])
    # Fibonacci points on the upper hemisphere
    i = np.arange(n) + 0.5
    z = i / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rho = np.sqrt(1 - z * z)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def _tangent_jitter(u, radius, count, rng):
    W = complement_basis(u[None, :], len(u))
    Z = rng.uniform(-radius, radius, size=(count, W.shape[0]))
    V = u + Z @ W
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def grid_fit_flat(family: Family, k: int, n_dirs: int = 720, rounds: int = 6, seed: int = 0) -> FlatFit:
    """Oracle minimax fit for d <= 3 and at most 8 members."""
    d = family.dim
    if d > MAX_ORACLE_DIM or len(family) > MAX_ORACLE_MEMBERS:
        raise ValueError("grid oracle supports d <= 3 and at most 8 members")
    C, r, off = family.centers, family.radii, family.offsets
    if k == 0:
        x, v = _point_grid_minimax(C, r, off, rounds=14)
        return FlatFit(canonicalize_flat(x), v)
    if d == 2 and k == 1:
        v, theta, s = sweep_lines_2d(family, n_angles=n_dirs * 5, rounds=rounds)
        return FlatFit(line_from_normal(theta, s), v)
    rng = np.random.default_rng(seed)
    if k == d - 1:
        # hyperplanes in R^3: sweep unit normals, exact offset
        def score(N):
            v, s = interval_depth(N @ C.T, r, off)
            return v, s

        N = _sphere_directions(n_dirs * 4, d)
        v, s = score(N)
        order = np.argsort(v, kind="stable")[:8]
        best = (float(v[order[0]]), N[order[0]], float(s[order[0]]))
        rad = 2.0 / math.sqrt(n_dirs)
        cands = [N[i] for i in order]
        for _ in range(rounds * 2):
            nxt = []
            for u in cands:
                J = np.vstack([u, _tangent_jitter(u, rad, 200, rng)])
                vj, sj = score(J)
                i = int(np.argmin(vj))
                if vj[i] < best[0]:
                    best = (float(vj[i]), J[i], float(sj[i]))
                nxt.append(J[i])
            cands = nxt
            rad /= 3.0
        v, n, s = best
        return FlatFit(canonicalize_flat(s * n, complement_basis(n[None, :], d)), v)

    # lines in R^3: sweep directions, zooming grid for the anchor
    def score_dir(u, rounds_inner):
        W = complement_basis(u[None, :], d)
        x, v = _point_grid_minimax(C @ W.T, r, off, rounds=rounds_inner)
        return v, x @ W

    U = _sphere_directions(n_dirs, d)
    coarse = np.array([score_dir(u, 5)[0] for u in U])
    order = np.argsort(coarse, kind="stable")[:6]
    best = (math.inf, None, None)
    rad = 2.0 / math.sqrt(n_dirs)
    cands = [U[i] for i in order]
    for _ in range(rounds):
        nxt = []
        for u in cands:
            J = np.vstack([u, _tangent_jitter(u, rad, 24, rng)])
            scored = [score_dir(w, 8) for w in J]
            i = int(np.argmin([s[0] for s in scored]))
            if scored[i][0] < best[0]:
                best = (scored[i][0], J[i], scored[i][1])
            nxt.append(J[i])
        cands = nxt
        rad /= 3.0
    v, u, c = best
    return FlatFit(canonicalize_flat(c, u[None, :]), v)
