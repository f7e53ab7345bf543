"""Minimax k-flat fitting and m-flat piercing for near-ball families.

The search space is the canonical chart (c, v_1, ..., v_k): ``c`` orthogonal
to an orthonormal direction basis.  For a fixed direction basis the best
anchor is a convex point minimax in the orthogonal complement, so the solver
descends over directions (Nelder-Mead, re-orthonormalised after every step)
and solves for the anchor exactly.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.optimize

from . import _minimax
from .exceptions import DegenerateInput, Unpierceable
from .geometry import TAU_GEO, KFlat, canonicalize_flat, complement_basis
from .nearball import Family, member_pierced

logger = logging.getLogger(__name__)

METHODS = ("auto", "convex_k0", "multistart_descent", "grid_oracle")


@dataclass(frozen=True)
class SolveOptions:
    restarts: int = 8
    max_iters: int = 2000
    tol_feas: float = 1e-7
    seed: int = 0
    method: str = "auto"
    tol_open: float = TAU_GEO

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.tol_feas > 0:
            raise ValueError("tol_feas must be positive")
        if not self.tol_open >= 0:
            raise ValueError("tol_open must be nonnegative")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    def to_dict(self):
        return {"restarts": self.restarts, "max_iters": self.max_iters, "tol_feas": self.tol_feas,
                "seed": self.seed, "method": self.method, "tol_open": self.tol_open}


@dataclass
class FlatFit:
    """Outcome of a minimax fit.

    ``signed`` is the max over members of the signed gap (negative means every
    member is penetrated); ``value`` is its positive part.  ``lower_bound``
    bounds the optimal signed value from below when the solver can certify it.
    """

    flat: KFlat
    signed: float
    lower_bound: float = -math.inf
    certified: bool = False

    @property
    def value(self) -> float:
        return max(0.0, self.signed)


@dataclass
class TransversalResult:
    found: bool
    fit: FlatFit
    certified: bool

    @property
    def flat(self):
        return self.fit.flat

    @property
    def value(self):
        return self.fit.value

    @property
    def label(self) -> str:
        if self.found:
            return "YES"
        return "NO" if self.certified else "NO_HEURISTIC"


@dataclass
class TransversalCertificate:
    flats: list
    assignment: list
    residuals: list
    open_flag: bool = False
    tol_feas: float = 1e-7
    tol_open: float = TAU_GEO
    certified: bool = True

    @property
    def m(self) -> int:
        return len(self.flats)


@dataclass
class PiercingFailure:
    best_residual: float
    certified: bool = False
    mode: str = "alternating"

    def __bool__(self):
        return False


def _check_k(family: Family, k: int):
    if not 0 <= k <= family.dim - 1:
        raise DegenerateInput(f"k={k} outside [0, {family.dim - 1}]")


def _pierce_ok(signed: float, open_flag: bool, opts: SolveOptions) -> bool:
    if open_flag:
        return signed < -opts.tol_open
    return signed <= opts.tol_feas


class _EarlyStop(Exception):
    pass


class _DirectionObjective:
    """Signed minimax value as a function of a direction basis.

    Descent runs in a local chart around a base basis ``V0``: a point ``Z``
    of shape (k, d - k) maps to ``qr(V0 + Z @ W0)`` where ``W0`` spans the
    complement of ``V0``.  The chart has exactly the Grassmannian's
    dimension, so the simplex never wastes moves on scale or rotation
    within the span.
    """

    def __init__(self, family: Family, k: int, stop_below: float):
        self.family = family
        self.k = k
        self.d = family.dim
        self.stop_below = stop_below
        self.best = (math.inf, None, None)
        self.n_evals = 0
        self.V0 = None
        self.W0 = None

    def orthonormal(self, V):
        Q, _ = np.linalg.qr(np.asarray(V, dtype=float).reshape(self.k, self.d).T)
        return Q.T

    def solve(self, V):
        """V must have orthonormal rows; returns (anchor, value, lower bound, exact)."""
        fam = self.family
        W = complement_basis(V, self.d)
        coords = fam.centers @ W.T
        if fam.single_part:
            x, v, lb = _minimax.convex_minimax(coords, fam.radii)
            exact = True
        else:
            x, v, lb, exact = _minimax.general_minimax(coords, fam.radii, fam.offsets)
        return x @ W, v, lb, exact

    def evaluate(self, V):
        c, v, _, _ = self.solve(V)
        self.n_evals += 1
        if v < self.best[0]:
            self.best = (v, V, c)
            if v <= self.stop_below:
                raise _EarlyStop
        return v

    def set_base(self, V):
        self.V0 = self.orthonormal(V)
        self.W0 = complement_basis(self.V0, self.d)

    def __call__(self, z):
        Z = z.reshape(self.k, self.d - self.k)
        return self.evaluate(self.orthonormal(self.V0 + Z @ self.W0))


class _NormalObjective:
    """Hyperplane case: the signed value as a function of the unit normal.

    The offset along the normal is an exact 1-d problem, so each evaluation
    is a projection and a couple of reductions.  Descent uses the chart
    ``n0 + z @ T0`` with ``T0`` spanning the tangent space at ``n0``.
    """

    def __init__(self, family: Family, stop_below: float):
        self.family = family
        self.d = family.dim
        self.stop_below = stop_below
        self.best = (math.inf, None, 0.0)
        self.n0 = None
        self.T0 = None

    def solve(self, n):
        fam = self.family
        a = fam.centers @ n
        if fam.single_part:
            s, v = _minimax.interval_minimax(a, fam.radii)
        else:
            s, v = _minimax.interval_minimax_multi(a, fam.radii, fam.offsets)
        return float(s), float(v)

    def evaluate(self, n):
        s, v = self.solve(n)
        if v < self.best[0]:
            self.best = (v, n, s)
            if v <= self.stop_below:
                raise _EarlyStop
        return v

    def set_base(self, n):
        self.n0 = n / np.linalg.norm(n)
        self.T0 = complement_basis(self.n0[None, :], self.d)

    def __call__(self, z):
        n = self.n0 + z @ self.T0
        return self.evaluate(n / np.linalg.norm(n))


def _descend(obj, starts, dim, opts, to_base):
    """Nelder-Mead rounds in a local chart, re-based after each round."""
    for x in starts:
        step = 0.25
        for _round in range(3):
            obj.set_base(x)
            simplex = np.vstack([np.zeros(dim), step * np.eye(dim)])
            res = scipy.optimize.minimize(
                obj, np.zeros(dim), method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": opts.max_iters,
                         "initial_simplex": simplex},
            )
            x = to_base(res.x)
            step *= 0.1


def _seed_directions(family: Family, k: int, opts: SolveOptions, rng):
    d = family.dim
    seeds = []
    axes = list(itertools.combinations(range(d), k))[:10]
    for ax in axes:
        seeds.append(np.eye(d)[list(ax)])
    cores = family.x_b
    n = len(family)
    if n >= k + 1:
        total = math.comb(n, k + 1)
        budget = 6 * opts.restarts
        if total <= budget:
            subsets = list(itertools.combinations(range(n), k + 1))
        else:
            subsets = [tuple(rng.choice(n, size=k + 1, replace=False)) for _ in range(budget)]
        for sub in subsets:
            diffs = cores[list(sub[1:])] - cores[sub[0]]
            if np.linalg.matrix_rank(diffs, tol=1e-12) == k:
                seeds.append(diffs)
    for _ in range(opts.restarts):
        seeds.append(rng.normal(size=(k, d)))
    return seeds


def fit_flat(family: Family, k: int, opts: Optional[SolveOptions] = None,
             stop_below: float = -math.inf) -> FlatFit:
    """Minimise the signed minimax gap over k-flats.

    Exact (with a certified lower bound) for k = 0 and single-part members;
    a seeded multi-start heuristic otherwise.  ``stop_below`` lets decision
    callers quit as soon as a good enough flat shows up.
    """
    opts = opts or SolveOptions()
    _check_k(family, k)
    method = opts.method
    if method == "grid_oracle":
        from .oracle import grid_fit_flat
        return grid_fit_flat(family, k)
    if method == "convex_k0" and (k != 0 or not family.single_part):
        raise ValueError("convex_k0 needs k = 0 and single-part members")
    if len(family) == 1:
        # through the centre of the largest part
        j = int(np.argmax(family.radii))
        return FlatFit(canonicalize_flat(family.centers[j], np.eye(family.dim)[:k]),
                       -float(family.radii[j]), -float(family.radii[j]), True)
    obj = _DirectionObjective(family, k, stop_below)
    if k == 0:
        c, v, lb, exact = obj.solve(np.zeros((0, family.dim)))
        return FlatFit(canonicalize_flat(c), v, lb, exact)

    rng = np.random.default_rng(opts.seed)
    seeds = [obj.orthonormal(s) for s in _seed_directions(family, k, opts, rng)]
    if k == family.dim - 1:
        return _fit_hyperplane(family, seeds, opts, stop_below)
    try:
        scored = sorted((obj.evaluate(V), i) for i, V in enumerate(seeds))
        for _, i in scored[: opts.restarts]:
            V = seeds[i]
            for _round in range(4):
                before = obj.best[0]
                V = _joint_refine(obj, V, opts)
                obj.evaluate(V)
                if obj.best[0] > before - 1e-13:
                    break
    except _EarlyStop:
        pass
    v, V, c = obj.best
    flat = canonicalize_flat(c, V)
    signed = float(np.max(family.member_gaps(flat)))
    return FlatFit(flat, signed)


def _joint_refine(obj: _DirectionObjective, V0, opts: SolveOptions):
    """One smooth local solve over direction, anchor and level together.

    In the chart ``V = V0 + Z @ W0`` the complement of ``V`` is spanned by
    ``W0 - Z.T @ V0`` with Gram matrix ``I + Z.T @ Z``, so squared distances
    are ``q G^-1 q`` with ``q = P_w - P_v @ Z - x``.  Multi-part members use
    the part nearest to the current flat.
    """
    fam = obj.family
    k, d = obj.k, obj.d
    m = d - k
    V0 = obj.orthonormal(V0)
    W0 = complement_basis(V0, d)
    c0, v0, _, _ = obj.solve(V0)
    C, r = fam.centers, fam.radii
    if not fam.single_part:
        gaps = np.linalg.norm((C - c0) @ W0.T, axis=1) - r
        sel = np.array([lo + int(np.argmin(gaps[lo:hi]))
                        for lo, hi in zip(fam.offsets[:-1], fam.offsets[1:])])
        C, r = C[sel], r[sel]
    shift = C.mean(axis=0)
    scale = float(max(np.max(np.abs(C - shift)), np.max(r), 1e-300))
    Cn = (C - shift) / scale
    rn = r / scale
    Pv = Cn @ V0.T
    Pw = Cn @ W0.T
    n = len(rn)
    nz = k * m

    def unpack(z):
        return z[:nz].reshape(k, m), z[nz:nz + m], z[-1]

    def parts(z):
        Z, x, t = unpack(z)
        q = Pw - Pv @ Z - x
        y = np.linalg.solve(np.eye(m) + Z.T @ Z, q.T).T
        return Z, t, q, y

    def cons(z):
        _, t, q, y = parts(z)
        return np.concatenate([(rn + t) ** 2 - np.sum(q * y, axis=1), rn + t])

    def cons_jac(z):
        Z, t, q, y = parts(z)
        w = Pv + y @ Z.T
        dZ = 2.0 * (w[:, :, None] * y[:, None, :]).reshape(n, nz)
        J1 = np.hstack([dZ, 2.0 * y, 2.0 * (rn + t)[:, None]])
        J2 = np.hstack([np.zeros((n, nz + m)), np.ones((n, 1))])
        return np.vstack([J1, J2])

    x0 = (c0 - shift) @ W0.T / scale
    z0 = np.concatenate([np.zeros(nz), x0, [max(v0 / scale, -float(rn.min()))]])
    grad = np.zeros(nz + m + 1)
    grad[-1] = 1.0
    res = scipy.optimize.minimize(
        lambda z: z[-1], z0, jac=lambda z: grad, method="SLSQP",
        constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
        options={"ftol": 1e-15, "maxiter": opts.max_iters},
    )
    Z = unpack(res.x)[0]
    if not np.all(np.isfinite(Z)):
        return V0
    return obj.orthonormal(V0 + Z @ W0)


def _fit_hyperplane(family, seeds, opts, stop_below):
    d = family.dim
    obj = _NormalObjective(family, stop_below)
    normals = [complement_basis(V, d)[0] for V in seeds]
    try:
        scored = sorted((obj.evaluate(n), i) for i, n in enumerate(normals))
        starts = [normals[i] for _, i in scored[: opts.restarts]]

        def to_base(z):
            n = obj.n0 + z @ obj.T0
            return n / np.linalg.norm(n)

        _descend(obj, starts, d - 1, opts, to_base)
    except _EarlyStop:
        pass
    _, n, s = obj.best
    flat = canonicalize_flat(s * n, complement_basis(n[None, :], d))
    signed = float(np.max(family.member_gaps(flat)))
    return FlatFit(flat, signed)


def min_max_flat(family: Family, k: int, opts: Optional[SolveOptions] = None):
    """Return ``(flat, value)`` minimising the max member-to-flat distance."""
    fit = fit_flat(family, k, opts)
    return fit.flat, fit.value


def exists_transversal(family: Family, k: int, opts: Optional[SolveOptions] = None) -> TransversalResult:
    """Decide whether one k-flat pierces every member.

    A NO is certified only when the solver holds a lower bound above the
    tolerance (k = 0 or enumerated unions); otherwise it is heuristic.
    """
    opts = opts or SolveOptions()
    stop = -2.0 * opts.tol_open if family.open_flag else -opts.tol_feas
    fit = fit_flat(family, k, opts, stop_below=stop)
    found = _pierce_ok(fit.signed, family.open_flag, opts)
    if found:
        return TransversalResult(True, fit, True)
    if family.open_flag:
        certified = fit.lower_bound >= -opts.tol_open
    else:
        certified = fit.lower_bound > opts.tol_feas
    return TransversalResult(False, fit, bool(certified))


def flat_through_point(x, k: int) -> KFlat:
    x = np.asarray(x, dtype=float)
    return canonicalize_flat(x, np.eye(len(x))[:k])


def make_certificate(family: Family, flats, opts: SolveOptions, certified=True):
    """Assign each member to its best flat and record residuals."""
    gaps = np.column_stack([family.member_gaps(f) for f in flats])
    assignment = np.argmin(gaps, axis=1)
    best = gaps[np.arange(len(family)), assignment]
    ok = member_pierced(best, family.open_flag, opts.tol_open, opts.tol_feas)
    if not np.all(ok):
        return None, float(np.max(np.maximum(best, 0.0)))
    cert = TransversalCertificate(
        flats=list(flats),
        assignment=[int(a) for a in assignment],
        residuals=[float(max(0.0, g)) for g in best],
        open_flag=family.open_flag,
        tol_feas=opts.tol_feas,
        tol_open=opts.tol_open,
        certified=certified,
    )
    return cert, float(np.max(np.maximum(best, 0.0)))


def _unique_members(family: Family):
    """Indices of first occurrences and a map from members to them."""
    keys = {}
    rep = np.empty(len(family), dtype=int)
    uniq = []
    for i in range(len(family)):
        lo, hi = family.offsets[i], family.offsets[i + 1]
        key = (family.centers[lo:hi].tobytes(), family.radii[lo:hi].tobytes(), int(family.core[i]))
        if key not in keys:
            keys[key] = len(uniq)
            uniq.append(i)
        rep[i] = keys[key]
    return np.array(uniq), rep


def _set_partitions(n: int, m: int):
    """Restricted growth strings for partitions of range(n) into exactly m blocks."""
    a = [0] * n

    def rec(i, used):
        if n - i < m - used:
            return
        if i == n:
            if used == m:
                yield list(a)
            return
        for b in range(min(used + 1, m)):
            a[i] = b
            yield from rec(i + 1, max(used, b + 1))

    yield from rec(1, 1) if n else iter(())


def _check_pierceable(family: Family, k: int, opts: SolveOptions):
    if family.open_flag:
        # best any flat can do is pass through the deepest part centre
        bad = np.flatnonzero(family.reduce_members(family.radii, np.maximum) <= opts.tol_open)
        if len(bad):
            raise Unpierceable(f"{len(bad)} open member(s) have no part deeper than tol_open", bad)


def pierce_with_m_flats(family: Family, k: int, m: int, opts: Optional[SolveOptions] = None,
                        mode: str = "auto"):
    """Try to pierce the family with ``m`` k-flats.

    Identical members are merged first.  Up to 10 distinct members and
    ``m <= 3`` every partition is enumerated; otherwise alternating
    assignment and refitting runs from seeded starts.  Returns a
    :class:`TransversalCertificate` or a :class:`PiercingFailure`.
    """
    opts = opts or SolveOptions()
    _check_k(family, k)
    if m < 1:
        raise ValueError("m must be >= 1")
    _check_pierceable(family, k, opts)
    uniq, _ = _unique_members(family)
    n = len(uniq)
    if m >= n:
        flats = [flat_through_point(family.x_b[i], k) for i in uniq]
        cert, _ = make_certificate(family, flats, opts)
        return cert
    if mode == "auto":
        mode = "exhaustive" if n <= 10 and m <= 3 else "alternating"
    if mode == "exhaustive":
        return _pierce_exhaustive(family, uniq, k, m, opts)
    return _pierce_alternating(family, k, m, opts)


def _pierce_exhaustive(family, uniq, k, m, opts):
    cache = {}

    def block(mask):
        if mask not in cache:
            idx = [uniq[i] for i in range(len(uniq)) if mask >> i & 1]
            cache[mask] = exists_transversal(family.subfamily(idx), k, opts)
        return cache[mask]

    n = len(uniq)
    all_certified = True
    best = math.inf
    for labels in _set_partitions(n, m):
        masks = [0] * m
        for i, b in enumerate(labels):
            masks[b] |= 1 << i
        results = [block(mk) for mk in masks]
        if all(r.found for r in results):
            cert, _ = make_certificate(family, [r.flat for r in results], opts)
            if cert is not None:
                return cert
        failing = [r for r in results if not r.found]
        best = min(best, max(r.value for r in results))
        if not any(r.certified for r in failing):
            all_certified = False
    return PiercingFailure(best, certified=all_certified, mode="exhaustive")


def _pierce_alternating(family, k, m, opts):
    rng = np.random.default_rng(opts.seed)
    n = len(family)
    best = math.inf
    stop = -2.0 * opts.tol_open if family.open_flag else -opts.tol_feas
    for _ in range(opts.restarts):
        starts = rng.choice(n, size=m, replace=False)
        flats = [flat_through_point(family.x_b[i], k) for i in starts]
        prev = None
        for _it in range(25):
            gaps = np.column_stack([family.member_gaps(f) for f in flats])
            labels = np.argmin(gaps, axis=1)
            cert, resid = make_certificate(family, flats, opts)
            best = min(best, resid)
            if cert is not None:
                return cert
            if prev is not None and np.array_equal(labels, prev):
                break
            prev = labels
            new = []
            for j in range(m):
                idx = np.flatnonzero(labels == j)
                if len(idx) == 0:
                    # re-seed an empty cluster at the worst-served member
                    worst = int(np.argmax(gaps.min(axis=1)))
                    new.append(flat_through_point(family.x_b[worst], k))
                else:
                    new.append(fit_flat(family.subfamily(idx), k, opts, stop_below=stop).flat)
            flats = new
    return PiercingFailure(best, certified=False, mode="alternating")


def _candidate_flats(family: Family, remaining: np.ndarray, k: int, rng, n_samples: int):
    d = family.dim
    cores = family.x_b[remaining]
    out = []
    n = len(remaining)
    # axis-aligned flats through a few cores (smallest cores first)
    order = np.argsort(family.r_in[remaining], kind="stable")
    for i in order[: min(n, 4)]:
        for ax in list(itertools.combinations(range(d), k))[:6]:
            out.append(canonicalize_flat(cores[i], np.eye(d)[list(ax)]))
    if n >= k + 1:
        for _ in range(n_samples):
            sub = rng.choice(n, size=k + 1, replace=False)
            diffs = cores[sub[1:]] - cores[sub[0]]
            if np.linalg.matrix_rank(diffs, tol=1e-12) == k:
                out.append(canonicalize_flat(cores[sub[0]], diffs))
    return out


def greedy_piercing_upper(family: Family, k: int, opts: Optional[SolveOptions] = None):
    """Greedy upper bound on the number of k-flats needed.

    Returns ``(m, certificate)``.  Each round picks, among sampled flats
    through k+1 member cores (and a full refit on what is left), the one
    piercing the most remaining members, then improves it by refitting on
    its pierced set plus the nearest misses.
    """
    opts = opts or SolveOptions()
    _check_k(family, k)
    _check_pierceable(family, k, opts)
    rng = np.random.default_rng(opts.seed)
    stop = -2.0 * opts.tol_open if family.open_flag else -opts.tol_feas
    remaining = np.arange(len(family))
    flats = []

    def pierced_mask(flat, idx):
        gaps = family.subfamily(idx).member_gaps(flat)
        return member_pierced(gaps, family.open_flag, opts.tol_open, opts.tol_feas), gaps

    while len(remaining):
        sub = family.subfamily(remaining)
        whole = fit_flat(sub, k, opts, stop_below=stop)
        if _pierce_ok(whole.signed, family.open_flag, opts):
            flats.append(whole.flat)
            break
        best_flat, best_mask = whole.flat, pierced_mask(whole.flat, remaining)[0]
        for cand in _candidate_flats(family, remaining, k, rng, 8 * opts.restarts):
            mask, _ = pierced_mask(cand, remaining)
            if mask.sum() > best_mask.sum():
                best_flat, best_mask = cand, mask
        # local improvement: absorb the nearest misses one at a time
        for _ in range(8):
            if best_mask.all():
                break
            _, gaps = pierced_mask(best_flat, remaining)
            misses = np.flatnonzero(~best_mask)
            j = misses[np.argmin(gaps[misses])]
            trial_idx = remaining[np.append(np.flatnonzero(best_mask), j)]
            res = exists_transversal(family.subfamily(trial_idx), k, opts)
            if not res.found:
                break
            mask, _ = pierced_mask(res.flat, remaining)
            if mask.sum() <= best_mask.sum():
                break
            best_flat, best_mask = res.flat, mask
        if not best_mask.any():
            best_flat = flat_through_point(family.x_b[remaining[0]], k)
            best_mask, _ = pierced_mask(best_flat, remaining)
        flats.append(best_flat)
        remaining = remaining[~best_mask]
    cert, _ = make_certificate(family, flats, opts)
    if cert is None:
        raise RuntimeError("greedy flats do not pierce the family")  # pragma: no cover
    return cert.m, cert
