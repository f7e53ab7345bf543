"""Explicit families: the open-disc counterexample, sharpness examples,
shrinking sequences, the compactification map and the disjoint-sequence
builder for accumulation points.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateInput, NoInnerTangents, SamplerExhausted
from .geometry import TAU_ANGLE, TAU_GEO, ClosedBall, angle_between, canonicalize_flat
from .nearball import Family, NearBall
from .solver import SolveOptions, exists_transversal

HALF_PI = math.pi / 2


@dataclass(frozen=True, eq=False)
class CompactifiedPoint:
    """A finite point, or a unit direction standing for a point at infinity."""

    kind: str
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1)
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.kind not in ("finite", "at_infinity"):
            raise DegenerateInput(f"unknown kind {self.kind!r}")
        if self.kind == "at_infinity" and abs(np.linalg.norm(coords) - 1.0) > 1e-12:
            raise DegenerateInput("a direction at infinity must be a unit vector")

    def image(self) -> np.ndarray:
        """Position in the closed ball of radius pi/2."""
        if self.kind == "at_infinity":
            return HALF_PI * self.coords
        return compactify(self.coords)

    def to_dict(self):
        return {"kind": self.kind, "coords": self.coords.tolist()}


def compactify(x) -> np.ndarray:
    """x -> x * arctan(|x|) / |x|, with 0 -> 0."""
    x = np.asarray(x, dtype=float)
    n = float(np.linalg.norm(x))
    if n == 0:
        return np.zeros_like(x)
    return x * (math.atan(n) / n)


def decompactify(y) -> np.ndarray:
    """Inverse of :func:`compactify` on the open ball of radius pi/2."""
    y = np.asarray(y, dtype=float)
    n = float(np.linalg.norm(y))
    if n == 0:
        return np.zeros_like(y)
    if n >= HALF_PI:
        raise DegenerateInput("points at radius pi/2 are at infinity")
    return y * (math.tan(n) / n)


# open-disc counterexample -------------------------------------------------

def counterexample_discs(n: int, closed: bool = False) -> Family:
    """Discs i = 1..n centred at (i, 1/i) with radius 1/i; open unless ``closed``."""
    if n < 1:
        raise DegenerateInput("n must be >= 1")
    i = np.arange(1, n + 1, dtype=float)
    return Family.from_balls(np.column_stack([i, 1.0 / i]), 1.0 / i, open_flag=not closed)


@dataclass(frozen=True, eq=False)
class Wedge:
    """Region between two lines through ``apex``, on the side of ``side``.

    ``half_angle`` is the angle between each bounding line and ``side``.
    ``degenerate`` marks touching discs, where both lines coincide.
    """

    apex: np.ndarray
    bounding_lines: tuple
    side: np.ndarray
    half_angle: float
    degenerate: bool = False

    def __post_init__(self):
        for line in self.bounding_lines:
            p = line.project(self.apex)
            if np.linalg.norm(p - self.apex) > TAU_GEO * max(1.0, np.linalg.norm(self.apex)):
                raise DegenerateInput("bounding lines do not meet at the apex")

    def contains_point(self, p) -> bool:
        v = np.asarray(p, dtype=float) - self.apex
        if not np.any(v):
            return True
        return angle_between(self.side, v) <= self.half_angle + TAU_ANGLE

    def disc_margin(self, center, radius) -> float:
        """half_angle minus the largest angle a closed disc makes with ``side``."""
        v = np.asarray(center, dtype=float) - self.apex
        dist = float(np.linalg.norm(v))
        if radius >= dist:
            return -math.inf
        return self.half_angle - (angle_between(self.side, v) + math.asin(radius / dist))

    def contains_disc(self, center, radius) -> bool:
        return self.disc_margin(center, radius) >= -TAU_ANGLE


def inner_tangent_wedge(b1: ClosedBall, b2: ClosedBall) -> Wedge:
    """Wedge cut by the two common inner tangents, opening away from ``b1``.

    The apex is the internal homothety centre, dividing the centre segment
    in ratio r1 : r2.
    """
    if b1.dim != 2 or b2.dim != 2:
        raise DegenerateInput("inner tangents are computed in the plane")
    c1, c2 = b1.center, b2.center
    r1, r2 = b1.radius, b2.radius
    gap = float(np.linalg.norm(c2 - c1))
    if gap < r1 + r2 - TAU_GEO or r1 + r2 <= 0:
        raise NoInnerTangents("discs overlap, so there are no inner tangents")
    apex = (r2 * c1 + r1 * c2) / (r1 + r2)
    axis = (c2 - c1) / gap
    degenerate = gap <= r1 + r2 + TAU_GEO
    half = HALF_PI if degenerate else math.asin(min(1.0, r1 / float(np.linalg.norm(apex - c1))))
    lines = []
    for sgn in (1.0, -1.0):
        a = sgn * half
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        lines.append(canonicalize_flat(apex, [rot @ axis]))
    return Wedge(apex, tuple(lines), axis, half, degenerate)


@dataclass
class ThirtyThreeReport:
    n: int
    n_triples: int
    wedge_failures: list
    solver_failures: list
    min_wedge_margin: float
    min_depth: float
    seconds: float
    overlapping: list = None

    @property
    def passed(self) -> bool:
        return not self.wedge_failures and not self.solver_failures

    def to_dict(self):
        return {"n": self.n, "n_triples": self.n_triples, "passed": self.passed,
                "wedge_failures": self.wedge_failures, "solver_failures": self.solver_failures,
                "min_wedge_margin": self.min_wedge_margin, "min_depth": self.min_depth,
                "seconds": self.seconds, "overlapping": self.overlapping or []}


def verify_33_property(prefix_n: int, opts: Optional[SolveOptions] = None) -> ThirtyThreeReport:
    """Check every triple i < j < l of the open-disc prefix.

    Geometric test: the closed disc l sits inside the inner-tangent wedge of
    discs i and j.  Solver test: one line strictly crosses all three open
    discs.
    """
    if prefix_n < 3:
        raise DegenerateInput("prefix_n must be >= 3")
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    fam = counterexample_discs(prefix_n)
    C, r = fam.centers, fam.radii
    wedge_fail, solver_fail = [], []
    min_margin = math.inf
    min_depth = math.inf
    wedges = {}
    overlapping = []
    for i, j, l in itertools.combinations(range(prefix_n), 3):
        if (i, j) not in wedges:
            try:
                wedges[i, j] = inner_tangent_wedge(ClosedBall(C[i], r[i]), ClosedBall(C[j], r[j]))
            except NoInnerTangents:
                wedges[i, j] = None
        if wedges[i, j] is None:
            # overlapping pair: the line from a common interior point to disc l's centre
            if not _overlap_line_pierces(fam, i, j, l):
                wedge_fail.append([i + 1, j + 1, l + 1])
            overlapping.append([i + 1, j + 1, l + 1])
        else:
            margin = wedges[i, j].disc_margin(C[l], r[l])
            min_margin = min(min_margin, margin)
            if margin < -TAU_ANGLE:
                wedge_fail.append([i + 1, j + 1, l + 1])
        res = exists_transversal(fam.subfamily([i, j, l]), 1, opts)
        min_depth = min(min_depth, -res.fit.signed)
        if not res.found:
            solver_fail.append([i + 1, j + 1, l + 1])
    return ThirtyThreeReport(prefix_n, math.comb(prefix_n, 3), wedge_fail, solver_fail,
                             float(min_margin), float(min_depth), time.perf_counter() - t0,
                             overlapping)


def _overlap_line_pierces(fam: Family, i: int, j: int, l: int) -> bool:
    C, r = fam.centers, fam.radii
    gap = float(np.linalg.norm(C[j] - C[i]))
    u = (C[j] - C[i]) / gap
    # midpoint of the overlap of the two discs along the centre segment
    p = C[i] + 0.5 * (max(0.0, gap - r[j]) + min(gap, r[i])) * u
    line = canonicalize_flat(p, [C[l] - p])
    gaps = fam.subfamily([i, j, l]).member_gaps(line)
    return bool(np.all(gaps < -TAU_GEO))


# segment chains -----------------------------------------------------------

def _line_intersection(p1, p2, q1, q2):
    d1, d2 = p2 - p1, q2 - q1
    M = np.column_stack([d1, -d2])
    s, t = np.linalg.solve(M, q1 - p1)
    return p1 + s * d1, s, t


def chord_endpoints(n: int, seed: int = 0) -> np.ndarray:
    """Array (n, 2, 2) of chord endpoints on the unit circle.

    Chord i runs from angle pi*i/(2n) to pi + pi*i/(2n) + jitter_i, with
    distinct jitters in [0, pi/(4n)); endpoints interleave, so every pair
    crosses.
    """
    if n < 2:
        raise DegenerateInput("n must be >= 2")
    rng = np.random.default_rng(seed)
    i = np.arange(1, n + 1)
    theta = math.pi * i / (2 * n)
    jitter = np.sort(rng.uniform(0.0, math.pi / (4 * n), size=n))
    rng.shuffle(jitter)
    phi = math.pi + theta + jitter
    A = np.column_stack([np.cos(theta), np.sin(theta)])
    B = np.column_stack([np.cos(phi), np.sin(phi)])
    return np.stack([A, B], axis=1)


def _chain_radius_cap(E) -> float:
    """Largest chain radius that keeps every triple of chains point-free.

    Points within r of two crossing lines stay within r * max(1/sin, 1/cos)
    of half the crossing angle from the crossing point, so a third line
    farther than that plus r cannot share a point with both chains.
    """
    n = len(E)
    cap = math.inf
    for a, b in itertools.combinations(range(n), 2):
        p, _, _ = _line_intersection(E[a, 0], E[a, 1], E[b, 0], E[b, 1])
        ang = angle_between(E[a, 1] - E[a, 0], E[b, 1] - E[b, 0])
        spread = max(1.0 / math.sin(ang / 2), 1.0 / abs(math.cos(ang / 2)))
        for c in range(n):
            if c in (a, b):
                continue
            u = E[c, 1] - E[c, 0]
            nrm = np.array([-u[1], u[0]]) / np.linalg.norm(u)
            dist = abs(float((p - E[c, 0]) @ nrm))
            cap = min(cap, dist / (1.0 + spread))
    return cap


def _chain(P, Q, radius):
    length = float(np.linalg.norm(Q - P))
    steps = max(1, int(math.ceil(length / radius)))
    t = np.linspace(0.0, 1.0, steps + 1)
    return P + t[:, None] * (Q - P)


def segments_family(n: int, seed: int = 0, resolution: float = 1e-4) -> Family:
    """Pairwise crossing chords of the unit disc, no three concurrent, as ball chains.

    Chain radius is ``resolution`` times the chord length, lowered when
    needed so that no point lies on three chains; spacing equals the radius.
    The middle ball is the core.
    """
    E = chord_endpoints(n, seed)
    lengths = np.linalg.norm(E[:, 1] - E[:, 0], axis=1)
    cap = 0.5 * _chain_radius_cap(E)
    centres, radii, sizes = [], [], []
    for (P, Q), L in zip(E, lengths):
        rad = min(resolution * L, cap)
        pts = _chain(P, Q, rad)
        centres.append(pts)
        radii.append(np.full(len(pts), rad))
        sizes.append(len(pts))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return Family(np.vstack(centres), np.concatenate(radii), offsets, np.array(sizes) // 2)


@dataclass
class SegmentsReport:
    pairs_cross: bool
    chains_meet: bool
    triple_free: bool
    min_triple_separation: float

    @property
    def passed(self):
        return self.pairs_cross and self.chains_meet and self.triple_free


def verify_segments(family: Family, n: int, seed: int = 0) -> SegmentsReport:
    """Exact checks on the ideal chords plus chain-level consequences."""
    E = chord_endpoints(n, seed)
    cross = True
    for a, b in itertools.combinations(range(n), 2):
        _, s, t = _line_intersection(E[a, 0], E[a, 1], E[b, 0], E[b, 1])
        cross &= bool(0.0 < s < 1.0 and 0.0 < t < 1.0)
    # consecutive balls overlap (spacing <= 2 r), so each chain covers its chord and
    # crossing chords give meeting chains
    meet = True
    for i in range(len(family)):
        lo, hi = family.offsets[i], family.offsets[i + 1]
        steps = np.linalg.norm(np.diff(family.centers[lo:hi], axis=0), axis=1)
        meet &= bool(np.all(steps <= 2.0 * family.radii[lo:hi].min()))
    r_max = float(family.radii.max())
    sep = _chain_radius_cap(E)
    return SegmentsReport(cross, meet, bool(r_max < sep), float(sep))


def sharpness_family2(n: int, seed: int = 0, resolution: float = 1e-4) -> Family:
    """Members B((2^i, 0), 2^i / 4) united with the i-th chord chain, i = 1..n.

    The far ball is the core; it always dominates the chain balls.
    """
    if n < 1:
        raise DegenerateInput("n must be >= 1")
    chains = segments_family(max(n, 2), seed, resolution)
    centres, radii, sizes = [], [], []
    for i in range(1, n + 1):
        lo, hi = chains.offsets[i - 1], chains.offsets[i]
        centres += [[[2.0 ** i, 0.0]], chains.centers[lo:hi]]
        radii += [[2.0 ** i / 4.0], chains.radii[lo:hi]]
        sizes.append(hi - lo + 1)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    return Family(np.vstack(centres), np.concatenate(radii), offsets, np.zeros(n, dtype=int))


def shrinking_sequence(n: int, d: int = 2, ratio: float = 0.5, radius_factor: float = 0.05,
                       turn: float = 2.399963229728653) -> Family:
    """Balls spiralling into the origin: centre ratio^i on a rotating ray.

    The rotation (golden angle by default) keeps any three centres far from
    collinear, so k = 1 independence is achievable; radii are
    ``radius_factor * ratio^(2i)``.
    """
    if d < 2:
        raise DegenerateInput("d must be >= 2")
    i = np.arange(1, n + 1, dtype=float)
    rho = ratio ** i
    C = np.zeros((n, d))
    C[:, 0] = rho * np.cos(turn * i)
    C[:, 1] = rho * np.sin(turn * i)
    return Family.from_balls(C, radius_factor * rho ** 2)


# disjoint sequence --------------------------------------------------------

def dist_point_member(x, b: NearBall) -> float:
    return min(max(0.0, float(np.linalg.norm(x - p.center)) - p.radius) for p in b.parts)


def members_disjoint(a: NearBall, b: NearBall) -> bool:
    return all(
        np.linalg.norm(p.center - q.center) > p.radius + q.radius for p in a.parts for q in b.parts
    )


def family_sampler(family: Family) -> Callable:
    """Neighbourhood query over ``family``: first unused member that qualifies."""
    used = set()
    X, R = family.x_b, family.r_in

    def query(x, delta):
        x = np.asarray(x, dtype=float)
        near = np.flatnonzero((np.linalg.norm(X - x, axis=1) < delta) & (R < delta))
        for i in near:
            if int(i) in used:
                continue
            b = family.member(int(i))
            if dist_point_member(x, b) > 0:
                used.add(int(i))
                return b
        return None

    return query


def disjoint_sequence_builder(sampler: Callable, x, K: float, target_len: int) -> list:
    """Members approaching ``x`` that are pairwise disjoint.

    Start with delta = 1; after a member at distance eps from ``x`` the next
    query uses delta = eps / (10 K).  Raises :class:`SamplerExhausted` when
    the sampler runs dry first.
    """
    if K < 1:
        raise DegenerateInput("K must be >= 1")
    x = np.asarray(x, dtype=float)
    found: list = []
    delta = 1.0
    last = math.inf
    while len(found) < target_len:
        b = sampler(x, delta)
        if b is None:
            raise SamplerExhausted(f"no member within {delta:.3g} of x after {len(found)}", found)
        eps = dist_point_member(x, b)
        if not eps > 0:
            raise AssertionError("sampler returned a member containing x")
        if not eps < last:
            raise AssertionError("members are not getting closer to x")
        if any(not members_disjoint(b, prev) for prev in found):
            raise AssertionError("disjointness failed")
        found.append(b)
        last = eps
        delta = eps / (10.0 * K)
    return found


def random_family(n: int, d: int = 2, seed: int = 0, box: float = 10.0,
                  r_range=(0.1, 1.0), parts: int = 1) -> Family:
    """Random near-balls: a core plus ``parts - 1`` satellites touching it."""
    rng = np.random.default_rng(seed)
    members = []
    for _ in range(n):
        c = rng.uniform(-box, box, size=d)
        r = rng.uniform(*r_range)
        balls = [ClosedBall(c, r)]
        for _ in range(parts - 1):
            u = rng.normal(size=d)
            u /= np.linalg.norm(u)
            s = rng.uniform(0.1, 1.0) * r
            balls.append(ClosedBall(c + (r + rng.uniform(0, r)) * u, s))
        members.append(NearBall(tuple(balls), 0))
    return Family.from_members(members)
