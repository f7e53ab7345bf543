"""Near-balls as finite unions of closed (or open) balls, and families of them.

A :class:`Family` keeps every part of every member in packed arrays so that
distance evaluations against a flat are a handful of numpy calls, even for
prefixes with millions of members.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DegenerateInput, DimensionMismatch
from .geometry import TAU_GEO, ClosedBall, KFlat, dist_points_flat


@dataclass(frozen=True, eq=False)
class NearBall:
    parts: tuple
    core_index: int = 0
    open_flag: bool = False

    def __post_init__(self):
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise DegenerateInput("a near-ball needs at least one part")
        if len({p.dim for p in parts}) != 1:
            raise DimensionMismatch("parts live in different dimensions")
        if not 0 <= self.core_index < len(parts):
            raise DegenerateInput(f"core index {self.core_index} out of range")
        if self.open_flag and any(p.radius <= 0 for p in parts):
            raise DegenerateInput("an open ball of radius 0 is empty")
        if parts[self.core_index].radius <= 0:
            raise DegenerateInput("the inscribed core must have positive radius")

    @classmethod
    def ball(cls, center, radius, open_flag=False) -> "NearBall":
        return cls((ClosedBall(center, radius),), 0, open_flag)

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    @property
    def core(self) -> ClosedBall:
        return self.parts[self.core_index]

    def stats(self):
        return nearball_stats(self)


def nearball_stats(b: NearBall):
    """Return ``(x_B, r_in, r_esc)`` for a near-ball."""
    x = b.core.center
    r_esc = max(float(np.linalg.norm(p.center - x)) + p.radius for p in b.parts)
    return x, b.core.radius, max(r_esc, b.core.radius)


class Family:
    """Ordered, immutable family of near-balls sharing one ambient dimension.

    Parameters
    ----------
    centers : array of shape (n_parts, d)
    radii : array of shape (n_parts,)
    offsets : array of shape (n_members + 1,)
        Parts of member ``i`` are ``offsets[i]:offsets[i + 1]``.
    core : array of shape (n_members,)
        Core index of each member, local to its parts.
    open_flag : bool
        Whether every ball is open (strict piercing).
    """

    def __init__(self, centers, radii, offsets, core, open_flag=False):
        centers = np.array(centers, dtype=float)
        if centers.ndim != 2 or centers.shape[1] < 1:
            raise DimensionMismatch("centers must be a 2-d array with d >= 1 columns")
        radii = np.array(radii, dtype=float).reshape(-1)
        offsets = np.array(offsets, dtype=np.int64).reshape(-1)
        core = np.array(core, dtype=np.int64).reshape(-1)
        if len(offsets) < 2 or offsets[0] != 0 or offsets[-1] != len(radii):
            raise DegenerateInput("offsets do not partition the parts")
        if len(radii) != len(centers) or len(core) != len(offsets) - 1:
            raise DegenerateInput("inconsistent array lengths")
        sizes = np.diff(offsets)
        if np.any(sizes < 1):
            raise DegenerateInput("every member needs at least one part")
        if np.any(core < 0) or np.any(core >= sizes):
            raise DegenerateInput("core index out of range")
        if np.any(radii < 0) or not np.all(np.isfinite(radii)):
            raise DegenerateInput("radii must be finite and nonnegative")
        if open_flag and np.any(radii <= 0):
            raise DegenerateInput("an open ball of radius 0 is empty")
        core_global = offsets[:-1] + core
        if np.any(radii[core_global] <= 0):
            raise DegenerateInput("every core must have positive radius")
        for a in (centers, radii, offsets, core, core_global):
            a.setflags(write=False)
        self.centers = centers
        self.radii = radii
        self.offsets = offsets
        self.core = core
        self.core_global = core_global
        self.open_flag = bool(open_flag)

    # construction -------------------------------------------------------
    @classmethod
    def from_members(cls, members: Iterable[NearBall]) -> "Family":
        members = list(members)
        if not members:
            raise DegenerateInput("a family needs at least one member")
        if len({m.dim for m in members}) != 1:
            raise DimensionMismatch("members live in different dimensions")
        flags = {m.open_flag for m in members}
        if len(flags) != 1:
            raise DegenerateInput("mixing open and closed members is not supported")
        centers = [p.center for m in members for p in m.parts]
        radii = [p.radius for m in members for p in m.parts]
        offsets = np.concatenate([[0], np.cumsum([len(m.parts) for m in members])])
        return cls(centers, radii, offsets, [m.core_index for m in members], flags.pop())

    @classmethod
    def from_balls(cls, centers, radii, open_flag=False) -> "Family":
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        n = len(centers)
        return cls(centers, radii, np.arange(n + 1), np.zeros(n, dtype=int), open_flag)

    # container protocol -------------------------------------------------
    def __len__(self):
        return len(self.offsets) - 1

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def n_parts(self) -> int:
        return len(self.radii)

    @property
    def single_part(self) -> bool:
        return self.n_parts == len(self)

    def member(self, i: int) -> NearBall:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        parts = tuple(ClosedBall(self.centers[j], self.radii[j]) for j in range(lo, hi))
        return NearBall(parts, int(self.core[i]), self.open_flag)

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            n = len(self)
            if not -n <= i < n:
                raise IndexError(i)
            return self.member(int(i) % n)
        return self.subfamily(np.arange(len(self))[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self.member(i)

    def subfamily(self, indices: Sequence[int]) -> "Family":
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        if len(idx) == 0:
            raise DegenerateInput("empty subfamily")
        if self.single_part:
            return Family(self.centers[idx], self.radii[idx], np.arange(len(idx) + 1),
                          np.zeros(len(idx), dtype=int), self.open_flag)
        sizes = np.diff(self.offsets)[idx]
        parts = np.concatenate([np.arange(self.offsets[i], self.offsets[i + 1]) for i in idx])
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        return Family(self.centers[parts], self.radii[parts], offsets, self.core[idx], self.open_flag)

    def with_parts(self, centers, radii) -> "Family":
        """Same membership structure with replaced part geometry."""
        return Family(centers, radii, self.offsets, self.core, self.open_flag)

    # derived quantities -------------------------------------------------
    @property
    def owner(self) -> np.ndarray:
        return np.repeat(np.arange(len(self)), np.diff(self.offsets))

    @property
    def x_b(self) -> np.ndarray:
        return self.centers[self.core_global]

    @property
    def r_in(self) -> np.ndarray:
        return self.radii[self.core_global]

    @cached_property
    def r_esc(self) -> np.ndarray:
        reach = np.linalg.norm(self.centers - self.x_b[self.owner], axis=1) + self.radii
        return np.maximum(np.maximum.reduceat(reach, self.offsets[:-1]), self.r_in)

    @cached_property
    def member_constants(self) -> np.ndarray:
        """Least K satisfying both near-ball conditions, per member."""
        return np.maximum(self.r_esc / self.r_in, self.r_esc - self.r_in)

    @cached_property
    def K(self) -> float:
        return float(np.max(self.member_constants))

    def reduce_members(self, part_values, how=np.minimum) -> np.ndarray:
        return how.reduceat(np.asarray(part_values), self.offsets[:-1])

    def member_gaps(self, flat: KFlat) -> np.ndarray:
        """Signed gap per member: min over parts of dist(center, flat) - radius.

        Negative values are penetration depths.
        """
        return self.reduce_members(dist_points_flat(self.centers, flat) - self.radii)

    def bounding_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.centers, axis=1) + self.radii))

    def __repr__(self):
        kind = "open" if self.open_flag else "closed"
        return f"Family(n={len(self)}, d={self.dim}, parts={self.n_parts}, {kind})"


def nearball_constant(family: Family, per_member: bool = False):
    if per_member:
        return family.K, family.member_constants.copy()
    return family.K


class Unbounded(float):
    """Marker for a running constant that exceeded its cap."""

    def __new__(cls, value):
        return super().__new__(cls, value)

    def __repr__(self):
        return f"Unbounded({float(self)!r})"


def running_nearball_constant(members: Iterable[NearBall], cap: float = math.inf):
    """Running max of the near-ball constant over a stream of members.

    Yields the constant after each member, or an :class:`Unbounded` value
    (and stops) once the running max exceeds ``cap``.
    """
    best = 0.0
    for m in members:
        _, r_in, r_esc = nearball_stats(m)
        best = max(best, r_esc / r_in, r_esc - r_in)
        if best > cap:
            yield Unbounded(best)
            return
        yield best


def member_pierced(gaps, open_flag: bool, tol_open: float = TAU_GEO, tol_closed: float = TAU_GEO):
    gaps = np.asarray(gaps)
    if open_flag:
        return gaps < -tol_open
    return gaps <= tol_closed


def pierces(flat: KFlat, b: NearBall | Family, tol: float = TAU_GEO):
    """Whether ``flat`` meets the near-ball (or each member of a family).

    Closed balls count tangency as piercing; open balls need penetration
    deeper than ``tol``.
    """
    if isinstance(b, Family):
        return member_pierced(b.member_gaps(flat), b.open_flag, tol, tol)
    if b.dim != flat.dim_ambient:
        raise DimensionMismatch(f"near-ball in R^{b.dim}, flat in R^{flat.dim_ambient}")
    gaps = dist_points_flat(np.array([p.center for p in b.parts]), flat) - np.array(
        [p.radius for p in b.parts]
    )
    return bool(member_pierced(gaps.min(), b.open_flag, tol, tol))


def check_weak_condition_r(family: Family, r_grid) -> list[tuple[float, float]]:
    """Rows ``(r, sup r_esc over members with r_in <= r)``; empty sup is 0."""
    rows = []
    for r in r_grid:
        mask = family.r_in <= r
        rows.append((float(r), float(family.r_esc[mask].max()) if mask.any() else 0.0))
    return rows
