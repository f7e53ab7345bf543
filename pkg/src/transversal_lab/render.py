"""Deterministic SVG scenes for planar families.

The output depends only on the numbers passed in: no timestamps, no random
ids, fixed float formatting.  Members with many parts (ball chains) are drawn
as polylines through their part centres so that a million-part segment
family still renders to a file of reasonable size.
"""
from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import DimensionMismatch
from .geometry import KFlat
from .nearball import Family

CHAIN_PARTS = 200
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _f(x: float) -> str:
    s = "%.6f" % x
    return "0.000000" if s == "-0.000000" else s


def _bbox(fam: Family, margin: float):
    lo = (fam.centers - fam.radii[:, None]).min(axis=0)
    hi = (fam.centers + fam.radii[:, None]).max(axis=0)
    span = float(max(hi - lo))
    pad = margin * (span if span > 0 else 1.0)
    return lo - pad, hi + pad


def _clip_line(point, direction, lo, hi):
    """Segment of the line inside the box [lo, hi], or None (Liang-Barsky)."""
    t0, t1 = -math.inf, math.inf
    for i in range(2):
        if abs(direction[i]) < 1e-15:
            if not lo[i] <= point[i] <= hi[i]:
                return None
            continue
        a = (lo[i] - point[i]) / direction[i]
        b = (hi[i] - point[i]) / direction[i]
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    if t0 > t1:
        return None
    return point + t0 * direction, point + t1 * direction


def _clip_ray(apex, direction, lo, hi):
    seg = _clip_line(apex, direction, lo, hi)
    if seg is None:
        return None
    a, b = seg
    ta = float(np.dot(a - apex, direction))
    tb = float(np.dot(b - apex, direction))
    if max(ta, tb) < 0:
        return None
    start = apex if min(ta, tb) < 0 else (a if ta < tb else b)
    end = b if tb > ta else a
    return start, end


def render_svg(family: Family, flats: Sequence[KFlat] = (), wedges: Iterable = (),
               assignment: Optional[Sequence[int]] = None, size: int = 600,
               margin: float = 0.05) -> str:
    """Render a planar family with optional flats and wedges as SVG text.

    Parameters
    ----------
    family : Family
        Must be planar.
    flats : sequence of KFlat
        Points are drawn as dots, lines clipped to the view box.
    wedges : iterable of Wedge
        Drawn as their two bounding rays from the apex.
    assignment : sequence of int, optional
        Member-to-flat map; members are coloured by their flat.
    """
    if family.dim != 2:
        raise DimensionMismatch("rendering needs a planar family")
    lo, hi = _bbox(family, margin)
    span = float(max(hi - lo))
    scale = size / span
    w, h = (hi - lo) * scale

    def px(p):
        # flip y so the picture has the usual orientation
        return _f((p[0] - lo[0]) * scale), _f((hi[1] - p[1]) * scale)

    stroke = _f(max(size / 600.0, 0.5))
    out = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%s" height="%s" viewBox="0 0 %s %s">'
        % (_f(w), _f(h), _f(w), _f(h)),
        '<rect x="0" y="0" width="%s" height="%s" fill="white"/>' % (_f(w), _f(h)),
    ]
    for i in range(len(family)):
        a, b = family.offsets[i], family.offsets[i + 1]
        colour = "#444444" if assignment is None else _PALETTE[int(assignment[i]) % len(_PALETTE)]
        dash = ' stroke-dasharray="4 2"' if family.open_flag else ""
        if b - a > CHAIN_PARTS:
            pts = " ".join("%s,%s" % px(c) for c in family.centers[a:b])
            out.append('<polyline points="%s" fill="none" stroke="%s" stroke-width="%s"%s/>'
                       % (pts, colour, stroke, dash))
            continue
        for c, r in zip(family.centers[a:b], family.radii[a:b]):
            x, y = px(c)
            out.append('<circle cx="%s" cy="%s" r="%s" fill="none" stroke="%s" stroke-width="%s"%s/>'
                       % (x, y, _f(r * scale), colour, stroke, dash))
    for j, f in enumerate(flats):
        if f.dim_ambient != 2:
            raise DimensionMismatch("flat is not planar")
        colour = _PALETTE[j % len(_PALETTE)]
        if f.dim_flat == 0:
            x, y = px(f.c)
            out.append('<circle cx="%s" cy="%s" r="%s" fill="%s"/>' % (x, y, _f(3 * float(stroke)), colour))
            continue
        if f.dim_flat == 2:
            continue
        seg = _clip_line(f.c, f.basis[0], lo, hi)
        if seg is None:
            continue
        (x1, y1), (x2, y2) = px(seg[0]), px(seg[1])
        out.append('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="%s" stroke-width="%s"/>'
                   % (x1, y1, x2, y2, colour, stroke))
    for wdg in wedges:
        side = np.asarray(wdg.side, dtype=float)
        for sign in (1.0, -1.0):
            t = sign * wdg.half_angle
            d = np.array([side[0] * math.cos(t) - side[1] * math.sin(t),
                          side[0] * math.sin(t) + side[1] * math.cos(t)])
            seg = _clip_ray(np.asarray(wdg.apex, dtype=float), d, lo, hi)
            if seg is None:
                continue
            (x1, y1), (x2, y2) = px(seg[0]), px(seg[1])
            out.append('<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#999999" stroke-width="%s" '
                       'stroke-dasharray="2 2"/>' % (x1, y1, x2, y2, stroke))
    out.append("</svg>")
    return "\n".join(out) + "\n"
