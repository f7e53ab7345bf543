from pathlib import Path

import numpy as np
import pytest

from transversal_lab.constructions import counterexample_discs, inner_tangent_wedge, segments_family
from transversal_lab.exceptions import DimensionMismatch
from transversal_lab.geometry import canonicalize_flat
from transversal_lab.nearball import Family
from transversal_lab.render import _clip_line, render_svg

GOLDEN = Path(__file__).parent / "golden" / "discs6_scene.svg"


def scene():
    fam = counterexample_discs(6, closed=True)
    flats = [canonicalize_flat([0, 0], [[1, 0]]), canonicalize_flat([3, 0.5])]
    wedges = [inner_tangent_wedge(fam.member(0).core, fam.member(2).core)]
    return render_svg(fam, flats, wedges, assignment=[0, 0, 0, 1, 1, 1])


def test_matches_golden_file():
    assert scene() == GOLDEN.read_text()


def test_pure_function():
    assert scene() == scene()


def test_chains_become_polylines():
    svg = render_svg(segments_family(3))
    assert svg.count("<polyline") == 3 and "<circle" not in svg


def test_open_discs_dashed():
    assert 'stroke-dasharray="4 2"' in render_svg(counterexample_discs(2))


def test_needs_planar_input():
    with pytest.raises(DimensionMismatch):
        render_svg(Family.from_balls([[0, 0, 0]], [1]))


def test_clip_line_inside_box():
    a, b = _clip_line(np.array([0.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2), np.array([-1, -2]),
                      np.array([1, 2]))
    np.testing.assert_allclose([a, b], [[-1, -1], [1, 1]])
    assert _clip_line(np.array([0.0, 5.0]), np.array([1.0, 0.0]), np.array([-1, -1]),
                      np.array([1, 1])) is None
