import json

import numpy as np
import pytest

from patchdipole.field import (auto_levels, far_field_decay, far_field_error, sample_field,
                               stream_function, trace_contours, velocity, write_contours_json,
                               write_field_csv, write_svg)
from patchdipole.potential import speed_c


@pytest.fixture(scope="module")
def fgrid(terminal):
    return sample_field(terminal, (-1.5, 1.5, -1.2, 1.2), (64, 64))


def test_axis_and_antisymmetry(fgrid):
    g = fgrid
    assert np.array_equal(g.x2, -g.x2[::-1])
    assert np.all(g.psi[g.x2 == 0.0] == 0.0)
    assert np.array_equal(g.psi, -g.psi[::-1])
    assert np.array_equal(g.velocity[..., 0], g.velocity[::-1, :, 0])
    assert np.array_equal(g.velocity[..., 1], -g.velocity[::-1, :, 1])


def test_odd_grid_has_axis_row(terminal):
    g = sample_field(terminal, (-1.5, 1.5, -1.2, 1.2), (16, 17))
    assert np.any(g.x2 == 0.0)
    assert np.all(g.psi[g.x2 == 0.0] == 0.0)


def test_stagnation_at_tip(terminal):
    assert np.max(np.abs(velocity(np.array([1.0, 0.0]), terminal))) <= 1e-8


def test_velocity_on_symmetry_axis(terminal):
    pts = np.column_stack([np.zeros(5), np.linspace(0.1, 2.0, 5)])
    assert np.all(velocity(pts, terminal)[:, 1] == 0.0)


def test_stream_function_inside(terminal):
    assert stream_function(np.array([0.0, 0.5 * terminal(0.0)]), terminal) > 0
    assert stream_function(np.array([0.0, -0.5 * terminal(0.0)]), terminal) < 0


def test_far_field(terminal):
    c = speed_c(terminal).c
    u = velocity(np.array([50.0, 25.0]), terminal, c)
    assert np.hypot(u[0] - c, u[1]) <= 1e-3 * c
    assert far_field_error(terminal, 100.0, c) <= 1e-3 * c


def test_far_field_decay(terminal):
    rep = far_field_decay(terminal)
    assert rep.passed, rep.details
    for r in rep.attachments["ratios"]:
        assert 3.0 <= r <= 5.0
    with pytest.raises(ValueError):
        far_field_decay(terminal, radii=(5.0,))


@pytest.mark.parametrize("x", [(0.3, 0.2), (1.2, 0.4), (-0.5, 1.0), (0.0, -0.3)])
def test_velocity_matches_stream_function(terminal, x):
    h = 1e-4
    x = np.array(x)
    e1, e2 = np.eye(2)
    d1 = (stream_function(x + h * e1, terminal, abs_tol=1e-13)
          - stream_function(x - h * e1, terminal, abs_tol=1e-13)) / (2 * h)
    d2 = (stream_function(x + h * e2, terminal, abs_tol=1e-13)
          - stream_function(x - h * e2, terminal, abs_tol=1e-13)) / (2 * h)
    u = velocity(x, terminal, abs_tol=1e-13)
    assert u[0] == pytest.approx(-d2, abs=1e-7)
    assert u[1] == pytest.approx(d1, abs=1e-7)


def test_grid_matches_pointwise(terminal, fgrid):
    i, j = 40, 13
    x = np.array([fgrid.x1[j], fgrid.x2[i]])
    assert fgrid.psi[i, j] == pytest.approx(stream_function(x, terminal), abs=1e-13)
    assert np.allclose(fgrid.velocity[i, j], velocity(x, terminal), atol=1e-13)


def test_refinement_consistency(terminal):
    a = sample_field(terminal, (-1.5, 1.5, -1.2, 1.2), (65, 65))
    b = sample_field(terminal, (-1.5, 1.5, -1.2, 1.2), (129, 129))
    assert np.max(np.abs(a.psi - b.psi[::2, ::2])) <= 1e-12
    la = trace_contours(a, [0.5 * a.psi.max()]).polylines[0]
    lb = trace_contours(b, [0.5 * a.psi.max()]).polylines[0]
    ya, yb = max(p[:, 1].max() for p in la), max(p[:, 1].max() for p in lb)
    assert abs(ya - yb) <= 0.05


def test_levels(fgrid):
    lv = auto_levels(fgrid.psi)
    assert 0.0 in lv and len(lv) == 13
    assert all(v == 0.0 or abs(v) >= 1e-6 for v in lv)
    cs = trace_contours(fgrid, [fgrid.psi.max() + 1.0])
    assert cs.polylines == [[]]
    with pytest.raises(ValueError):
        trace_contours(fgrid, "some")


def test_zero_contour_follows_boundary(terminal, fgrid):
    cs = trace_contours(fgrid, [0.0])
    cell = max(np.diff(fgrid.x1)[0], np.diff(fgrid.x2)[0])
    pts = np.concatenate(cs.polylines[0])
    sel = (np.abs(pts[:, 0]) < 0.95) & (np.abs(pts[:, 1]) > cell)
    assert sel.sum() > 20
    gap = np.abs(np.abs(pts[sel, 1]) - terminal(pts[sel, 0]))
    assert np.max(gap) <= cell


def test_inner_contours_are_closed(terminal):
    g = sample_field(terminal, (-1.5, 1.5, 0.0, 1.2), (48, 32))
    cs = trace_contours(g, [0.25 * g.psi.max(), 0.75 * g.psi.max()])
    for lines in cs.polylines:
        assert len(lines) == 1
        assert np.allclose(lines[0][0], lines[0][-1])


def test_writers(fgrid, terminal, tmp_path):
    p = write_field_csv(fgrid, tmp_path / "field.csv")
    rows = p.read_text().splitlines()
    assert rows[0] == "x1,x2,psi,u1,u2" and len(rows) == 64 * 64 + 1
    cs = trace_contours(fgrid)
    d = json.loads(write_contours_json(cs, tmp_path / "c.json").read_text())
    assert len(d) == len(cs.levels)
    svg = write_svg(cs, fgrid.bbox, tmp_path / "f.svg", profile=terminal).read_text()
    assert svg.startswith("<svg") and svg.count("<polyline") >= 3


def test_bad_bbox(terminal):
    with pytest.raises(ValueError):
        sample_field(terminal, (1, -1, -1, 1))
    with pytest.raises(ValueError):
        sample_field(terminal, resolution=(4, 64))
