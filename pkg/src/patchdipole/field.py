"""Stream function and velocity of the dipole, field sampling and streamlines.

The lower half-plane is obtained by odd reflection of the upper one, so
``ψ(x1, -x2) = -ψ(x1, x2)`` holds exactly on sampled grids.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from contourpy import LineType, contour_generator

from .diagnostics import CheckReport
from .grid import Profile
from .potential import DEFAULT_TOL, SpeedValue, potential_terms, speed_c


def _c_value(f: Profile, c) -> float:
    if c is None:
        return speed_c(f).c
    return float(c.c if isinstance(c, SpeedValue) else c)


def _terms(pts: np.ndarray, f: Profile, abs_tol: float) -> np.ndarray:
    """φ, ∂₁φ, ∂₂φ at reflected points ``(x1, |x2|)``."""
    up = np.column_stack([pts[:, 0], np.abs(pts[:, 1])])
    return potential_terms(up, f, ("phi", "phi1", "phi2"), abs_tol)


def stream_function(x, f: Profile, c=None, abs_tol: float = DEFAULT_TOL):
    """``ψ = φ(x1, |x2|) - c |x2|`` with the sign of ``x2``."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    cv = _c_value(f, c)
    up = np.column_stack([pts[:, 0], np.abs(pts[:, 1])])
    v = potential_terms(up, f, ("phi",), abs_tol)[:, 0] - cv * up[:, 1]
    v = np.sign(pts[:, 1]) * v
    return float(v[0]) if np.ndim(x) == 1 else v


def _velocity_from_terms(pts, t, cv):
    sgn = np.where(pts[:, 1] < 0.0, -1.0, 1.0)
    u1 = -(t[:, 2] - cv)
    u2 = sgn * t[:, 1]
    return np.column_stack([u1, u2])


def velocity(x, f: Profile, c=None, abs_tol: float = DEFAULT_TOL):
    """Co-moving velocity ``(-ψ_x2, ψ_x1)``."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    cv = _c_value(f, c)
    u = _velocity_from_terms(pts, _terms(pts, f, abs_tol), cv)
    return u[0] if np.ndim(x) == 1 else u


@dataclass
class FieldGrid:
    bbox: tuple
    resolution: tuple
    x1: np.ndarray
    x2: np.ndarray
    psi: np.ndarray          # (n2, n1)
    velocity: np.ndarray     # (n2, n1, 2)
    speed_c: SpeedValue

    def rows(self):
        """Flattened ``(x1, x2, psi, u1, u2)`` rows, x1 varying fastest."""
        X1, X2 = np.meshgrid(self.x1, self.x2)
        return np.column_stack([X1.ravel(), X2.ravel(), self.psi.ravel(),
                                self.velocity[..., 0].ravel(), self.velocity[..., 1].ravel()])


def sample_field(f: Profile, bbox=(-1.5, 1.5, -1.2, 1.2), resolution=(64, 64),
                 c=None, abs_tol: float = DEFAULT_TOL) -> FieldGrid:
    """ψ and velocity on a uniform ``n1 x n2`` grid over ``bbox``.

    Each distinct ``|x2|`` row is computed once; mirrored rows are copied
    with the reflection signs. Rows with ``x2 = 0`` get ``ψ = 0`` exactly.
    """
    a1, b1, a2, b2 = map(float, bbox)
    n1, n2 = map(int, resolution)
    if n1 < 8 or n2 < 8:
        raise ValueError("resolution must be at least 8 x 8")
    if not (a1 < b1 and a2 < b2):
        raise ValueError("bbox must be (x1_min, x1_max, x2_min, x2_max) with min < max")
    cv = _c_value(f, c)
    x1 = np.linspace(a1, b1, n1)
    x2 = np.linspace(a2, b2, n2)
    if a2 == -b2:
        x2 = 0.5 * (x2 - x2[::-1])
    # snap rows within rounding of the axis onto it
    x2[np.abs(x2) < 1e-14 * max(abs(a2), abs(b2))] = 0.0
    heights, inv = np.unique(np.abs(x2), return_inverse=True)
    X1, H = np.meshgrid(x1, heights)
    pts = np.column_stack([X1.ravel(), H.ravel()])
    t = potential_terms(pts, f, ("phi", "phi1", "phi2"), abs_tol).reshape(heights.size, n1, 3)
    psi_up = t[..., 0] - cv * heights[:, None]
    psi_up[heights == 0.0] = 0.0
    sgn = np.sign(x2)[:, None]
    psi = sgn * psi_up[inv]
    psi[x2 == 0.0] = 0.0
    vel = np.empty((n2, n1, 2))
    vel[..., 0] = -(t[inv, :, 2] - cv)
    vel[..., 1] = np.where(x2[:, None] < 0.0, -1.0, 1.0) * t[inv, :, 1]
    return FieldGrid((a1, b1, a2, b2), (n1, n2), x1, x2, psi, vel, SpeedValue(cv))


@dataclass
class ContourSet:
    levels: list
    polylines: list          # per level: list of (m, 2) arrays

    def to_json_dict(self) -> dict:
        return {f"{lv:.17g}": [np.asarray(p).tolist() for p in lines]
                for lv, lines in zip(self.levels, self.polylines)}


def auto_levels(psi: np.ndarray, count: int = 12, band: float = 1e-6) -> list:
    """``count`` levels spread over (min ψ, max ψ) avoiding ``|ψ| < band``, plus 0."""
    lo, hi = float(np.min(psi)), float(np.max(psi))
    if hi <= lo:
        return [0.0]
    inner = np.linspace(lo, hi, count + 2)[1:-1]
    inner = [float(v) for v in inner if abs(v) >= band]
    return sorted(set(inner) | {0.0})


def trace_contours(grid: FieldGrid, levels="auto") -> ContourSet:
    """Marching-squares polylines of ψ; closed loops repeat their first point."""
    if isinstance(levels, str):
        if levels != "auto":
            raise ValueError("levels must be a sequence of numbers or 'auto'")
        levels = auto_levels(grid.psi)
    gen = contour_generator(grid.x1, grid.x2, grid.psi, line_type=LineType.Separate)
    out = []
    for lv in levels:
        lines = [np.asarray(p, dtype=float) for p in gen.lines(float(lv))]
        out.append([p for p in lines if len(p) >= 2])
    return ContourSet([float(v) for v in levels], out)


def far_field_error(f: Profile, R: float, c=None, abs_tol: float = DEFAULT_TOL) -> float:
    """``|-ψ_x2(0.8 R, 0.6 R) - c|``, i.e. ``|∂₂φ|`` at that point."""
    cv = _c_value(f, c)
    u = velocity(np.array([0.8 * R, 0.6 * R]), f, cv, abs_tol)
    return abs(float(u[0]) - cv)


def far_field_decay(f: Profile, radii: Sequence[float] = (20.0, 40.0),
                    band=(3.0, 5.0), abs_tol: float = DEFAULT_TOL) -> CheckReport:
    """Dipole decay of the far-field velocity error.

    For each radius R the error is measured at R and 2R; the check passes
    when every ``e(R)/e(2R)`` lies in ``band`` and ``e`` decreases along the
    sorted radii.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0 or np.any(np.diff(radii) <= 0) or radii[0] < 10.0:
        raise ValueError("radii must increase and start at 10 or more")
    cv = speed_c(f, abs_tol).c
    e = {}
    for R in sorted(set(radii) | set(2.0 * radii)):
        e[R] = far_field_error(f, R, cv, abs_tol)
    ratios = np.array([e[R] / e[2.0 * R] for R in radii])
    errs = np.array([e[R] for R in sorted(e)])
    margins = list(np.minimum(ratios - band[0], band[1] - ratios))
    margins.append(float(np.min(-np.diff(errs))) if errs.size > 1 else 0.0)
    worst = float(np.min(margins))
    details = "; ".join(f"e({R:g})={e[R]:.4e}" for R in sorted(e))
    details += "; ratios e(R)/e(2R): " + ", ".join(f"{r:.4f}" for r in ratios)
    return CheckReport("far_field_decay", worst >= 0.0, worst, len(e), details,
                       attachments={"errors": e, "ratios": ratios, "c": cv})


# -- output ---------------------------------------------------------------

def write_field_csv(grid: FieldGrid, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1", "x2", "psi", "u1", "u2"])
        for row in grid.rows():
            w.writerow([f"{v:.17g}" for v in row])
    return path


def write_contours_json(cs: ContourSet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(cs.to_json_dict(), indent=1) + "\n")
    return path


def write_svg(cs: ContourSet, bbox, path, profile: Profile | None = None,
              width: int = 600) -> Path:
    """Line plot of the contours (and optionally the profile curve) as SVG."""
    a1, b1, a2, b2 = map(float, bbox)
    height = int(round(width * (b2 - a2) / (b1 - a1)))
    sx = width / (b1 - a1)
    sy = height / (b2 - a2)

    def pts(arr):
        return " ".join(f"{(x - a1) * sx:.2f},{(b2 - y) * sy:.2f}" for x, y in arr)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    for lv, polys in zip(cs.levels, cs.polylines):
        colour = "black" if lv == 0.0 else ("#c0392b" if lv > 0 else "#2c3e91")
        dash = "" if lv == 0.0 else ' stroke-dasharray="4 3"'
        for p in polys:
            lines.append(f'<polyline points="{pts(p)}" fill="none" stroke="{colour}" '
                         f'stroke-width="1"{dash}/>')
    if profile is not None:
        xs = profile.grid.nodes
        ys = profile.values
        for s in (1.0, -1.0):
            curve = np.column_stack([xs, s * ys])
            lines.append(f'<polyline points="{pts(curve)}" fill="none" stroke="black" '
                         f'stroke-width="2"/>')
    lines.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path
