"""Numerical property checks on profiles and computed solutions.

Every check returns a :class:`CheckReport`. ``worst_margin`` is a signed
slack: it is nonnegative exactly when the check passes. Checks marked
non-gating (the concavity observation) never make a suite fail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .barriers import BOUND_M
from .grid import Profile, eval_profile, profile_derivative, resample
from .potential import (DEFAULT_TOL, F_partials, axis_F, phi, phi_inverse_param, speed_c,
                        speed_c_inverse)
from .quadrature import _boundary_distance, integrate_2d_region
from .solver import SolveConfig, R_at, solve_fixed_point

TWO_PI = 2.0 * np.pi


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_margin: float
    samples: int
    details: str = ""
    gating: bool = True
    attachments: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed),
                "worst_margin": float(self.worst_margin), "samples": int(self.samples),
                "details": self.details, "gating": self.gating}


def _report(name, margins, samples, details, gating=True, **attachments):
    worst = float(np.min(margins))
    return CheckReport(name, bool(worst >= 0.0), worst, samples, details, gating,
                       dict(attachments))


def reports_to_json(reports: Sequence[CheckReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2) + "\n"


def any_gating_failure(reports: Sequence[CheckReport]) -> bool:
    return any(r.gating and not r.passed for r in reports)


# -- property checks ------------------------------------------------------

def verify_sign_structure(f: Profile, abs_tol: float = DEFAULT_TOL,
                          axis_tol: float = 1e-8) -> CheckReport:
    """Signs of F: zero at (±1, 0), positive on the axis inside, negative
    outside, and decreasing in both variables in the open quadrant."""
    c = speed_c(f, abs_tol).c
    ends = axis_F(np.array([-1.0, 1.0]), f, c, abs_tol)
    inside_x = np.linspace(-1.0, 1.0, 52)[1:-1]
    inside = axis_F(inside_x, f, c, abs_tol)
    outside_x = np.array([-2.0, -1.5, -1.1, 1.1, 1.5, 2.0])
    outside = axis_F(outside_x, f, c, abs_tol)
    q = np.linspace(0.1, 2.0, 10)
    X1, X2 = np.meshgrid(q, q, indexing="ij")
    dF = F_partials(np.column_stack([X1.ravel(), X2.ravel()]), f, abs_tol)
    parts = {
        "axis_zero": axis_tol - np.max(np.abs(ends)),
        "inside_positive": np.min(inside),
        "outside_negative": -np.max(outside),
        "Fx1_negative": -np.max(dF[:, 0]),
        "Fx2_negative": -np.max(dF[:, 1]),
    }
    details = "; ".join(f"{k}={v:.3e}" for k, v in parts.items())
    n = ends.size + inside.size + outside.size + dF.shape[0]
    return _report("sign_structure", list(parts.values()), n, details, parts=parts)


def verify_R_bound(f_samples: Sequence[Profile], M: float = BOUND_M,
                   abs_tol: float = DEFAULT_TOL) -> CheckReport:
    """``R(f)(0) < M`` for every sample with ``f(0) <= M``."""
    peaks = []
    for f in f_samples:
        if f.peak > M:
            raise ValueError(f"sample peak {f.peak:.6g} exceeds M = {M:.6g}")
        peaks.append(float(R_at(f, [0.0], abs_tol)[0]))
    peaks = np.array(peaks)
    margin = M - peaks
    # strict inequality: a zero margin is a failure
    worst = float(np.min(margin))
    return CheckReport("R_bound", bool(worst > 0.0), worst, len(peaks),
                       f"max R(f)(0) = {peaks.max():.6g}, M = {M:.6g}",
                       attachments={"R0": peaks})


def verify_asymptotics(f: Profile, max_spread: float = 5.0) -> CheckReport:
    """Bounded ratios ``-f'(x)/x`` on [0.05, 0.5] and
    ``-f'(x)/log(1 + 1/(1-x))`` on [0.5, 0.99]."""
    x_in = np.linspace(0.05, 0.5, 40)
    x_out = np.linspace(0.5, 0.99, 40)
    r_in = -profile_derivative(f, x_in) / x_in
    r_out = -profile_derivative(f, x_out) / np.log1p(1.0 / (1.0 - x_out))
    margins, lines = [], []
    for label, r in (("inner", r_in), ("outer", r_out)):
        if np.min(r) <= 0.0:
            margins.append(float(np.min(r)))
            lines.append(f"{label}: nonpositive ratio {np.min(r):.3e}")
            continue
        spread = float(np.max(r) / np.min(r))
        margins.append(max_spread - spread)
        lines.append(f"{label}: min={np.min(r):.4g} max={np.max(r):.4g} spread={spread:.4g}")
    slope0 = float(profile_derivative(f, 0.0))
    xs = np.linspace(0.5, 0.999, 50)
    steepening = bool(np.all(np.diff(-profile_derivative(f, xs)) > 0.0))
    lines.append(f"f'(0)={slope0:.1e}; -f' increasing toward 1: {steepening}")
    return _report("asymptotics", margins, x_in.size + x_out.size, "; ".join(lines),
                   inner=r_in, outer=r_out)


def _max_distance(a: Profile, b: Profile) -> float:
    if b.grid.size != a.grid.size or not np.array_equal(a.grid.nodes, b.grid.nodes):
        b = resample(b, a.grid)
    return float(np.max(np.abs(a.half_values - b.half_values)))


def verify_uniqueness(seeds: Sequence[Profile], cfg: SolveConfig = SolveConfig(),
                      tol: float = 1e-6, reports=None) -> CheckReport:
    """Solve from every seed and compare the terminal profiles pairwise.

    Profiles on different grids are compared on the grid of the first one.
    Precomputed solve reports may be passed in ``reports``.
    """
    if reports is None:
        reports = [solve_fixed_point(s, cfg) for s in seeds]
    failed = [i for i, r in enumerate(reports) if not r.converged]
    profiles = [r.final_profile for r in reports]
    dists = [_max_distance(profiles[i], profiles[j])
             for i, j in combinations(range(len(profiles)), 2)]
    worst = max(dists) if dists else 0.0
    details = f"max pairwise distance {worst:.3e}"
    if failed:
        details += f"; seeds {failed} did not converge"
        return CheckReport("uniqueness", False, -np.inf, len(reports), details,
                           attachments={"reports": reports})
    return CheckReport("uniqueness", worst <= tol, tol - worst, len(reports), details,
                       attachments={"reports": reports, "distances": dists})


def verify_concavity(f: Profile, slack: float = 1e-6) -> CheckReport:
    """Chord slopes over consecutive nodes are nonincreasing (up to ``slack``).

    An observation about computed solutions, never a gate.
    """
    x = f.grid.nodes
    v = f.values
    slopes = np.diff(v) / np.diff(x)
    jumps = np.diff(slopes)
    worst = float(np.max(jumps))
    k = int(np.argmax(jumps))
    return CheckReport("concavity", worst <= slack, slack - worst, jumps.size,
                       f"largest slope increase {worst:.3e} at x={x[k + 1]:.6g}",
                       gating=False)


def verify_boundary_condition(f: Profile, abs_tol: float = DEFAULT_TOL,
                              rel: float = 1e-6) -> CheckReport:
    """``max_j |φ(x_j, f(x_j)) - c f(x_j)| <= rel * max(c, 1)``."""
    c = speed_c(f, abs_tol).c
    xs = f.grid.half_nodes
    vals = f.half_values
    p = phi(np.column_stack([xs, vals]), f, abs_tol)
    err = np.abs(p - c * vals)
    bound = rel * max(c, 1.0)
    k = int(np.argmax(err))
    return CheckReport("boundary_condition", bool(err[k] <= bound), bound - float(err[k]),
                       xs.size, f"max |phi - c f| = {err[k]:.3e} at x={xs[k]:.6g} (c={c:.10g})",
                       attachments={"errors": err, "c": c})


# -- cross-checks ---------------------------------------------------------

def green_kernel(x):
    """Half-plane Dirichlet kernel at ``x``, as a function of ``(y1, y2)``."""
    x1, x2 = float(x[0]), float(x[1])

    def k(y1, y2):
        d2 = (x1 - y1) ** 2
        return np.log((d2 + (x2 + y2) ** 2) / (d2 + (x2 - y2) ** 2)) / (2.0 * TWO_PI)
    return k


def phi_oracle(x, f: Profile, abs_tol: float = 1e-9, min_standoff: float = 0.05) -> float:
    """φ by direct two-dimensional quadrature over the patch."""
    return integrate_2d_region(green_kernel(x), f, x, abs_tol,
                               min_standoff=min_standoff).value


def speed_oracle(f: Profile, abs_tol: float = 1e-9) -> float:
    """``c = ∂₂φ(1, 0)`` by two-dimensional quadrature of the kernel derivative."""
    def k(y1, y2):
        return y2 / ((1.0 - y1) ** 2 + y2 ** 2) / np.pi
    return integrate_2d_region(k, f, None, abs_tol).value


_CANDIDATES = np.array([
    [0.0, 0.3], [0.2, 0.1], [0.5, 0.2], [-0.4, 0.35], [0.7, 0.1], [0.0, 1.5],
    [0.3, 1.2], [-1.3, 0.2], [1.5, 0.5], [0.0, 3.0], [-0.6, 0.9], [2.0, 0.1],
    [0.1, 0.6], [-0.2, 0.05], [0.9, 0.6], [1.2, 1.0],
])


def oracle_points(f: Profile, count: int = 10, standoff: float = 0.05) -> np.ndarray:
    """Fixed upper half-plane points at least ``standoff`` from the patch boundary."""
    keep = [p for p in _CANDIDATES if _boundary_distance(f, p) >= standoff]
    if len(keep) < count:
        raise ValueError(f"only {len(keep)} oracle points clear the boundary")
    return np.array(keep[:count])


def consistency_checks(f: Profile, abs_tol: float = DEFAULT_TOL, *, oracle_tol: float = 1e-6,
                       inverse_tol: float = 1e-8, oracle_count: int = 10,
                       inverse_count: int = 20) -> CheckReport:
    """Agreement of φ with the 2D oracle and, for strictly decreasing
    profiles, of φ and c with their ``y2``-parameterized forms."""
    pts = oracle_points(f, oracle_count)
    ours = phi(pts, f, abs_tol)
    ref = np.array([phi_oracle(p, f) for p in pts])
    oracle_err = float(np.max(np.abs(ours - ref)))
    margins = [oracle_tol - oracle_err]
    lines = [f"2D oracle max |diff| = {oracle_err:.3e}"]
    strict = bool(np.all(np.diff(f.half_values) < 0.0))
    if strict:
        rng = np.random.default_rng(7)
        q = np.column_stack([rng.uniform(-2.0, 2.0, inverse_count),
                             rng.uniform(0.01, 2.0, inverse_count)])
        inv_err = float(np.max(np.abs(phi(q, f, abs_tol) - phi_inverse_param(q, f, abs_tol))))
        c_err = abs(speed_c(f, abs_tol).c - speed_c_inverse(f, abs_tol).c)
        margins += [inverse_tol - inv_err, inverse_tol - c_err]
        lines += [f"inverse form max |diff| = {inv_err:.3e}", f"|c - c_inverse| = {c_err:.3e}"]
    else:
        lines.append("inverse form skipped (profile not strictly decreasing)")
    return _report("consistency", margins, len(pts) + (inverse_count if strict else 0),
                   "; ".join(lines))


def run_suite(f: Profile, cfg: SolveConfig = SolveConfig(), *, random_samples: int = 20,
              seed: int = 0) -> list[CheckReport]:
    """All single-profile checks plus the R-bound check on random samples."""
    from .seeds import random_m0_profiles
    samples = random_m0_profiles(random_samples, f.grid, peak_max=cfg.bound_M, seed=seed)
    return [
        verify_sign_structure(f, cfg.quad_tol),
        verify_R_bound(samples, cfg.bound_M, cfg.quad_tol),
        verify_asymptotics(f),
        verify_boundary_condition(f, cfg.quad_tol),
        verify_concavity(f),
        consistency_checks(f, cfg.quad_tol),
    ]
