"""Graded grids on [-1, 1] and even boundary profiles of the upper patch.

A :class:`Profile` stores the boundary height only on the nonnegative half of
its grid; every evaluation goes through ``|x|`` so evenness is structural.
Between nodes the profile is a monotone piecewise cubic (PCHIP) built on the
mirrored node set, which keeps ``f'(0) = 0`` exactly and never creates new
extrema. A profile can optionally carry the analytic function it was sampled
from, in which case evaluations use that function directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator


DEFAULT_HALF_COUNT = 128
DEFAULT_GRADING = 1.3


class ProfileError(ValueError):
    """Raised for inadmissible profile data (asymmetric, negative, bad endpoints)."""


@dataclass(frozen=True)
class Grid:
    nodes: np.ndarray
    grading_power: float
    half_count: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def half_nodes(self) -> np.ndarray:
        """Nodes on [0, 1], starting at 0."""
        return self.nodes[self.half_count:]

    @property
    def size(self) -> int:
        return self.nodes.size

    def min_spacing(self) -> float:
        return float(np.min(np.diff(self.nodes)))


def make_graded_grid(half_count: int = DEFAULT_HALF_COUNT,
                     grading_power: float = DEFAULT_GRADING) -> Grid:
    """Symmetric grid with ``2N+1`` nodes clustered toward the endpoints ±1.

    On [0, 1] the nodes are ``1 - (1 - j/N)**p``; ``p = 1`` is uniform.
    """
    if int(half_count) != half_count or half_count < 2:
        raise ValueError(f"half_count must be an integer >= 2, got {half_count!r}")
    if not grading_power > 0:
        raise ValueError(f"grading_power must be positive, got {grading_power!r}")
    n = int(half_count)
    j = np.arange(n + 1)
    half = 1.0 - (1.0 - j / n) ** grading_power
    half[0] = 0.0
    half[-1] = 1.0
    nodes = np.concatenate([-half[:0:-1], half])
    return Grid(nodes, float(grading_power), n)


def _check_flags(grid: Grid, half_values: np.ndarray, slope: Callable | None):
    interior = half_values[1:-1]
    is_m0 = bool(np.all(np.diff(half_values) <= 0.0) and np.all(interior > 0.0)
                 and half_values[0] > 0.0)
    is_m1 = False
    if is_m0 and slope is not None:
        xs = grid.half_nodes
        probe = np.concatenate([xs[1:-1], 0.5 * (xs[:-1] + xs[1:])])
        is_m1 = bool(np.all(slope(probe) < 0.0))
    return is_m0, is_m1


@dataclass(frozen=True)
class Profile:
    """Even, endpoint-vanishing boundary function ``x2 = f(x1)`` on a grid.

    ``half_values[k]`` is the height at ``grid.half_nodes[k]``. When ``exact``
    is given it must be an even vectorized callable; evaluations then bypass
    the interpolant (node values remain the samples of ``exact``).
    """

    grid: Grid
    half_values: np.ndarray
    exact: Callable[[np.ndarray], np.ndarray] | None = None
    is_M0: bool = field(init=False)
    is_M1: bool = field(init=False)
    _interp: PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.half_values, dtype=float)
        if vals.shape != self.grid.half_nodes.shape:
            raise ProfileError(
                f"expected {self.grid.half_nodes.size} half-grid values, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ProfileError("profile values must be finite")
        vals[-1] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "half_values", vals)
        full = np.concatenate([vals[:0:-1], vals])
        interp = PchipInterpolator(self.grid.nodes, full, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        m0, m1 = _check_flags(self.grid, vals, self._slope)
        object.__setattr__(self, "is_M0", m0)
        object.__setattr__(self, "is_M1", m1)

    # -- evaluation -------------------------------------------------------
    @property
    def values(self) -> np.ndarray:
        """Node values on the full grid [-1, 1]."""
        v = self.half_values
        return np.concatenate([v[:0:-1], v])

    @property
    def peak(self) -> float:
        return float(self.half_values[0])

    def __call__(self, x):
        return eval_profile(self, x)

    def _eval_abs(self, ax: np.ndarray) -> np.ndarray:
        if self.exact is not None:
            out = np.asarray(self.exact(ax), dtype=float)
            out = np.where(ax >= 1.0, 0.0, out)
        else:
            out = self._interp(ax)
        return np.maximum(out, 0.0)

    def _slope(self, ax: np.ndarray) -> np.ndarray:
        """Derivative at ``ax >= 0`` (interior points only)."""
        if self.exact is not None:
            h = 1e-6 * np.minimum(1.0, np.maximum(1.0 - ax, 1e-3))
            lo = np.maximum(ax - h, 0.0)
            hi = np.minimum(ax + h, 1.0)
            return (self.exact(hi) - self.exact(lo)) / (hi - lo)
        return self._interp(ax, 1)

    def with_values(self, half_values) -> "Profile":
        """Same grid, new node values, interpolated representation."""
        return Profile(self.grid, half_values)


def profile_from_function(grid: Grid, g: Callable, *, keep_function: bool = False,
                          tol: float = 1e-12) -> Profile:
    """Sample an even, nonnegative, endpoint-vanishing ``g`` on ``grid``.

    With ``keep_function=True`` the returned profile evaluates ``g`` itself
    between nodes instead of the interpolant.
    """
    nodes = grid.nodes
    with np.errstate(all="ignore"):
        vals = np.asarray(g(nodes), dtype=float)
    if vals.shape != nodes.shape:
        vals = np.broadcast_to(vals, nodes.shape).astype(float)
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        k = bad[0]
        raise ProfileError(f"non-finite value at node x={nodes[k]!r}")
    n = grid.half_count
    scale = max(1.0, float(np.max(np.abs(vals))))
    asym = np.abs(vals[n:] - vals[n::-1])
    if np.any(asym > tol * scale):
        k = int(np.argmax(asym))
        raise ProfileError(
            f"function is not even: |g(x)-g(-x)| = {asym[k]:.3e} at x={grid.half_nodes[k]!r}")
    if np.any(vals < -tol * scale):
        k = int(np.argmin(vals))
        raise ProfileError(f"negative value {vals[k]:.3e} at node x={nodes[k]!r}")
    for k in (0, nodes.size - 1):
        if abs(vals[k]) > tol * scale:
            raise ProfileError(f"g(±1) must vanish, got {vals[k]:.3e} at x={nodes[k]!r}")
    half = np.maximum(vals[n:], 0.0)
    exact = None
    if keep_function:
        def exact(ax, _g=g):
            with np.errstate(all="ignore"):
                return np.asarray(_g(ax), dtype=float)
    return Profile(grid, half, exact=exact)


def eval_profile(f: Profile, x):
    """Evaluate ``f`` at ``x`` in [-1, 1] (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1.0) or np.any(np.isnan(xa)):
        raise ValueError("profile evaluation requires x in [-1, 1]")
    out = f._eval_abs(np.abs(xa))
    return float(out) if out.ndim == 0 else out


def profile_derivative(f: Profile, x):
    """Derivative of the profile; odd in ``x``, zero at 0, undefined at ±1."""
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) >= 1.0) or np.any(np.isnan(xa)):
        raise ValueError("derivative is only defined on the open interval (-1, 1)")
    ax = np.abs(xa)
    out = np.sign(xa) * f._slope(ax)
    out = np.where(ax == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _require_decreasing(f: Profile):
    if not np.all(np.diff(f.half_values) < 0.0):
        k = int(np.argmax(np.diff(f.half_values) >= 0.0))
        raise ProfileError(
            f"profile is not strictly decreasing on [0,1] near x={f.grid.half_nodes[k]!r}")


def inverse_profile(f: Profile, y, *, xtol: float = 1e-15):
    """Return ``x`` in [0, 1] with ``f(x) = y`` for ``y`` in [0, f(0)].

    Vectorized safeguarded Newton on the bracketing node interval.
    """
    _require_decreasing(f)
    ya = np.asarray(y, dtype=float)
    top = f.peak
    if np.any(ya < 0.0) or np.any(ya > top) or np.any(np.isnan(ya)):
        raise ValueError(f"inverse requires y in [0, f(0)] = [0, {top!r}]")
    xs = f.grid.half_nodes
    vs = f.half_values
    yf = ya.ravel()
    # vs is decreasing: index k with vs[k] >= y >= vs[k+1]
    k = np.searchsorted(-vs, -yf, side="right") - 1
    k = np.clip(k, 0, xs.size - 2)
    lo = xs[k].copy()
    hi = xs[k + 1].copy()
    flo = vs[k] - yf
    fhi = vs[k + 1] - yf
    denom = np.where(flo - fhi > 0, flo - fhi, 1.0)
    x = np.clip(lo + (hi - lo) * flo / denom, lo, hi)
    for _ in range(100):
        fx = f._eval_abs(x) - yf
        # g(x) = f(x) - y decreasing: positive -> root to the right
        pos = fx > 0
        lo = np.where(pos, x, lo)
        hi = np.where(pos, hi, x)
        d = f._slope(np.clip(x, 0.0, np.nextafter(1.0, 0.0)))
        with np.errstate(all="ignore"):
            step = np.where(d < 0, -fx / d, np.nan)
        xn = x + step
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = (np.abs(xn - x) <= xtol) | (hi - lo <= xtol) | (fx == 0)
        x = np.where(fx == 0, x, xn)
        if np.all(done):
            break
    x = np.where(yf == top, 0.0, x)
    x = np.where(yf == 0.0, 1.0, x)
    out = x.reshape(ya.shape)
    return float(out) if out.ndim == 0 else out


def holder_seminorm(f: Profile, exponent: float = 0.5) -> float:
    """Discrete Hölder seminorm: max over node pairs of ``|Δf| / |Δx|**exponent``."""
    if not 0.0 < exponent < 1.0:
        raise ValueError("exponent must lie in (0, 1)")
    x = f.grid.nodes
    v = f.values
    dx = np.abs(x[:, None] - x[None, :])
    dv = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(dx, 1.0)
    return float(np.max(dv / dx ** exponent))


# -- CSV ---------------------------------------------------------------------

def write_profile_csv(f: Profile, path) -> Path:
    """Write the [0, 1] half as ``x,f`` rows with 17 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "f"])
        for x, v in zip(f.grid.half_nodes, f.half_values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])
    return path


def read_profile_csv(path) -> Profile:
    """Read a profile CSV; the grid is rebuilt from the listed half nodes."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"x", "f"}:
        raise ProfileError(f"{path}: expected a CSV with header 'x,f'")
    xs = np.array([float(r["x"]) for r in rows])
    vs = np.array([float(r["f"]) for r in rows])
    return profile_from_half_nodes(xs, vs, str(path))


def profile_from_half_nodes(xs, vs, source: str = "profile") -> Profile:
    """Rebuild a profile from its [0, 1] nodes and values (as stored on disk)."""
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if xs.shape != vs.shape or xs.size < 3:
        raise ProfileError(f"{source}: need matching x and f columns with at least 3 rows")
    if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0):
        raise ProfileError(f"{source}: x column must increase strictly from 0 to 1")
    if np.any(vs < 0):
        raise ProfileError(f"{source}: negative profile value")
    n = xs.size - 1
    # grading power recovered from the first interior node (metadata only)
    p = round(float(np.log(1.0 - xs[1]) / np.log(1.0 - 1.0 / n)), 10)
    grid = Grid(np.concatenate([-xs[:0:-1], xs]), p, n)
    return Profile(grid, vs)


def resample(f: Profile, grid: Grid) -> Profile:
    """Interpolate ``f`` onto another grid."""
    return Profile(grid, eval_profile(f, grid.half_nodes))
