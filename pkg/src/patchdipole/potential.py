"""Half-plane potential of the upper patch, travel speed, and the functional F.

All potentials are one-dimensional integrals over ``y`` in [0, 1]: the inner
``y2`` integral of the Dirichlet Green's function is done in closed form and
the two mirror images ``y1 = ±y`` of an even profile are summed in the
integrand. Everything is vectorized over evaluation points.

Notation inside the kernels: ``d = x1 - y1``, ``t = x2``, ``s = f(y1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Profile, eval_profile, inverse_profile, _require_decreasing
from .parallel import map_chunks
from .quadrature import integrate_batch

TWO_PI = 2.0 * np.pi
AXIS_EPS = 1e-8          # below this height F is evaluated by the axis formula
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SpeedValue:
    c: float

    def __float__(self):
        return self.c


@dataclass(frozen=True)
class FValue:
    value: float
    at: tuple[float, float]

    def __float__(self):
        return self.value


# -- integrands ------------------------------------------------------------

def _log_ratio(delta, q, num):
    """``log((q + delta) / q)`` with ``num = q + delta`` given exactly."""
    r = delta / q
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > -0.5, np.log1p(np.maximum(r, -0.5)), np.log(num) - np.log(q))


def _kernel_phi(d, t, s):
    q = d * d + t * t
    a = 0.5 * (t + s) * np.log1p(s * (2.0 * t + s) / q)
    ts = t - s
    with np.errstate(invalid="ignore"):
        b = 0.5 * ts * _log_ratio(s * (s - 2.0 * t), q, d * d + ts * ts)
    b = np.where(ts == 0.0, 0.0, b)
    c = d * _kernel_phi1(d, t, s, q)
    return a + b + c


def _kernel_phi1(d, t, s, q=None):
    if q is None:
        q = d * d + t * t
    return np.arctan2(s * d, q + t * s) + np.arctan2(-s * d, q - t * s)


def _kernel_phi2(d, t, s):
    q = d * d + t * t
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s * s * (2.0 * d * d - 2.0 * t * t + s * s) / (q * q)
        general = np.where(
            r > -0.5,
            0.5 * np.log1p(np.maximum(r, -0.5)),
            0.5 * (np.log(d * d + (t + s) ** 2) + np.log(d * d + (t - s) ** 2)) - np.log(q))
        axis = np.log1p((s / d) ** 2)
    return np.where(t == 0.0, axis, general)


_KERNELS = {
    "phi": _kernel_phi,
    "phi1": lambda d, t, s: _kernel_phi1(d, t, s),
    "phi2": _kernel_phi2,
}


def _breaks_for(f: Profile, x1: float, x2: float) -> np.ndarray:
    base = f.grid.half_nodes
    fx = float(eval_profile(f, min(x1, 1.0)))
    pts = np.array([x1, x1 - x2, x1 + x2, x1 - fx, x1 + fx])
    pts = pts[(pts > 0.0) & (pts < 1.0)]
    return np.union1d(base, pts)


def _potential_chunk(f, x1, x2, comps, abs_tol):
    """Raw integrals (without the 1/2π factor) for ``x1 >= 0``, ``x2 >= 0``."""
    kernels = [_KERNELS[c] for c in comps]

    def integrand(y, owner):
        s = f._eval_abs(y)
        a = x1[owner]
        t = x2[owner]
        out = []
        for k in kernels:
            out.append(k(a - y, t, s) + k(a + y, t, s))
        return np.stack(out, axis=-1)

    breaks = [_breaks_for(f, a, t) for a, t in zip(x1, x2)]
    vals, _, _ = integrate_batch(integrand, breaks, abs_tol)
    return vals.reshape(len(x1), len(comps))


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2:
        raise ValueError("points must have shape (2,) or (m, 2)")
    if np.any(pts[:, 1] < 0.0) or not np.all(np.isfinite(pts)):
        raise ValueError("potential is defined on the closed upper half-plane x2 >= 0")
    return pts, single


def potential_terms(x, f: Profile, comps=("phi", "phi1", "phi2"),
                    abs_tol: float = DEFAULT_TOL, chunk: int = 256) -> np.ndarray:
    """Evaluate several of φ, ∂₁φ, ∂₂φ at points ``x`` (shape ``(m, 2)``).

    Returns an array of shape ``(m, len(comps))``. Uses evenness of the
    profile: values are computed at ``|x1|`` and ``∂₁φ`` takes the sign of x1.
    """
    pts, _ = _as_points(x)
    x1 = np.abs(pts[:, 0])
    x2 = pts[:, 1]
    comps = tuple(comps)
    out = np.zeros((len(pts), len(comps)))
    # the integrand of φ vanishes identically on the axis
    work = np.ones(len(pts), dtype=bool)
    if "phi" in comps and len(comps) == 1:
        work = x2 > 0.0
    idx = np.flatnonzero(work)
    pieces = [idx[i:i + chunk] for i in range(0, idx.size, chunk)]
    results = map_chunks(lambda ix: _potential_chunk(f, x1[ix], x2[ix], comps, abs_tol), pieces)
    for ix, r in zip(pieces, results):
        out[ix] = r / TWO_PI
    if "phi" in comps:
        out[x2 == 0.0, comps.index("phi")] = 0.0
    if "phi1" in comps:
        out[:, comps.index("phi1")] *= np.where(pts[:, 0] < 0.0, -1.0, 1.0)
    return out


def phi(x, f: Profile, abs_tol: float = DEFAULT_TOL):
    """Vorticity-induced stream function φ(x; f) in the upper half-plane."""
    pts, single = _as_points(x)
    v = potential_terms(pts, f, ("phi",), abs_tol)[:, 0]
    return float(v[0]) if single else v


def grad_phi(x, f: Profile, abs_tol: float = DEFAULT_TOL):
    """(∂₁φ, ∂₂φ) at ``x``; shape ``(2,)`` or ``(m, 2)``."""
    pts, single = _as_points(x)
    v = potential_terms(pts, f, ("phi1", "phi2"), abs_tol)
    return v[0] if single else v


def _speed_integrand(f):
    def g(y, owner):
        s = f._eval_abs(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log1p((s / (1.0 - y)) ** 2) + np.log1p((s / (1.0 + y)) ** 2)
    return g


def speed_c(f: Profile, abs_tol: float = DEFAULT_TOL) -> SpeedValue:
    """Travel speed ``c(f) = ∂₂φ(1, 0)`` from the one-dimensional log formula."""
    if not np.any(f.half_values > 0.0) and f.exact is None:
        return SpeedValue(0.0)
    vals, _, _ = integrate_batch(_speed_integrand(f), [f.grid.half_nodes], abs_tol)
    return SpeedValue(float(vals[0]) / TWO_PI)


def axis_F(x1, f: Profile, c: float | None = None, abs_tol: float = DEFAULT_TOL):
    """``F(x1, 0; f) = ∂₂φ(x1, 0) - c(f)``, vectorized over ``x1``."""
    x1a = np.atleast_1d(np.asarray(x1, dtype=float))
    if c is None:
        c = speed_c(f, abs_tol).c
    pts = np.stack([x1a, np.zeros_like(x1a)], axis=1)
    v = potential_terms(pts, f, ("phi2",), abs_tol)[:, 0] - c
    return v if np.ndim(x1) else float(v[0])


def F_values(x, f: Profile, c: float | None = None, abs_tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorized F at points ``(m, 2)``; heights below 1e-8 use the axis formula."""
    pts, _ = _as_points(x)
    if c is None:
        c = speed_c(f, abs_tol).c
    out = np.empty(len(pts))
    low = pts[:, 1] < AXIS_EPS
    if np.any(low):
        out[low] = axis_F(pts[low, 0], f, c, abs_tol)
    if np.any(~low):
        p = pts[~low]
        out[~low] = potential_terms(p, f, ("phi",), abs_tol)[:, 0] / p[:, 1] - c
    return out


def F_value(x, f: Profile, c: float | None = None, abs_tol: float = DEFAULT_TOL) -> FValue:
    """``F(x1, x2; f) = φ(x)/x2 - c(f)`` at a single point."""
    pt = np.asarray(x, dtype=float)
    v = F_values(pt[None, :], f, c, abs_tol)[0]
    return FValue(float(v), (float(pt[0]), float(pt[1])))


def F_partials(x, f: Profile, abs_tol: float = DEFAULT_TOL):
    """``(F_x1, F_x2)`` for ``x2 > 0``; shape ``(2,)`` or ``(m, 2)``."""
    pts, single = _as_points(x)
    if np.any(pts[:, 1] <= 0.0):
        raise ValueError("F_partials requires x2 > 0")
    v = potential_terms(pts, f, ("phi", "phi1", "phi2"), abs_tol)
    t = pts[:, 1]
    out = np.stack([v[:, 1] / t, v[:, 2] / t - v[:, 0] / t ** 2], axis=1)
    return out[0] if single else out


# -- inverse parameterization ---------------------------------------------

def _inverse_breaks(f: Profile, x2: float) -> np.ndarray:
    ys = np.unique(f.half_values)
    top = f.peak
    extra = [x2] if 0.0 < x2 < top else []
    return np.union1d(ys, extra)


def _inner_phi_inverse(g, x1, x2, y2):
    p = x2 + y2
    am = np.abs(x2 - y2)

    def prim(u):
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = u * np.log((u * u + p * p) / (u * u + am * am))
        lg = np.where(u == 0.0, 0.0, lg)
        return lg + 2.0 * p * np.arctan2(u, p) - 2.0 * am * np.arctan2(u, am)

    return 0.5 * (prim(g - x1) - prim(-g - x1))


def _inverse_integrate(f, pts, integrand, abs_tol):
    _require_decreasing(f)
    x1 = pts[:, 0]
    x2 = pts[:, 1]

    def g(y2, owner):
        inv = inverse_profile(f, np.clip(y2, 0.0, f.peak))
        return integrand(inv, x1[owner], x2[owner], y2)

    breaks = [_inverse_breaks(f, t) for t in x2]
    vals, _, _ = integrate_batch(g, breaks, abs_tol)
    return vals


def phi_inverse_param(x, f: Profile, abs_tol: float = DEFAULT_TOL):
    """φ computed with ``y2`` as the outer variable (strictly decreasing ``f`` only)."""
    pts, single = _as_points(x)
    pts = np.column_stack([np.abs(pts[:, 0]), pts[:, 1]])
    v = _inverse_integrate(f, pts, _inner_phi_inverse, abs_tol) / TWO_PI
    v[pts[:, 1] == 0.0] = 0.0
    return float(v[0]) if single else v


def _inner_grad_inverse(g, x1, x2, y2):
    dm, dp = x1 - g, x1 + g
    am, ap = x2 - y2, x2 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = 0.5 * np.log((dm ** 2 + am ** 2) * (dp ** 2 + ap ** 2)
                          / ((dm ** 2 + ap ** 2) * (dp ** 2 + am ** 2)))
        g2 = (np.arctan(dm / am) - np.arctan(dm / ap)
              - np.arctan(dp / am) + np.arctan(dp / ap))
    return np.stack([g1, g2], axis=-1)


def grad_phi_inverse_param(x, f: Profile, abs_tol: float = DEFAULT_TOL):
    """(∂₁φ, ∂₂φ) with ``y2`` as the outer variable; requires ``x2 > 0``."""
    pts, single = _as_points(x)
    if np.any(pts[:, 1] <= 0.0):
        raise ValueError("inverse-parameterized gradient requires x2 > 0")
    sgn = np.where(pts[:, 0] < 0.0, -1.0, 1.0)
    p = np.column_stack([np.abs(pts[:, 0]), pts[:, 1]])
    v = _inverse_integrate(f, p, _inner_grad_inverse, abs_tol) / TWO_PI
    v[:, 0] *= sgn
    return v[0] if single else v


def speed_c_inverse(f: Profile, abs_tol: float = DEFAULT_TOL) -> SpeedValue:
    """Travel speed from the arctan formula in ``y2`` (strictly decreasing ``f``)."""
    _require_decreasing(f)

    def g(y2, owner):
        inv = inverse_profile(f, np.clip(y2, 0.0, f.peak))
        return np.arctan((inv - 1.0) / y2) + np.arctan((inv + 1.0) / y2)

    vals, _, _ = integrate_batch(g, [np.unique(f.half_values)], abs_tol)
    return SpeedValue(float(vals[0]) / np.pi)
