"""Adaptive Gauss-Kronrod quadrature, vectorized over many integrals at once.

Every integral ("owner") starts from its own list of breakpoints. Each round
evaluates the 15-point Kronrod rule on all live intervals in a single call to
the integrand, estimates the error by the distance to the embedded 7-point
Gauss rule, and bisects the intervals of owners whose summed error still
exceeds the tolerance. Breakpoints are where integrable singularities and
kinks go; the rule never evaluates an interval endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# QUADPACK qk15 abscissae (positive half, descending) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes, ascending
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[7] = _WG[3]
_WG15[[9, 11, 13]] = _WG[2::-1]


class QuadratureError(RuntimeError):
    """Tolerance not reached; carries the best available estimate."""

    def __init__(self, message, value, error_estimate):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


def _rule(g, a, b, owner):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = np.asarray(g(y, np.broadcast_to(owner[:, None], y.shape)), dtype=float)
    # vals: (n, 15) or (n, 15, ncomp)
    if vals.ndim == 2:
        vals = vals[..., None]
    k = np.einsum("nqc,q->nc", vals, _WK) * half[:, None]
    gsum = np.einsum("nqc,q->nc", vals, _WG15) * half[:, None]
    err = np.max(np.abs(k - gsum), axis=1)
    err = np.where(np.all(np.isfinite(k), axis=1), err, np.inf)
    return k, err


def integrate_batch(g: Callable, breaks: Sequence[np.ndarray], abs_tol: float = 1e-10,
                    *, max_rounds: int = 80, max_intervals: int = 4_000_000,
                    raise_on_fail: bool = True):
    """Integrate one integrand over many break lists simultaneously.

    ``g(y, owner)`` receives equally shaped arrays of abscissae and owner
    indices and returns values of the same shape, optionally with a trailing
    component axis. ``breaks[i]`` is an increasing array of at least two
    points for owner ``i``. Returns ``(values, errors, evaluations)`` where
    ``values`` has shape ``(n_owner,)`` or ``(n_owner, ncomp)``.
    """
    if not abs_tol > 0:
        raise ValueError("abs_tol must be positive")
    n_owner = len(breaks)
    a_list, b_list, o_list = [], [], []
    for i, br in enumerate(breaks):
        br = np.asarray(br, dtype=float)
        if br.size < 2 or np.any(np.diff(br) <= 0):
            raise ValueError(f"breakpoints of owner {i} must increase strictly")
        a_list.append(br[:-1])
        b_list.append(br[1:])
        o_list.append(np.full(br.size - 1, i))
    a = np.concatenate(a_list)
    b = np.concatenate(b_list)
    owner = np.concatenate(o_list)

    val, err = _rule(g, a, b, owner)
    evals = 15 * a.size
    ncomp = val.shape[1]
    frozen_val = np.zeros((n_owner, ncomp))
    frozen_err = np.zeros(n_owner)
    failed = np.zeros(n_owner, dtype=bool)

    for _ in range(max_rounds):
        tot_err = frozen_err + np.bincount(owner, weights=err, minlength=n_owner)
        bad = tot_err > abs_tol
        if not np.any(bad[owner]):
            break
        # intervals of finished owners are retired
        keep = bad[owner]
        if not np.all(keep):
            done = ~keep
            for c in range(ncomp):
                frozen_val[:, c] += np.bincount(owner[done], weights=val[done, c],
                                                minlength=n_owner)
            frozen_err += np.bincount(owner[done], weights=err[done], minlength=n_owner)
            a, b, owner, val, err = a[keep], b[keep], owner[keep], val[keep], err[keep]
        count = np.bincount(owner, minlength=n_owner)
        budget = np.maximum(abs_tol - frozen_err, 0.0) / np.maximum(count, 1)
        split = err > budget[owner]
        tiny = (b - a) <= 1e-14 * np.maximum(1.0, np.abs(a))
        stuck = split & tiny
        if np.any(stuck):
            failed[np.unique(owner[stuck])] = True
            split &= ~tiny
        if not np.any(split) or a.size + np.count_nonzero(split) > max_intervals:
            break
        m = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], m])
        nb = np.concatenate([m, b[split]])
        no = np.concatenate([owner[split], owner[split]])
        nv, ne = _rule(g, na, nb, no)
        evals += 15 * na.size
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        owner = np.concatenate([owner[keep], no])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])

    values = frozen_val.copy()
    for c in range(ncomp):
        values[:, c] += np.bincount(owner, weights=val[:, c], minlength=n_owner)
    errors = frozen_err + np.bincount(owner, weights=err, minlength=n_owner)
    failed |= ~(errors <= abs_tol)
    if ncomp == 1:
        values = values[:, 0]
    if raise_on_fail and np.any(failed):
        i = int(np.flatnonzero(failed)[0])
        raise QuadratureError(
            f"{np.count_nonzero(failed)} of {n_owner} integrals missed abs_tol={abs_tol:g}"
            f" (worst error estimate {errors[failed].max():.3e}, owner {i})",
            values, errors)
    return values, errors, evals


def _breaks(a, b, split_points):
    pts = np.asarray([p for p in split_points if a < p < b], dtype=float)
    return np.unique(np.concatenate([[a, b], pts]))


def integrate_1d(g: Callable, a: float, b: float, abs_tol: float = 1e-10,
                 split_points: Sequence[float] = ()) -> QuadResult:
    """Adaptive integral of a vectorized scalar integrand ``g`` over [a, b].

    The interval is cut at every split point inside (a, b) before refinement,
    so integrable singularities placed there are only approached, never hit.
    Raises :class:`QuadratureError` (with the best estimate attached) if the
    tolerance cannot be met.
    """
    if not a < b:
        raise ValueError("integrate_1d requires a < b")
    br = _breaks(float(a), float(b), split_points)
    vals, errs, n = integrate_batch(lambda y, o: g(y), [br], abs_tol)
    return QuadResult(float(vals[0]), float(errs[0]), n)


def _boundary_distance(f, x, samples: int = 4001) -> float:
    from .grid import eval_profile
    t = np.linspace(-1.0, 1.0, samples)
    curve = np.stack([t, eval_profile(f, t)], axis=1)
    d_curve = np.min(np.hypot(curve[:, 0] - x[0], curve[:, 1] - x[1]))
    d_axis = np.hypot(max(abs(x[0]) - 1.0, 0.0), x[1])
    return float(min(d_curve, d_axis))


def integrate_2d_region(kernel: Callable, f, x=None, abs_tol: float = 1e-6, *,
                        min_standoff: float = 1e-3) -> QuadResult:
    """Integrate ``kernel(y1, y2)`` over the patch ``0 <= y2 <= f(y1)``.

    Nested adaptive quadrature: the outer variable is ``y1`` and the inner
    integral runs over ``[0, f(y1)]``. ``x`` is the location of a possible
    kernel singularity; it is used as a breakpoint in both directions and
    must keep ``min_standoff`` from the patch boundary.
    """
    from .grid import eval_profile
    if x is not None:
        x = np.asarray(x, dtype=float)
        d = _boundary_distance(f, x)
        if d < min_standoff:
            raise ValueError(
                f"point {tuple(x)} lies {d:.2e} from the patch boundary;"
                f" minimum standoff is {min_standoff:g}")
    inner_tol = abs_tol / 8.0

    def outer(y1):
        shape = y1.shape
        y1f = y1.ravel()
        tops = eval_profile(f, y1f)
        brs = []
        for yy, top in zip(y1f, tops):
            if top <= 0.0:
                brs.append(np.array([0.0, 1.0]))
                continue
            if x is not None and 0.0 < x[1] < top:
                brs.append(np.array([0.0, x[1], top]))
            else:
                brs.append(np.array([0.0, top]))
        y1_of = y1f

        def inner(y2, owner):
            k = np.asarray(kernel(y1_of[owner], y2), dtype=float)
            k = np.broadcast_to(k, y2.shape)
            return np.where(tops[owner] > 0.0, k, 0.0)

        vals, _, _ = integrate_batch(inner, brs, inner_tol)
        return vals.reshape(shape)

    splits = [0.0]
    if x is not None:
        splits += [x[0], x[0] - x[1], x[0] + x[1]]
    res = integrate_1d(outer, -1.0, 1.0, abs_tol=abs_tol, split_points=splits)
    return res
