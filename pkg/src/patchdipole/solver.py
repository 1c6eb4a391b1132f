"""Explicit and implicit fixed-point maps, the iteration driver and the R-flow.

The explicit map is ``P(f) = φ(x, f(x); f) / c(f)``. The implicit map
``R(f)`` takes at every node the height ``x2 > 0`` where ``F(x1, x2; f)``
changes sign; F is strictly decreasing in ``x2`` so the root is bracketed
and refined by Newton steps that fall back to bisection.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .barriers import BOUND_M, BarrierParams, check_D_membership
from .grid import Profile, write_profile_csv
from .potential import (AXIS_EPS, DEFAULT_TOL, SpeedValue, axis_F, potential_terms,
                        speed_c)

log = logging.getLogger(__name__)

SCHEMES = ("explicit_P", "implicit_R", "dynamics")
C_MIN = 1e-12


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    scheme: str = "explicit_P"
    tol: float = 1e-8
    max_iter: int = 2000
    damping: float = 1.0
    dt: float = 0.1
    T: float = 20.0
    barrier_lambda: float = 0.05
    barrier_Lambda: float | None = None
    bound_M: float = BOUND_M
    gamma: float = 10.0
    quad_tol: float = DEFAULT_TOL
    root_tol: float = 1e-12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not 0.0 < self.dt < 1.0:
            raise ValueError("dt must lie in (0, 1)")
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name in ("barrier_lambda", "bound_M", "gamma", "quad_tol", "root_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.barrier_Lambda is None:
            object.__setattr__(self, "barrier_Lambda", 5.0 * self.bound_M)
        elif not self.barrier_Lambda > 0:
            raise ValueError("barrier_Lambda must be positive")

    @property
    def barrier_params(self) -> BarrierParams:
        return BarrierParams(M=self.bound_M, Lambda=self.barrier_Lambda,
                             lam=self.barrier_lambda, gamma=self.gamma)


@dataclass
class SolveReport:
    scheme: str
    iterations: int
    residual_history: list
    final_profile: Profile
    final_speed: SpeedValue
    converged: bool
    class_history: list = field(default_factory=list)
    status: str = ""
    params: dict = field(default_factory=dict)
    profile_csv_path: str | None = None

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "iterations": self.iterations,
            "converged": self.converged,
            "c": self.final_speed.c,
            "residual_history": [float(r) for r in self.residual_history],
            "params": self.params,
            "profile_csv_path": self.profile_csv_path,
            "status": self.status,
            "class_history": self.class_history,
        }

    def write(self, out_dir, stem: str = "profile") -> Path:
        """Write ``<stem>.csv`` and ``<stem>_report.json`` into ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = write_profile_csv(self.final_profile, out / f"{stem}.csv")
        self.profile_csv_path = str(csv_path)
        path = out / f"{stem}_report.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path


# -- maps ---------------------------------------------------------------------

def _speed(f: Profile, quad_tol: float) -> float:
    c = speed_c(f, quad_tol).c
    if not c > C_MIN:
        raise SolverError(f"degenerate profile: speed c(f) = {c:.3e} <= {C_MIN:g}")
    return c


def map_P(f: Profile, quad_tol: float = DEFAULT_TOL, c: float | None = None) -> Profile:
    """``P(f)(x_j) = φ(x_j, f(x_j); f) / c(f)`` on the grid nodes."""
    if c is None:
        c = _speed(f, quad_tol)
    xs = f.grid.half_nodes
    pts = np.stack([xs[:-1], f.half_values[:-1]], axis=1)
    vals = np.zeros_like(xs)
    vals[:-1] = potential_terms(pts, f, ("phi",), quad_tol)[:, 0] / c
    return Profile(f.grid, np.maximum(vals, 0.0))


@dataclass(frozen=True)
class RootInfo:
    """Per-node record of a call to :func:`map_R`."""
    axis_F: np.ndarray        # F(x_j, 0) at interior nodes
    bracket_top: np.ndarray   # final B with F(x_j, B) < 0
    F_top: np.ndarray
    iterations: int
    c: float


def _F_and_slope(f, x1, x2, c, quad_tol):
    pts = np.stack([x1, x2], axis=1)
    v = potential_terms(pts, f, ("phi", "phi2"), quad_tol)
    F = v[:, 0] / x2 - c
    dF = v[:, 1] / x2 - v[:, 0] / x2 ** 2
    return F, dF


def _roots(f: Profile, xs: np.ndarray, c: float, quad_tol: float, root_tol: float,
           guess=None, max_doublings: int = 60, max_steps: int = 200):
    """Roots of ``F(x_j, ·; f)`` for ``x_j`` in ``xs`` (all inside (-1, 1))."""
    n = xs.size
    F0 = axis_F(xs, f, c, quad_tol)
    bad = np.flatnonzero(~(F0 > 0.0))
    if bad.size:
        k = bad[0]
        raise SolverError(f"F(x, 0) = {F0[k]:.3e} <= 0 at x = {xs[k]!r}; no positive root")

    if guess is not None:
        g = np.asarray(guess, dtype=float)[:n]
        hi = np.maximum(2.0 * g, 1e-3)
    else:
        hi = np.full(n, f.peak + 1.0)
    Fhi, dhi = _F_and_slope(f, xs, hi, c, quad_tol)
    for _ in range(max_doublings):
        up = ~(Fhi < 0.0)
        if not np.any(up):
            break
        hi[up] *= 2.0
        Fhi[up], dhi[up] = _F_and_slope(f, xs[up], hi[up], c, quad_tol)
    else:
        k = int(np.flatnonzero(~(Fhi < 0.0))[0])
        raise SolverError(f"no sign change of F below x2 = {hi[k]:.3e} at x = {xs[k]!r}")
    top, F_top = hi.copy(), Fhi.copy()

    lo = np.zeros(n)
    if guess is not None:
        x = np.where((g > 0.0) & (g < hi), g, 0.5 * hi)
    else:
        # first step: Newton off the top of the bracket
        x = hi - Fhi / dhi
        x = np.where((x > lo) & (x < hi), x, 0.5 * hi)
    active = np.ones(n, dtype=bool)
    steps = 0
    for steps in range(1, max_steps + 1):
        idx = np.flatnonzero(active)
        xa = x[idx]
        Fa = np.empty(idx.size)
        da = np.full(idx.size, np.nan)
        low = xa < AXIS_EPS
        if np.any(low):
            Fa[low] = axis_F(xs[idx[low]], f, c, quad_tol)
        if np.any(~low):
            Fa[~low], da[~low] = _F_and_slope(f, xs[idx[~low]], xa[~low], c, quad_tol)
        pos = Fa > 0.0
        lo[idx] = np.where(pos, xa, lo[idx])
        hi[idx] = np.where(pos, hi[idx], xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - Fa / da
        inside = np.isfinite(xn) & (xn > lo[idx]) & (xn < hi[idx])
        xn = np.where(inside, xn, 0.5 * (lo[idx] + hi[idx]))
        done = (np.abs(xn - xa) <= root_tol) | (hi[idx] - lo[idx] <= root_tol) | (Fa == 0.0)
        x[idx] = np.where(Fa == 0.0, xa, xn)
        active[idx[done]] = False
        if not np.any(active):
            break
    else:
        raise SolverError(f"root iteration did not settle within {max_steps} steps")
    return x, RootInfo(F0, top, F_top, steps, c)


def map_R(f: Profile, quad_tol: float = DEFAULT_TOL, root_tol: float = 1e-12,
          guess: np.ndarray | None = None, return_info: bool = False):
    """Node-wise root of ``F(x_j, ·; f)`` on ``(0, ∞)``; endpoints are 0.

    The bracket ``[0, B]`` starts from ``B = f(0) + 1`` (or twice ``guess``)
    and doubles until ``F(x_j, B) < 0``. Newton steps inside the bracket are
    accepted when they stay inside it, otherwise the bracket is bisected.
    Stops when the step or the bracket is below ``root_tol``.
    """
    _check_R_input(f)
    c = _speed(f, quad_tol)
    x, info = _roots(f, f.grid.half_nodes[:-1], c, quad_tol, root_tol, guess)
    vals = np.zeros(f.grid.half_nodes.size)
    vals[:-1] = x
    out = Profile(f.grid, vals)
    return (out, info) if return_info else out


def R_at(f: Profile, x, quad_tol: float = DEFAULT_TOL, root_tol: float = 1e-12) -> np.ndarray:
    """``R(f)`` at arbitrary points of (-1, 1) without solving on the whole grid."""
    _check_R_input(f)
    xa = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    if np.any(xa >= 1.0):
        raise ValueError("R_at needs points in (-1, 1)")
    c = _speed(f, quad_tol)
    return _roots(f, xa, c, quad_tol, root_tol)[0]


def _check_R_input(f: Profile):
    if not f.is_M0:
        if np.any(f.half_values < 0):
            raise SolverError("map_R needs a nonnegative profile")
        warnings.warn("map_R input is not monotone on [0, 1]; proceeding", stacklevel=3)


def residual(f: Profile, which: str = "P", quad_tol: float = DEFAULT_TOL) -> float:
    """Max-node distance ``|map(f) - f|`` for ``which`` in {"P", "R"}."""
    if which == "P":
        g = map_P(f, quad_tol)
    elif which == "R":
        g = map_R(f, quad_tol)
    else:
        raise ValueError("which must be 'P' or 'R'")
    return float(np.max(np.abs(g.half_values - f.half_values)))


# -- drivers ----------------------------------------------------------------

def _class_flags(f: Profile, params: BarrierParams) -> dict:
    d = check_D_membership(f, params)
    return {"M0": f.is_M0, "D": d.member, "lower": d.lower, "upper": d.upper,
            "cap": d.cap, "holder": d.holder, "holder_value": d.holder_value}


def _params_dict(cfg: SolveConfig, f: Profile) -> dict:
    d = asdict(cfg)
    d["grid_n"] = f.grid.half_count
    d["grading_power"] = f.grid.grading_power
    return d


def solve_fixed_point(f0: Profile, cfg: SolveConfig = SolveConfig(), *,
                      callback=None) -> SolveReport:
    """Iterate ``f <- (1-θ) f + θ map(f)`` until the max-node residual is ``<= tol``.

    ``residual_history[n]`` is the residual of the n-th iterate; the returned
    profile is the last iterate whose residual was measured. Aborts when the
    residual stays above ten times its initial value for three steps.
    """
    if cfg.scheme == "dynamics":
        return run_dynamics(f0, cfg.T, cfg.dt, cfg)
    params = cfg.barrier_params
    theta = cfg.damping
    f = f0
    history, classes = [], []
    status = "max_iter"
    converged = False
    it = 0
    while True:
        if cfg.scheme == "explicit_P":
            c = _speed(f, cfg.quad_tol)
            g = map_P(f, cfg.quad_tol, c)
        else:
            g = map_R(f, cfg.quad_tol, cfg.root_tol)
            c = _speed(f, cfg.quad_tol)
        r = float(np.max(np.abs(g.half_values - f.half_values)))
        history.append(r)
        classes.append({"M0": f.is_M0})
        if callback is not None:
            callback(it, f, r)
        log.debug("iteration %d residual %.3e", it, r)
        if r <= cfg.tol:
            converged, status = True, "converged"
            break
        if len(history) > 3 and all(h > 10.0 * history[0] for h in history[-3:]):
            status = "diverged"
            break
        if it >= cfg.max_iter:
            break
        f = g if theta == 1.0 else Profile(f.grid, (1 - theta) * f.half_values
                                           + theta * g.half_values)
        it += 1
    classes[-1] = _class_flags(f, params)
    return SolveReport(cfg.scheme, it, history, f, SpeedValue(c), converged, classes,
                       status, _params_dict(cfg, f))


def euler_step(f: Profile, dt: float, quad_tol: float = DEFAULT_TOL,
               Rf: Profile | None = None) -> Profile:
    """One Euler-polygon step ``(1 - dt) f + dt R(f)``."""
    if not 0.0 <= dt < 1.0:
        raise ValueError("dt must lie in [0, 1)")
    if dt == 0.0:
        return f
    if Rf is None:
        Rf = map_R(f, quad_tol)
    return Profile(f.grid, (1.0 - dt) * f.half_values + dt * Rf.half_values)


def run_dynamics(f0: Profile, T: float, dt: float, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Euler polygon for ``f_t = R(f) - f`` on ``[0, T]``.

    Records per step the R-residual ``|R(f) - f|_max`` and the admissible-set
    flags (barriers, cap, Hölder bound); barrier violations are reported,
    never fatal. The last history entry is the residual of the final profile.
    """
    if not 0.0 < dt < 1.0:
        raise ValueError("dt must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be positive")
    params = cfg.barrier_params
    start = check_D_membership(f0, params)
    if not start.member:
        warnings.warn("initial profile is outside the admissible set; running anyway",
                      stacklevel=2)
    steps = int(round(T / dt))
    f = f0
    history, classes = [], []
    Rf = map_R(f, cfg.quad_tol, cfg.root_tol)
    for _ in range(steps):
        history.append(float(np.max(np.abs(Rf.half_values - f.half_values))))
        classes.append(_class_flags(f, params))
        f = euler_step(f, dt, cfg.quad_tol, Rf)
        Rf = map_R(f, cfg.quad_tol, cfg.root_tol, guess=Rf.half_values)
    r = float(np.max(np.abs(Rf.half_values - f.half_values)))
    history.append(r)
    classes.append(_class_flags(f, params))
    c = _speed(f, cfg.quad_tol)
    converged = r <= cfg.tol
    report = SolveReport("dynamics", steps, history, f, SpeedValue(c), converged, classes,
                         "converged" if converged else "horizon", _params_dict(cfg, f))
    report.params["T"] = T
    report.params["dt"] = dt
    return report
