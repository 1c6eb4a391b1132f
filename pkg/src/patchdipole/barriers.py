"""Barrier profiles for the R-dynamics and the admissible-set check.

``W(t) = ∫_0^t ds / (1 + ln(1 + 1/s))`` is increasing with ``W(t) <= t``;
the upper barrier is ``v(x) = M W^{-1}(Λ (1 - |x|) / M)`` and the lower one
the parabola ``u(x) = λ (1 - x^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .grid import Profile, holder_seminorm
from .quadrature import integrate_batch

BOUND_M1 = 2.0 ** (8.0 / np.pi)
BOUND_M = 3.0 * BOUND_M1
W_TOL = 1e-13


@dataclass(frozen=True)
class BarrierParams:
    M: float = BOUND_M
    Lambda: float = 5.0 * BOUND_M
    lam: float = 0.05
    gamma: float = 10.0


def _w(s):
    with np.errstate(divide="ignore"):
        return 1.0 / (1.0 + np.log1p(1.0 / s))


def W(t):
    """Vectorized ``W(t)`` for ``t >= 0``."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0) or np.any(np.isnan(ta)):
        raise ValueError("W is defined for t >= 0")
    flat = ta.ravel()
    out = np.zeros_like(flat)
    pos = np.flatnonzero(flat > 0)
    if pos.size:
        breaks = [np.array([0.0, flat[i]]) for i in pos]
        vals, _, _ = integrate_batch(lambda s, o: _w(s), breaks, W_TOL, max_rounds=200)
        out[pos] = vals
    out = out.reshape(ta.shape)
    return float(out) if out.ndim == 0 else out


def W_inv(s, xtol: float = 1e-14):
    """Inverse of :func:`W` by bracketed Newton iteration; ``W_inv(s) >= s``."""
    sa = np.asarray(s, dtype=float)
    if np.any(sa < 0) or np.any(np.isnan(sa)):
        raise ValueError("W_inv is defined for s >= 0")
    flat = sa.ravel()
    out = np.zeros_like(flat)
    pos = flat > 0
    if np.any(pos):
        target = flat[pos]
        lo = target.copy()          # W(s) <= s, so the root is >= s
        hi = 2.0 * target
        while True:
            short = W(hi) < target
            if not np.any(short):
                break
            hi = np.where(short, 2.0 * hi, hi)
        x = 0.5 * (lo + hi)
        for _ in range(200):
            r = W(x) - target
            lo = np.where(r < 0, x, lo)
            hi = np.where(r < 0, hi, x)
            xn = x - r / _w(x)
            bad = (xn <= lo) | (xn >= hi) | ~np.isfinite(xn)
            xn = np.where(bad, 0.5 * (lo + hi), xn)
            done = np.abs(xn - x) <= xtol * np.maximum(1.0, x)
            x = xn
            if np.all(done):
                break
        out[pos] = x
    out = out.reshape(sa.shape)
    return float(out) if out.ndim == 0 else out


def u_lower(x, lam: float):
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1):
        raise ValueError("barriers are defined on [-1, 1]")
    return lam * (1.0 - xa * xa)


def v_upper(x, M: float, Lambda: float):
    xa = np.asarray(x, dtype=float)
    if np.any(np.abs(xa) > 1):
        raise ValueError("barriers are defined on [-1, 1]")
    return M * W_inv(Lambda * (1.0 - np.abs(xa)) / M)


def barrier_eval(kind: str, arg, params: BarrierParams = BarrierParams()):
    """Dispatch on ``kind`` in {"W", "W_inv", "v_upper", "u_lower"}."""
    if kind == "W":
        return W(arg)
    if kind == "W_inv":
        return W_inv(arg)
    if kind == "v_upper":
        return v_upper(arg, params.M, params.Lambda)
    if kind == "u_lower":
        return u_lower(arg, params.lam)
    raise ValueError(f"unknown barrier kind {kind!r}")


@lru_cache(maxsize=32)
def _v_on_half_grid(nodes_bytes: bytes, M: float, Lambda: float) -> np.ndarray:
    xs = np.frombuffer(nodes_bytes, dtype=float)
    return v_upper(xs, M, Lambda)


@dataclass(frozen=True)
class DMembership:
    lower: bool
    upper: bool
    cap: bool
    holder: bool
    lower_margin: float
    upper_margin: float
    cap_margin: float
    holder_value: float
    is_M0: bool

    @property
    def member(self) -> bool:
        return self.lower and self.upper and self.cap and self.holder and self.is_M0

    def to_dict(self):
        d = asdict(self)
        d["member"] = self.member
        return d


def check_D_membership(f: Profile, params: BarrierParams = BarrierParams()) -> DMembership:
    """Test ``u <= f <= min(v, M)`` and ``|f|_{C^1/2} <= γ`` at the grid nodes.

    Barrier margins are taken over the nodes inside (-1, 1).

    Margins are signed: negative means the condition is violated by that much.
    """
    # endpoints are excluded: all three bounds vanish there
    xs = f.grid.half_nodes[:-1]
    vals = f.half_values[:-1]
    u = u_lower(xs, params.lam)
    v = _v_on_half_grid(np.ascontiguousarray(xs).tobytes(), params.M, params.Lambda)
    lower_margin = float(np.min(vals - u))
    upper_margin = float(np.min(v - vals))
    cap_margin = float(params.M - np.max(vals))
    h = holder_seminorm(f, 0.5)
    return DMembership(
        lower=lower_margin >= 0.0,
        upper=upper_margin >= 0.0,
        cap=cap_margin >= 0.0,
        holder=h <= params.gamma,
        lower_margin=lower_margin,
        upper_margin=upper_margin,
        cap_margin=cap_margin,
        holder_value=h,
        is_M0=f.is_M0,
    )
