"""Named initial profiles and a random generator for monotone test profiles."""

from __future__ import annotations

import numpy as np

from .barriers import BOUND_M
from .grid import Grid, Profile, make_graded_grid, profile_from_function


def _log_bump(x):
    # (1 - x^2) log(1 + 1/(1 - x^2)), continuous with limit 0 at |x| = 1
    s = np.clip(1.0 - np.asarray(x, dtype=float) ** 2, 0.0, None)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] * np.log1p(1.0 / s[pos])
    return out


def _fig2a(x):
    return _log_bump(x)


def _fig2b(x):
    return np.cos(0.5 * np.pi * np.asarray(x, dtype=float))


def _fig2c(x):
    x = np.asarray(x, dtype=float)
    return 0.5 / (1.0 + 100.0 * x * x) + 0.5 * _log_bump(x)


def _fig2d(x):
    x = np.asarray(x, dtype=float)
    return _log_bump(x) / (1.0 + (2.0 * x * x - 1.0) ** 2)


SEEDS = {"fig2a": _fig2a, "fig2b": _fig2b, "fig2c": _fig2c, "fig2d": _fig2d}


def seed_function(name: str):
    try:
        return SEEDS[name]
    except KeyError:
        raise ValueError(f"unknown seed {name!r}; choose from {sorted(SEEDS)}") from None


def make_seed(name: str, grid: Grid | None = None) -> Profile:
    """Sample a named seed on ``grid``; endpoint values are set to zero.

    ``fig2c`` is 1/202 at ±1 rather than 0, so its endpoint samples are
    replaced by 0 (the only node values that change).
    """
    grid = grid if grid is not None else make_graded_grid()
    g = seed_function(name)

    def pinned(x):
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) >= 1.0, 0.0, g(x))

    return profile_from_function(grid, pinned)


def random_m0_profiles(count: int, grid: Grid | None = None, *, peak_max: float = BOUND_M,
                       seed: int = 0, scale_to: float | None = None) -> list[Profile]:
    """Sample ``a (1-x^2)^q (1 + b cos(pi x/2))`` with monotone half-profile.

    ``a`` in [0.1, peak_max], ``q`` in [0.5, 2], ``b`` in [0, 0.5]; draws that
    are not nonincreasing on [0, 1] or peak above ``peak_max`` are rejected.
    With ``scale_to`` each profile is rescaled so that ``f(0) = scale_to``.
    """
    grid = grid if grid is not None else make_graded_grid()
    rng = np.random.default_rng(seed)
    xs = grid.half_nodes
    out = []
    while len(out) < count:
        a = rng.uniform(0.1, peak_max)
        q = rng.uniform(0.5, 2.0)
        b = rng.uniform(0.0, 0.5)
        vals = a * (1.0 - xs * xs) ** q * (1.0 + b * np.cos(0.5 * np.pi * xs))
        if np.any(np.diff(vals) > 0.0) or vals[0] > peak_max:
            continue
        if scale_to is not None:
            vals = vals * (scale_to / vals[0])
        out.append(Profile(grid, vals))
    return out


def semicircle(grid: Grid | None = None, keep_function: bool = True) -> Profile:
    grid = grid if grid is not None else make_graded_grid()
    return profile_from_function(
        grid, lambda x: np.sqrt(np.clip(1.0 - np.asarray(x) ** 2, 0.0, None)),
        keep_function=keep_function)


def tent(grid: Grid | None = None, keep_function: bool = True) -> Profile:
    grid = grid if grid is not None else make_graded_grid()
    return profile_from_function(
        grid, lambda x: np.clip(1.0 - np.abs(np.asarray(x)), 0.0, None),
        keep_function=keep_function)
