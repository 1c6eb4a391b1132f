import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patchdipole.potential import phi
from patchdipole.quadrature import (QuadratureError, integrate_1d, integrate_2d_region,
                                    integrate_batch)


def test_polynomial():
    r = integrate_1d(lambda x: x, 0.0, 1.0)
    assert r.value == pytest.approx(0.5, abs=1e-15)
    assert r.error_estimate >= 0 and r.evaluations > 0


def test_log_singularity():
    r = integrate_1d(lambda x: np.log(1.0 / x), 0.0, 1.0, 1e-10, split_points=[0.0])
    assert abs(r.value - 1.0) <= 1e-10


def test_even_integrand_symmetry():
    g = lambda x: np.exp(-x * x) * np.cos(3 * x)
    full = integrate_1d(g, -1.0, 1.0, 1e-12, split_points=[0.0]).value
    half = integrate_1d(g, 0.0, 1.0, 1e-12).value
    assert full == pytest.approx(2 * half, abs=2e-12)


BATTERY = [
    (lambda x: x ** 20, 0.0, 1.0, [], 1.0 / 21.0),
    (lambda x: np.log(x), 0.0, 1.0, [0.0], -1.0),
    (lambda x: np.log(np.abs(x - 0.3)), 0.0, 1.0, [0.3], 0.7 * np.log(0.7) - 0.7 + 0.3 * np.log(0.3) - 0.3),
    (lambda x: np.arctan(1.0 / (x - 0.4)), 0.0, 1.0, [0.4],
     # antiderivative of atan(1/u): u atan(1/u) + ln(1+u^2)/2
     (0.6 * np.arctan(1 / 0.6) + 0.5 * np.log(1.36)) - (-0.4 * np.arctan(-1 / 0.4) + 0.5 * np.log(1.16))),
]


@pytest.mark.parametrize("g,a,b,splits,exact", BATTERY)
def test_error_estimate_is_honest(g, a, b, splits, exact):
    with np.errstate(divide="ignore"):
        r = integrate_1d(g, a, b, 1e-9, split_points=splits)
    err = abs(r.value - exact)
    assert err <= 1e-9
    assert err <= 10 * r.error_estimate


@settings(max_examples=30, deadline=None)
@given(alpha=st.floats(-5, 5), beta=st.floats(-5, 5), c=st.floats(0.05, 0.95))
def test_linearity_and_additivity(alpha, beta, c):
    tol = 1e-10
    g = lambda x: np.log(np.abs(x - 0.5) + 1e-3)
    h = lambda x: np.sqrt(x) * np.cos(4 * x)
    lhs = integrate_1d(lambda x: alpha * g(x) + beta * h(x), 0, 1, tol, [0.5]).value
    rhs = alpha * integrate_1d(g, 0, 1, tol, [0.5]).value + beta * integrate_1d(h, 0, 1, tol).value
    assert abs(lhs - rhs) <= 2 * tol * (1 + abs(alpha) + abs(beta))
    whole = integrate_1d(h, 0, 1, tol).value
    parts = integrate_1d(h, 0, c, tol).value + integrate_1d(h, c, 1, tol).value
    assert abs(whole - parts) <= 2 * tol


def test_failure_carries_estimate():
    with pytest.raises(QuadratureError) as exc:
        integrate_batch(lambda y, o: 1.0 / y, [np.array([0.0, 1.0])], 1e-10, max_rounds=5)
    assert np.isfinite(exc.value.value).all()
    assert exc.value.error_estimate[0] > 1e-10


def test_batch_vector_valued():
    vals, errs, _ = integrate_batch(lambda y, o: np.stack([y, y * y * (1 + o)], axis=-1),
                                    [np.array([0.0, 1.0]), np.array([0.0, 0.5, 2.0])], 1e-12)
    assert np.allclose(vals, [[0.5, 1.0 / 3.0], [2.0, 16.0 / 3.0]], atol=1e-13)


def test_region_area_semicircle(semi):
    r = integrate_2d_region(lambda y1, y2: np.ones_like(y2), semi, abs_tol=1e-6)
    assert r.value == pytest.approx(np.pi / 2, abs=1e-6)


def test_region_area_tent(tent_profile):
    r = integrate_2d_region(lambda y1, y2: np.ones_like(y2), tent_profile, abs_tol=1e-6)
    assert r.value == pytest.approx(1.0, abs=1e-6)


def test_region_oracle_matches_phi(semi):
    x = np.array([0.0, 2.0])
    kernel = lambda y1, y2: np.log((y1 ** 2 + (2 + y2) ** 2) / (y1 ** 2 + (2 - y2) ** 2)) / (4 * np.pi)
    r = integrate_2d_region(kernel, semi, x, abs_tol=1e-8)
    assert abs(r.value - phi(x, semi)) <= 1e-6


def test_region_rejects_point_near_boundary(semi):
    with pytest.raises(ValueError, match="standoff"):
        integrate_2d_region(lambda a, b: np.ones_like(b), semi, (0.6, 0.8005), 1e-6)
