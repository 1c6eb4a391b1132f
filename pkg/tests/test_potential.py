import mpmath as mp
import numpy as np
import pytest

from patchdipole.grid import Profile, ProfileError
from patchdipole.potential import (F_partials, F_value, F_values, axis_F, grad_phi,
                                   grad_phi_inverse_param, phi, phi_inverse_param, speed_c,
                                   speed_c_inverse)
from patchdipole.quadrature import integrate_2d_region
from patchdipole.seeds import make_seed


def green(x):
    return lambda y1, y2: np.log(((x[0] - y1) ** 2 + (x[1] + y2) ** 2)
                                 / ((x[0] - y1) ** 2 + (x[1] - y2) ** 2)) / (4 * np.pi)


def test_dirichlet_on_axis(cos_seed):
    x1 = np.linspace(-3, 3, 31)
    v = phi(np.column_stack([x1, np.zeros_like(x1)]), cos_seed)
    assert np.all(v == 0.0)


def test_symmetry(cos_seed, rng):
    pts = np.column_stack([rng.uniform(0, 2, 12), rng.uniform(0, 2, 12)])
    mirror = pts * [-1, 1]
    assert np.max(np.abs(phi(pts, cos_seed) - phi(mirror, cos_seed))) <= 1e-10
    g, gm = grad_phi(pts, cos_seed), grad_phi(mirror, cos_seed)
    assert np.max(np.abs(g[:, 0] + gm[:, 0])) <= 1e-10
    assert np.max(np.abs(g[:, 1] - gm[:, 1])) <= 1e-10
    assert np.max(np.abs(F_values(pts, cos_seed) - F_values(mirror, cos_seed))) <= 1e-10


def test_oracle_at_0_2(semi):
    x = (0.0, 2.0)
    ref = integrate_2d_region(green(x), semi, x, 1e-8).value
    assert abs(phi(np.array(x), semi) - ref) <= 1e-6


def test_grad_phi_special_points(cos_seed):
    assert grad_phi(np.array([0.0, 1.0]), cos_seed)[0] == 0.0
    c = speed_c(cos_seed).c
    assert grad_phi(np.array([1.0, 0.0]), cos_seed)[1] == pytest.approx(c, abs=1e-10)


@pytest.mark.parametrize("x", [(0.3, 0.4), (0.8, 0.2), (1.4, 0.6), (0.0, 1.3)])
def test_grad_phi_finite_differences(cos_seed, x):
    h = 1e-4
    x = np.array(x)
    fd = [(phi(x + h * e, cos_seed, 1e-13) - phi(x - h * e, cos_seed, 1e-13)) / (2 * h)
          for e in np.eye(2)]
    assert np.allclose(grad_phi(x, cos_seed, 1e-13), fd, atol=1e-7)


def test_speed_of_zero_profile(grid):
    assert speed_c(Profile(grid, np.zeros(grid.half_nodes.size))).c == 0.0


def _speed_mp(g):
    return float(mp.quad(lambda y: mp.log(1 + g(y) ** 2 / (1 - y) ** 2), [-1, 0, 1]) / (2 * mp.pi))


def test_semicircle_speed(semi):
    ref = _speed_mp(lambda y: mp.sqrt(1 - y * y))
    assert ref == pytest.approx(1 / np.pi, abs=1e-14)
    assert abs(speed_c(semi).c - 1 / np.pi) <= 1e-8


def test_tent_speed(tent_profile):
    exact = 0.25 - np.log(2) / (2 * np.pi)
    assert _speed_mp(lambda y: 1 - abs(y)) == pytest.approx(exact, abs=1e-14)
    assert abs(speed_c(tent_profile).c - exact) <= 1e-8


def test_F_on_axis(cos_seed):
    assert abs(F_value((1.0, 0.0), cos_seed).value) <= 1e-8
    assert abs(F_value((-1.0, 0.0), cos_seed).value) <= 1e-8
    assert F_value((0.5, 0.0), cos_seed).value > 0


def test_F_far_above(cos_seed):
    c = speed_c(cos_seed).c
    assert abs(F_value((0.0, 1e3), cos_seed).value + c) <= 1e-2 * c


def test_F_continuous_at_axis(cos_seed):
    x1 = np.array([0.0, 0.4, 0.9, 1.3])
    on = axis_F(x1, cos_seed)
    near = F_values(np.column_stack([x1, np.full(4, 1e-5)]), cos_seed)
    assert np.allclose(on, near, atol=1e-3)
    assert np.all(np.abs(near - on) > 0)


def test_F_partials(cos_seed, semi):
    assert F_partials(np.array([0.0, 1.0]), cos_seed)[0] == 0.0
    assert np.all(F_partials(np.array([0.5, 0.5]), semi) < 0)
    h = 1e-4
    x = np.array([0.4, 0.7])
    fd = [(F_value(x + h * e, cos_seed, abs_tol=1e-13).value
           - F_value(x - h * e, cos_seed, abs_tol=1e-13).value) / (2 * h) for e in np.eye(2)]
    assert np.allclose(F_partials(x, cos_seed, 1e-13), fd, atol=1e-7)


def test_inverse_parameterization(semi, tent_profile, cos_seed, rng):
    assert abs(phi_inverse_param(np.array([0.3, 0.4]), semi) - phi(np.array([0.3, 0.4]), semi)) <= 1e-8
    x = (0.3, 0.4)
    ref = integrate_2d_region(green(x), semi, x, 1e-8).value
    assert abs(phi_inverse_param(np.array(x), semi) - ref) <= 1e-6
    assert phi_inverse_param(np.array([0.5, 0.0]), semi) == 0.0
    pts = np.column_stack([rng.uniform(-2, 2, 20), rng.uniform(0.01, 2, 20)])
    for f in (semi, tent_profile, cos_seed):
        assert np.max(np.abs(phi(pts, f) - phi_inverse_param(pts, f))) <= 1e-8
        assert np.max(np.abs(grad_phi(pts, f) - grad_phi_inverse_param(pts, f))) <= 1e-8
        assert abs(speed_c(f).c - speed_c_inverse(f).c) <= 1e-8


def test_inverse_parameterization_rejects_nonmonotone(grid):
    with pytest.raises(ProfileError):
        phi_inverse_param(np.array([0.2, 0.3]), make_seed("fig2d", grid))


def test_harmonicity(semi):
    h = 1e-3

    def lap(x):
        x = np.array(x)
        pts = np.array([x, x + [h, 0], x - [h, 0], x + [0, h], x - [0, h]])
        v = phi(pts, semi, 1e-13)
        return (v[1] + v[2] + v[3] + v[4] - 4 * v[0]) / h ** 2

    for x in [(0.0, 1.5), (1.5, 0.5), (-1.2, 0.3)]:
        assert abs(lap(x)) <= 1e-4
    for x in [(0.0, 0.5), (0.4, 0.3), (-0.6, 0.2)]:
        assert abs(lap(x) + 1.0) <= 1e-3


def test_F_sign_structure_on_m0_samples(m0_samples):
    x1 = np.linspace(-1, 1, 52)[1:-1]
    for f in m0_samples[:5]:
        c = speed_c(f).c
        assert np.all(axis_F(x1, f, c) > 0)
        assert np.all(axis_F(np.array([-2.0, -1.2, 1.2, 2.0]), f, c) < 0)
        assert np.max(np.abs(axis_F(np.array([-1.0, 1.0]), f, c))) <= 1e-8
        q1 = np.linspace(0.05, 1.0, 6)
        q2 = np.linspace(0.05, 2 * f.peak, 6)
        X1, X2 = np.meshgrid(q1, q2)
        d = F_partials(np.column_stack([X1.ravel(), X2.ravel()]), f)
        assert np.all(d < 0)
