import numpy as np
import pytest

from dbar_dirac.field import (CircleQuadrature, ComplexGrid2D, GridError, PolarCauchy, PolarGrid,
                              cauchy_solid, circle_cauchy, d_spectral, dbar_fd4, dbar_spectral,
                              green_convolve, grid_points, inverse_d_spectral)
from dbar_dirac.forward import PotentialField, build_v, solve_mu


def bump(z, R=1.0, p=4):
    return np.clip(1 - np.abs(z) ** 2 / R ** 2, 0, None) ** p


def test_grid_validation():
    with pytest.raises(GridError):
        ComplexGrid2D(2.0, 48, np.zeros((48, 48)))
    with pytest.raises(GridError):
        ComplexGrid2D(-1.0, 16, np.zeros((16, 16)))
    with pytest.raises(GridError):
        CircleQuadrature(0j, 1.0, 7)


def test_grid_points_layout():
    z = grid_points(2.0, 8)
    assert z[0, 0] == -2 - 2j
    assert z[1, 0] - z[0, 0] == pytest.approx(0.5)
    assert z[0, 1] - z[0, 0] == pytest.approx(0.5j)


def test_cauchy_solid_zero_and_symmetry():
    z = grid_points(2.0, 64)
    assert cauchy_solid(ComplexGrid2D(2.0, 64, np.zeros((64, 64))), 0.3) == 0
    f = ComplexGrid2D(2.0, 64, bump(z))
    assert abs(cauchy_solid(f, 0j)) < 1e-12


def test_cauchy_solid_outside_support():
    # holomorphic kernel on the support: -(1/pi) * (-pi/5) / p
    z = grid_points(2.0, 128)
    f = ComplexGrid2D(2.0, 128, bump(z))
    for p in (1.5, 1.2 + 0.9j):
        assert abs(cauchy_solid(f, p) - 1 / (5 * p)) < 1e-6


def test_cauchy_solid_linear():
    z = grid_points(2.0, 64)
    f1, f2 = bump(z), bump(z - 0.2) * z
    a, b = 0.3 - 1.1j, 2.0 + 0.5j
    lhs = cauchy_solid(ComplexGrid2D(2.0, 64, a * f1 + b * f2), 0.4j)
    rhs = a * cauchy_solid(ComplexGrid2D(2.0, 64, f1), 0.4j) + \
        b * cauchy_solid(ComplexGrid2D(2.0, 64, f2), 0.4j)
    assert abs(lhs - rhs) < 1e-12


def test_polar_cauchy_matches_closed_form():
    g = PolarGrid(1.0, 6.0, 4, 8, 64)
    r = g.nodes
    dens = 1.0 / np.abs(r) ** 4
    # -(1/pi) \iint_{1<|s|<6} |s|^-4 / (s - p) for |p| < 1: only the n = 0 ring term survives -> 0
    assert abs(cauchy_solid(dens, np.array([0.3 + 0.2j]), g)[0]) < 1e-10
    val = PolarCauchy(g).evaluate(dens * r, np.array([0.0j]))[0]
    # (1/pi) \iint |s|^-4 over the annulus = 1 - 6^-2
    assert val == pytest.approx(1 - 6.0 ** -2, rel=1e-10)


def test_green_convolve_zero():
    f = ComplexGrid2D(2.0, 32, np.zeros((32, 32), complex), 0.8)
    assert not np.any(green_convolve(f, 1 + 1j).values)


def test_green_convolve_support_guard():
    z = grid_points(2.0, 32)
    with pytest.raises(GridError):
        green_convolve(ComplexGrid2D(2.0, 32, bump(z, 1.5), 1.5), 0j)


def test_green_convolve_inverts_dbar():
    z = grid_points(2.0, 128)
    f = ComplexGrid2D(2.0, 128, bump(z, 0.8, 6) * (1 + 0.5 * z), 0.8)
    u = green_convolve(f, 2.0 - 1.0j)
    back = dbar_fd4(u.values, f.h)
    inner = np.abs(z) < 1.2
    err = np.abs(back - f.values)[inner].max() / np.abs(f.values).max()
    assert err < 5e-3


def test_green_convolve_fourth_order():
    # Cauchy transform of a Gaussian: s^2 (1 - g) / z, with G at k = 0 being 1/(pi z)
    errs = []
    for n in (64, 128):
        z = grid_points(2.0, n)
        g = np.exp(-np.abs(z) ** 2 / 0.09)
        exact = 0.09 * (1 - g) / np.where(z == 0, 1, z)
        u = green_convolve(ComplexGrid2D(2.0, n, g.astype(complex), 0.9), 0j).values
        m = (np.abs(z) < 0.8) & (z != 0)
        errs.append(np.abs(u - exact)[m].max())
    assert errs[0] < 1e-4 and errs[0] / errs[1] > 12


def test_forward_solver_fourth_order():
    z = grid_points(2.0, 256)
    q = 0.3 * bump(z, 0.8, 6) * (1 + 0.4j * z)
    vals = {}
    for n in (64, 128, 256):
        s = 256 // n
        Q = PotentialField.from_arrays(q[::s, ::s], np.conj(q[::s, ::s]), 2.0, 0.8)
        vals[n] = build_v(solve_mu(Q, 6.0 - 2.0j)).values[n // 2 + n // 8, n // 2]
    d1 = np.abs(vals[64] - vals[128]).max()
    d2 = np.abs(vals[128] - vals[256]).max()
    assert d1 / d2 > 12


def test_circle_cauchy_trivial():
    q = CircleQuadrature(0j, 1.0, 64)
    one = np.ones(q.m)
    assert circle_cauchy(one, q, 0j, "inside") == pytest.approx(1, abs=1e-13)
    assert circle_cauchy(one, q, 2.0, "outside") == pytest.approx(0, abs=1e-13)
    # conj(s) = 1/s: residues at 0 and 0.3 cancel
    assert abs(circle_cauchy(np.conj(q.nodes), q, 0.3, "inside")) < 1e-10


def test_plemelj_jump():
    q = CircleQuadrature(0.2j, 1.5, 64)
    phi = np.exp(np.cos(q.angles)) + 1j * np.sin(3 * q.angles)
    inner = circle_cauchy(phi, q, None, "on_minus")
    outer = circle_cauchy(phi, q, None, "on_plus")
    assert np.abs(inner - outer - phi).max() < 1e-12


def test_spectral_derivatives():
    z = grid_points(2.0, 64)
    g = np.exp(-4 * np.abs(z) ** 2)
    f = ComplexGrid2D(2.0, 64, g)
    assert np.abs(dbar_spectral(f).values - (-4 * z * g)).max() < 1e-6
    assert np.abs(d_spectral(f).values - (-4 * np.conj(z) * g)).max() < 1e-6
    # dbar(e^{i kbar z/2} w) = e^{i kbar z/2} dbar w: the plane wave is holomorphic
    wave = np.exp(0.5j * (1 - 2j) * z)
    s = np.abs(z) ** 2 / 1.8 ** 2
    dbw = -12 * np.clip(1 - s, 0, None) ** 11 * z / 1.8 ** 2
    hol = ComplexGrid2D(2.0, 64, wave * bump(z, 1.8, 12))
    assert np.abs(dbar_spectral(hol).values - wave * dbw).max() < 1e-6


def test_spectral_vs_finite_differences():
    z = grid_points(2.0, 128)
    f = ComplexGrid2D(2.0, 128, np.exp(-3 * np.abs(z - 0.1) ** 2))
    err = np.abs(dbar_fd4(f.values, f.h) - dbar_spectral(f).values)[np.abs(z) < 1.5].max()
    assert err < 1e-4


def test_inverse_d_round_trip():
    z = grid_points(2.0, 64)
    u = bump(z, 1.2, 6) * (1 + z)
    du = d_spectral(ComplexGrid2D(2.0, 64, u)).values
    back = inverse_d_spectral(du, 2.0)
    assert np.abs(back - u).max() < 1e-8
    dbu = dbar_spectral(ComplexGrid2D(2.0, 64, u)).values
    assert np.abs(inverse_d_spectral(dbu, 2.0, bar=True) - u).max() < 1e-8
