import numpy as np
import pytest

from dbar_dirac.dbar import (DBAR_FACTOR, TzCache, build_W, condition_estimate, dirac_green,
                             green_difference_contour, mu_from_v, op_A, op_A_star, reconstruct,
                             reconstruct_gamma, reconstruct_Q, recover_psi, solve_w)
from dbar_dirac.forward import PotentialField, SpectralLayout, solve_mu, v_from_mu
from dbar_dirac.phantom import gamma_to_Q, make_phantom
from dbar_dirac.scattering import ScatteringData

SMALL = SpectralLayout(A=3.0, k0=2.0 + 1.0j, R_max=8.0, R_rec=5.0, n_radial=8, n_theta=16, m=32)


@pytest.fixture(scope="module")
def bump():
    g = make_phantom("bump")
    return g, gamma_to_Q(g, 2.0, 64)


def test_factor_value():
    assert DBAR_FACTOR == pytest.approx(2j * np.pi)


def test_A_star_inverts_A():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
    k = np.full(5, 3.0 - 2.0j)
    z = 0.3 + 0.4j
    assert np.allclose(op_A_star(k, z, op_A(k, z, X)), X)


def test_v_mu_round_trip():
    rng = np.random.default_rng(2)
    mu = rng.standard_normal((7, 2, 2)) + 1j * rng.standard_normal((7, 2, 2))
    k, z = 4.0 + 1.0j, -0.2 + 0.5j
    assert np.allclose(mu_from_v(v_from_mu(mu, k, z), k, z), mu)


def test_recover_psi_from_forward(bump):
    _, Q = bump
    k = 5.0 - 2.0j
    sol = solve_mu(Q, k)
    z = Q.z[20:24, 30]
    v = v_from_mu(sol.mu.values[20:24, 30], k, z)
    assert np.allclose(recover_psi(v, k, z), sol.psi.values[20:24, 30], rtol=1e-12, atol=1e-14)


def test_green_difference_contour():
    # G(z,k) - G(z,k0) from the W contour integral, k on dD (including a node)
    L = SpectralLayout(A=3.0, k0=2.0 + 1.0j, R_max=8.0, R_rec=5.0, n_radial=8, n_theta=16, m=128)
    for z, t in ((0.3 + 0.2j, 0.7), (-0.5j, 2.9), (0.1, 2 * np.pi * 5 / L.m)):
        k = L.A * np.exp(1j * t)
        lhs = dirac_green(z, k) - dirac_green(z, L.k0)
        rhs = green_difference_contour(L, z, k)[0, 0]
        assert abs(lhs - rhs) < 1e-8 * abs(lhs)


def test_zero_data_gives_identity():
    cache = TzCache(ScatteringData.zero(SMALL), build_W(SMALL))
    sol = solve_w(cache.operator(0.2 + 0.1j))
    assert sol.converged and not np.any(sol.w_ext) and not np.any(sol.w_bd)


def test_reconstruct_zero_data():
    res = reconstruct(ScatteringData.zero(SMALL), 2.0, 32, radius=1.0, n_k=4)
    assert np.abs(res.gamma_hat.values - 1).max() < 1e-12
    assert res.failures == 0 and res.Q_hat.is_zero()


def test_Q_from_exact_mu(bump):
    g, Q = bump
    ks = 6 * np.exp(2j * np.pi * np.arange(4) / 4)
    mu = np.stack([solve_mu(Q, k).mu.values for k in ks], axis=2)
    q12, q21, diag = reconstruct_Q(mu, ks, 2.0)
    m = np.abs(Q.z) <= 1
    for a, b in ((q12, Q.Q12.values), (q21, Q.Q21.values)):
        assert np.linalg.norm((a - b)[m]) / np.linalg.norm(b[m]) < 0.05
    assert diag < 1e-2


def test_gamma_from_Q(bump):
    g, Q = bump
    gh, disc = reconstruct_gamma(Q)
    assert disc < 1e-6
    assert np.abs(gh.values - g.gamma(Q.z)).max() < 1e-6


def test_condition_of_identity_operator():
    cache = TzCache(ScatteringData.zero(SMALL), build_W(SMALL))
    assert condition_estimate(cache.operator(0.1j)) == pytest.approx(1.0, rel=1e-8)


def test_zero_potential_field_is_zero():
    assert PotentialField.zero(2.0, 32, 0.8).is_zero()
