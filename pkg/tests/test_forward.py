import numpy as np
import pytest

from dbar_dirac.field import GridError
from dbar_dirac.forward import (LayoutError, PotentialField, SpectralLayout, build_v, certify_k0,
                                ls_residual, min_singular_value, scan_exceptional, solve_mu,
                                solve_mu_plus, v_from_mu)
from dbar_dirac.phantom import gamma_to_Q, make_phantom


@pytest.fixture(scope="module")
def Q():
    return gamma_to_Q(make_phantom("bump"), 2.0, 32)


def test_zero_potential_gives_identity():
    Z = PotentialField.zero(2.0, 32, 0.8)
    for k in (0.5, 3 - 4j):
        sol = solve_mu(Z, k)
        assert np.array_equal(sol.mu.values, np.broadcast_to(np.eye(2), sol.mu.values.shape))


def test_potential_support_enforced():
    z = np.zeros((32, 32), complex)
    z[0, 0] = 1
    from dbar_dirac.field import ComplexGrid2D
    with pytest.raises(GridError):
        PotentialField(ComplexGrid2D(2.0, 32, z), ComplexGrid2D(2.0, 32, z), 0.8)


def test_plug_back_residual(Q):
    for k in (1 + 1j, -4 + 2j):
        sol = solve_mu(Q, k)
        assert ls_residual(Q, sol) < 1e-10


def test_born_linearity(Q):
    # (mu(aQ) - I)/a is linear in a up to O(a)
    k = 2 - 1j
    d1 = (solve_mu(Q.scaled(1e-3), k).mu.values - np.eye(2)) / 1e-3
    d2 = (solve_mu(Q.scaled(2e-3), k).mu.values - np.eye(2)) / 2e-3
    rel = np.abs(d1 - d2).max() / np.abs(d1).max()
    assert rel < 5e-3


def test_plus_at_base_point_is_standard(Q):
    k0 = 1.5 + 0.5j
    a = solve_mu(Q, k0).mu.values
    b = solve_mu_plus(Q, k0, k0).mu.values
    assert np.abs(a - b).max() < 1e-10


def test_plus_residual(Q):
    sol = solve_mu_plus(Q, 2 + 2j, 1.0 + 0.5j)
    assert ls_residual(Q, sol) < 1e-10


def test_v_structure(Q):
    sol = solve_mu(Q, 3 + 1j)
    v = build_v(sol).values
    mu = sol.mu.values
    assert np.array_equal(v[..., 0, 0], np.conj(mu[..., 0, 0]))
    assert np.allclose(v, v_from_mu(mu, sol.k, sol.mu.z))


def test_layout_invariants():
    with pytest.raises(LayoutError):
        SpectralLayout(A=3.0, k0=3.5, R_max=10, R_rec=5)
    with pytest.raises(LayoutError):
        SpectralLayout(A=3.0, k0=1.0, R_max=10, R_rec=2)
    with pytest.raises(LayoutError):
        SpectralLayout(A=3.0, k0=1.0, R_max=10, R_rec=5, n_radial=12, per_panel=8)
    L = SpectralLayout(A=3.0, k0=1.0 + 1j, R_max=10, R_rec=5)
    assert SpectralLayout.from_dict(L.to_dict()) == L
    assert np.all(np.abs(L.exterior_nodes) > L.A)
    assert np.allclose(np.abs(L.boundary.nodes), L.A)


def test_scan_and_k0(Q):
    rep = scan_exceptional(Q, [1.0, 2.0], np.linspace(0, 2 * np.pi, 4, endpoint=False))
    assert rep.sigma.shape == (1, 2, 4)
    assert not rep.flagged and rep.recommended_A == 0.0
    k0, s = certify_k0(Q, 3.0, candidates=4)
    assert 2.0 < abs(k0) < 3.0 and s > 1e-3


def test_Q_and_minus_Q_share_conditioning(Q):
    k = 1.2 - 0.7j
    assert min_singular_value(Q, k) == pytest.approx(min_singular_value(Q.scaled(-1.0), k),
                                                      rel=1e-10)
