import numpy as np
import pytest

from dbar_dirac.field import CircleQuadrature, grid_points
from dbar_dirac.io import load_dtn, save_dtn
from dbar_dirac.phantom import (PhantomError, PolarDisc, assemble_dtn, faddeev_green,
                                faddeev_traces, gamma_to_Q, make_phantom, psi_boundary,
                                single_layer_matrix, unit_dtn)


@pytest.fixture(scope="module")
def bump():
    return make_phantom("bump")


@pytest.fixture(scope="module")
def dtn(bump):
    return assemble_dtn(bump, N=16, n_r=24, n_theta=128)


def test_phantom_errors():
    with pytest.raises(PhantomError):
        make_phantom("nope")
    with pytest.raises(PhantomError):
        make_phantom("bump", alpha=1.2, beta=0.0)
    with pytest.raises(PhantomError):
        make_phantom("high_contrast", c=(1.0, 3.5))
    with pytest.raises(PhantomError):
        make_phantom("bump", radius=1.2)


def test_presets_build():
    for p in ("uniform", "bump", "c1glue", "high_contrast"):
        g = make_phantom(p)
        assert np.all(np.isfinite(g.gamma(grid_points(2.0, 16))))


def test_Q_spectral_vs_closed_form(bump):
    a = gamma_to_Q(bump, 2.0, 64)
    b = gamma_to_Q(bump, 2.0, 64, spectral=False)
    assert np.abs(a.Q12.values - b.Q12.values).max() < 1e-5
    assert np.abs(a.Q21.values - b.Q21.values).max() < 1e-5


def test_uniform_Q_vanishes():
    assert gamma_to_Q(make_phantom("uniform"), 2.0, 32).is_zero()


def test_pde_harmonic_interpolation():
    disc = PolarDisc(make_phantom("uniform"), 12, 32)
    sol = disc.solve(np.exp(3j * disc.theta))
    z = np.array([0.3 + 0.1j, -0.5j, 0.0])
    u, du, dbu = sol.evaluate(z, derivative=True)
    assert np.abs(u - z ** 3).max() < 1e-12
    assert np.abs(du - 3 * z ** 2).max() < 1e-11
    assert np.abs(dbu).max() < 1e-11


def test_uniform_dtn_is_abs_n():
    d = assemble_dtn(make_phantom("uniform"), N=8, n_r=12, n_theta=32)
    assert np.abs(d.matrix - unit_dtn(8).matrix).max() < 1e-10


def test_dtn_kills_constants_and_is_symmetric(dtn):
    assert dtn.constant_residual() < 1e-10
    # bilinear symmetry  \int f L g = \int g L f:  M[-n, m] = M[-m, n]
    M = dtn.matrix
    N = dtn.N
    sub = M[N - 8:N + 9, N - 8:N + 9]
    assert np.abs(sub[::-1] - sub[::-1].T).max() < 1e-8 * np.abs(sub).max()


def test_dtn_round_trip(tmp_path, dtn):
    back = load_dtn(save_dtn(tmp_path / "d.npz", dtn))
    assert np.array_equal(back.matrix, dtn.matrix) and back.N == dtn.N


def test_faddeev_green_harmonic_and_log():
    k = 1.3 - 0.4j
    z0, e = 0.4 + 0.3j, 1e-3
    lap = (faddeev_green(k, z0 + e) + faddeev_green(k, z0 - e) + faddeev_green(k, z0 + 1j * e)
           + faddeev_green(k, z0 - 1j * e) - 4 * faddeev_green(k, z0)) / e ** 2
    assert abs(lap) < 1e-4
    r = 1e-6
    smooth = faddeev_green(k, r) + np.log(r) / (2 * np.pi)
    assert smooth == pytest.approx((-np.euler_gamma - np.log(abs(k))) / (2 * np.pi), abs=1e-5)


def test_single_layer_vs_brute_force():
    # off-node target: plain trapezoid on a fine circle is accurate there
    q = CircleQuadrature(0j, 1.0, 64)
    S = single_layer_matrix(1.3 + 0.2j, q)
    f = np.cos(3 * q.angles) + 0.5j * np.sin(q.angles)
    fine = CircleQuadrature(0j, 1.0, 4096)
    ff = np.cos(3 * fine.angles) + 0.5j * np.sin(fine.angles)
    x = q.nodes[5]
    d = x - fine.nodes
    d[5 * 64] = np.nan  # drop the coincident node; log singularity is integrable
    brute = np.nansum(faddeev_green(1.3 + 0.2j, d) * ff) * 2 * np.pi / fine.m
    assert abs((S @ f)[5] - brute) < 2e-3


def test_uniform_traces_give_plane_wave():
    q = CircleQuadrature(0j, 1.0, 64)
    one = unit_dtn(16)
    k = 2.0 + 1.0j
    ft = faddeev_traces(one, one, k, q)
    psi = psi_boundary(ft.U1, ft.U2, one).values
    ref = np.exp(0.5j * np.conj(k) * q.nodes)[:, None, None] * np.eye(2)
    assert np.abs(psi - ref).max() < 1e-12
