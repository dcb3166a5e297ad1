import numpy as np
import pytest

from dbar_dirac.forward import PotentialField, SpectralLayout, solve_mu
from dbar_dirac.io import ContainerError, load_container, load_scattering, save_scattering
from dbar_dirac.phantom import gamma_to_Q, make_phantom
from dbar_dirac.scattering import (ScatteringData, assemble_scattering, h_volumetric, offdiag,
                                   truncate)

SMALL = SpectralLayout(A=3.0, k0=2.0 + 1.0j, R_max=8.0, R_rec=5.0, n_radial=8, n_theta=8, m=16)


@pytest.fixture(scope="module")
def data():
    Q = gamma_to_Q(make_phantom("bump"), 2.0, 32)
    return assemble_scattering(Q, SMALL)


def test_zero_potential_zero_data():
    d = assemble_scattering(PotentialField.zero(2.0, 32, 0.8), SMALL)
    assert d.is_zero()


def test_shapes_and_offdiag(data):
    assert data.h_diag.shape == SMALL.exterior_nodes.shape + (2, 2)
    assert data.h_bd.shape == (SMALL.m, SMALL.m, 2, 2)
    assert not np.any(data.h_diag[..., 0, 0]) and not np.any(data.h_diag[..., 1, 1])


def test_projection_idempotent():
    M = np.arange(8, dtype=complex).reshape(2, 2, 2)
    assert np.array_equal(offdiag(offdiag(M)), offdiag(M))


def test_truncate(data):
    assert np.array_equal(truncate(data, 100.0).h_diag, data.h_diag)
    t = truncate(data, 2.0)
    assert not np.any(t.h_diag) and t.truncation_radius == 2.0
    mid = truncate(data, 5.0)
    outside = SMALL.exterior.radii > 5.0
    assert not np.any(mid.h_diag[outside]) and np.array_equal(mid.h_diag[~outside],
                                                              data.h_diag[~outside])


def test_container_round_trip(tmp_path, data):
    p = save_scattering(tmp_path / "h.npz", data)
    back = load_scattering(p)
    assert back.layout == data.layout
    assert np.array_equal(back.h_diag, data.h_diag) and np.array_equal(back.h_bd, data.h_bd)
    with pytest.raises(ContainerError):
        load_container(p, kind="dtn")


def test_born_slope():
    Q = gamma_to_Q(make_phantom("bump"), 2.0, 32)
    k = 4.0 + 1.0j
    h1 = h_volumetric(Q.scaled(0.01), solve_mu(Q.scaled(0.01), k), k)
    h2 = h_volumetric(Q.scaled(0.02), solve_mu(Q.scaled(0.02), k), k)
    ratio = np.abs(h2[0, 1]) / np.abs(h1[0, 1])
    assert ratio == pytest.approx(2.0, rel=0.01)


def test_zero_layout_data():
    z = ScatteringData.zero(SMALL)
    assert z.is_zero() and z.radial_profile().shape == (SMALL.n_radial,)
