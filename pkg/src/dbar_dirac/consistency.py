"""Self-consistency batteries: each suite returns rows of measured value vs tolerance."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .dbar import (DBAR_FACTOR, TzCache, build_W, dirac_green, green_difference_contour,
                   jump_from_W, solve_w)
from .field import CircleQuadrature, ComplexGrid2D, grid_points
from .forward import (PotentialField, ScatteringSolution, SpectralLayout, build_v, ls_residual,
                      min_singular_value, solve_mu, solve_mu_plus)
from .phantom import (DtNTraceSource, PolarDisc, gamma_to_Q, make_phantom,
                      faddeev_traces)
from .scattering import (ScatteringData, h_bd_volumetric, h_contour,
                         h_volumetric, offdiag, psi_on_circle)


@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3e} (tol {self.tol:.0e}) {self.detail}".rstrip()

    def to_dict(self):
        return asdict(self)


def _check(name, value, tol, detail="", t0=None, below=True):
    ok = bool(value < tol) if below else bool(value <= tol)
    return Check(name, float(value), float(tol), ok and np.isfinite(value), detail,
                 0.0 if t0 is None else time.time() - t0)


def reference_potential(n=64, half_width=2.0):
    g = make_phantom("bump")
    return g, gamma_to_Q(g, half_width, n)


def reference_layout(**kw):
    base = dict(A=3.0, k0=2.5 * np.exp(0.3j), R_max=15.0, R_rec=6.0, n_radial=32, n_theta=64, m=128)
    base.update(kw)
    return SpectralLayout(**base)


def _support_nodes(Q: PotentialField, rng, count, radius=0.7):
    idx = np.argwhere(np.abs(Q.z) < radius)
    return [tuple(idx[i]) for i in rng.choice(len(idx), count, replace=False)]


def dbar_k_fd(Q, k, iz, step=1e-4, plus_k0=None):
    """Central-difference ``d/d conj(k)`` of ``v(z_iz, k)``."""
    def v(kk):
        sol = solve_mu(Q, kk) if plus_k0 is None else solve_mu_plus(Q, kk, plus_k0)
        return build_v(sol).values[iz]
    dx = (v(k + step) - v(k - step)) / (2 * step)
    dy = (v(k + 1j * step) - v(k - 1j * step)) / (2 * step)
    return 0.5 * (dx + 1j * dy), v(k)


# ---------------------------------------------------------------------------
# suites

def suite_dbar_k(Q=None, samples=20, seed=0, tol=1e-3):
    """``dv/dkbar = 2 pi i exp(i Re(kb z)) conj(v) h^o(k, k)`` at random ``(z, k)``, ``|k| > A``."""
    t0 = time.time()
    Q = Q or reference_potential()[1]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for iz in _support_nodes(Q, rng, samples):
        k = rng.uniform(3.2, 8.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        fd, V = dbar_k_fd(Q, k, iz)
        H = offdiag(h_volumetric(Q, solve_mu(Q, k), k))
        rhs = DBAR_FACTOR * np.exp(1j * np.real(np.conj(k) * Q.z[iz])) * np.conj(V) @ H
        worst = max(worst, np.linalg.norm(fd - rhs) / np.linalg.norm(rhs))
    return [_check("dbar-k identity", worst, tol, f"{samples} samples", t0)]


def suite_holomorphy_plus(Q=None, layout=None, samples=10, seed=1, tol=1e-3):
    """``v+`` is holomorphic in ``k`` inside ``D``."""
    t0 = time.time()
    Q = Q or reference_potential()[1]
    L = layout or reference_layout()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for iz in _support_nodes(Q, rng, samples):
        k = rng.uniform(0.3, 0.9 * L.A) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        fd, V = dbar_k_fd(Q, k, iz, plus_k0=L.k0)
        worst = max(worst, np.linalg.norm(fd) / np.linalg.norm(V))
    return [_check("v+ holomorphic in D", worst, tol, f"{samples} stencils", t0)]


def suite_w_identity(layout=None, samples=10, seed=2, tol=1e-6):
    """``G(z,k) - G(z,k0)`` against the ``W`` contour integral, ``k`` on ``dD``."""
    t0 = time.time()
    L = layout or reference_layout()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        z = complex(*rng.uniform(-1, 1, 2))
        k = L.A * np.exp(1j * rng.uniform(0, 2 * np.pi))
        lhs = dirac_green(z, k) - dirac_green(z, L.k0)
        rhs = green_difference_contour(L, z, k)[0, 0]
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return [_check("W-kernel identity", worst, tol, f"m={L.m}", t0)]


def suite_jump(Q=None, layout=None, points=((74, 50), (60, 72), (66, 66)), tol=1e-3):
    """``psi - psi+`` on ``dD`` against the ``W h`` boundary integral.

    The forward solver is fourth order but not discretely exact for this identity,
    hence the 128^2 default grid.
    """
    t0 = time.time()
    Q = Q or reference_potential(n=128)[1]
    L = layout or reference_layout()
    bd = L.boundary.nodes
    sols = [solve_mu(Q, k) for k in bd]
    plus = [solve_mu_plus(Q, k, L.k0) for k in bd]
    hbd = h_bd_volumetric(Q, sols, bd)
    Wk = build_W(L)
    worst = 0.0
    for iz in points:
        psi = np.stack([s.psi.values[iz] for s in sols])
        pp = np.stack([s.psi.values[iz] for s in plus])
        J = jump_from_W(Wk, hbd, pp)
        worst = max(worst, np.linalg.norm(psi - pp - J) / np.linalg.norm(psi - pp))
    return [_check("jump representation", worst, tol, f"{len(points)} z", t0)]


def suite_h_two_path(Q=None, layout=None, tol=1e-5, m_outer=256):
    """Volumetric vs contour ``h`` at every exterior node (and the ``dD`` pairs)."""
    t0 = time.time()
    Q = Q or reference_potential()[1]
    L = layout or reference_layout()
    quad = CircleQuadrature(0j, 1.0, m_outer)
    worst, scale = 0.0, 0.0
    for k in L.exterior_nodes.ravel():
        sol = solve_mu(Q, k)
        hv = h_volumetric(Q, sol, k)
        hc = h_contour(psi_on_circle(Q, sol, quad, normalised=True), k, normalised=True)
        worst = max(worst, np.abs(offdiag(hv) - offdiag(hc)).max())
        scale = max(scale, np.abs(offdiag(hv)).max())
    return [_check("h two-path (entrywise / max|h|)", worst / scale, tol,
                   f"{L.exterior_nodes.size} nodes", t0)]


def suite_born(a=0.01, n=64, fine=256, tol=0.02, radii=(3.5, 5.0, 8.0), angles=8):
    """Small contrast: ``h^o`` against the Fourier integral of ``a Q`` (closed-form ``Q``, fine grid)."""
    t0 = time.time()
    g = make_phantom("bump")
    Q = gamma_to_Q(g, 2.0, n).scaled(a)
    zf = grid_points(2.0, fine)
    _, da, dba = g.log_gamma(zf)
    q12, q21 = -0.5 * a * da, np.conj(-0.5 * a * dba)
    hf = (4.0 / fine) ** 2
    worst = 0.0
    for r in radii:
        for t in 2 * np.pi * np.arange(angles) / angles:
            k = r * np.exp(1j * t)
            H = offdiag(h_volumetric(Q, solve_mu(Q, k), k))
            ph = np.exp(-1j * np.real(k * np.conj(zf))) * hf / (4 * np.pi ** 2)
            o12, o21 = np.sum(ph * q12), np.sum(ph * q21)
            err = max(abs(H[0, 1] - o12) / abs(o12), abs(H[1, 0] - o21) / abs(o21))
            worst = max(worst, err)
    return [_check("Born regime h vs Fourier oracle", worst, tol, f"a={a}", t0)]


def suite_psi_faddeev(gamma=None, ks=(3 + 1j, -2 + 4j), n=64, tol=1e-3):
    """Interior relation ``psi11 = gamma^1/2 d U1``, ``psi21 = conj(gamma^1/2) d conj(U1)``
    (and the ``U2`` column) from the D-t-N route vs the forward solver."""
    t0 = time.time()
    g = gamma or make_phantom("bump")
    Q = gamma_to_Q(g, 2.0, n)
    src = DtNTraceSource(g, N=40, m=256)
    disc = PolarDisc(g, 24, 128)
    sub = slice(None, None, 256 // 128)
    z = Q.z
    mask = np.abs(z) < 0.8
    zz = z[mask]
    sq = np.sqrt(g.gamma(zz))
    worst = 0.0
    for k in ks:
        ft = faddeev_traces(src.dtn, src.dtn_conj, k, src.quad, condition=False)
        psi_f = solve_mu(Q, k).psi.values[mask]
        for col, U in enumerate((ft.U1, ft.U2)):
            sol = disc.solve(U.values[sub])
            _, du, dbu = sol.evaluate(zz, derivative=True)
            top = sq * du
            bottom = np.conj(sq) * np.conj(dbu)   # d conj(U) = conj(dbar U)
            ref = np.stack([psi_f[:, 0, col], psi_f[:, 1, col]])
            got = np.stack([top, bottom])
            worst = max(worst, np.linalg.norm(got - ref) / np.linalg.norm(ref))
    return [_check("psi from Faddeev solutions (interior)", worst, tol, f"{len(ks)} k", t0)]


def suite_inverse_crime(n=128, layout=None, points=((74, 70), (80, 40), (64, 64)), tol=1e-3):
    """``w`` from the integral equation vs ``v' - I`` from the forward path."""
    t0 = time.time()
    g = make_phantom("bump")
    Q = gamma_to_Q(g, 2.0, n)
    L = layout or reference_layout(R_max=25.0, n_radial=40, n_theta=64)
    # one forward solve per node gives both the data and the reference v'
    ext = L.exterior_nodes
    h_diag = np.zeros(ext.shape + (2, 2), dtype=complex)
    vfw = np.zeros((len(points),) + ext.shape + (2, 2), dtype=complex)
    for idx in np.ndindex(ext.shape):
        sol = solve_mu(Q, ext[idx])
        h_diag[idx] = offdiag(h_volumetric(Q, sol, ext[idx]))
        v = build_v(sol).values
        for a, iz in enumerate(points):
            vfw[(a,) + idx] = v[iz]
    bd = L.boundary.nodes
    h_bd = h_bd_volumetric(Q, [solve_mu(Q, k) for k in bd], bd)
    cache = TzCache(ScatteringData(L, h_diag, h_bd))
    worst = 0.0
    for a, iz in enumerate(points):
        sol = solve_w(cache.operator(Q.z[iz]))
        ref = vfw[a] - np.eye(2)
        worst = max(worst, np.linalg.norm(sol.w_ext - ref) / np.linalg.norm(ref))
    return [_check("inverse crime w vs v'-I", worst, tol, f"n={n}, R_max={L.R_max}", t0)]


def recovered_psi_residual(Q: PotentialField, result, tol=1e-3):
    """Integral form of ``dbar psi = Q conj(psi)`` for the recovered ``psi`` at each
    reconstruction node ``k``: the Lippmann-Schwinger residual on the support."""
    t0 = time.time()
    worst = 0.0
    for j, k in enumerate(result.ks):
        mu = result.mu_k[:, :, j]
        inside = np.abs(Q.z) <= Q.support_radius
        if not np.all(np.isfinite(mu[inside])):
            return [Check("recovered psi equation residual", np.inf, tol, False,
                          "unsolved nodes on the support", time.time() - t0)]
        mu = np.where(np.isfinite(mu), mu, np.eye(2))
        sol = ScatteringSolution(complex(k), ComplexGrid2D(Q.half_width, Q.n, mu))
        worst = max(worst, ls_residual(Q, sol))
    return [_check("recovered psi equation residual", worst, tol, f"{len(result.ks)} k", t0)]


def boundary_spikes(values, ratio=10.0):
    """Scan cells whose log-value exceeds the mean of its 4 neighbours by ``log(ratio)``."""
    lv = np.log(np.asarray(values))
    pad = np.pad(lv, ((1, 1), (0, 0)), mode="edge")
    nb = 0.25 * (pad[:-2] + pad[2:] + np.roll(lv, 1, axis=1) + np.roll(lv, -1, axis=1))
    return {tuple(ix) for ix in np.argwhere(lv - nb > np.log(ratio))}


def suite_exceptional(gamma=None, radii=None, angles=24, n=64, ratio=10.0):
    """Condition spikes of the Dirac system and of ``I + S(Lg - L1)`` on a common polar scan."""
    t0 = time.time()
    g = gamma or make_phantom("high_contrast", c=(4.0, 1.4), centre=(0.1, 0.05), radius=0.8)
    Q = gamma_to_Q(g, 2.0, n)
    radii = np.linspace(0.5, 8.0, 16) if radii is None else np.asarray(radii)
    th = 2 * np.pi * np.arange(angles) / angles
    src = DtNTraceSource(g, N=32, m=128)
    dirac = np.zeros((radii.size, th.size))
    bnd = np.zeros_like(dirac)
    for i, r in enumerate(radii):
        for j, t in enumerate(th):
            k = r * np.exp(1j * t)
            dirac[i, j] = 1.0 / min_singular_value(Q, k)
            bnd[i, j] = src.boundary_condition(k)
    sd, sb = boundary_spikes(dirac, ratio), boundary_spikes(bnd, ratio)

    def near(a, b):
        return all(any(abs(p[0] - q[0]) <= 1 and min(abs(p[1] - q[1]), th.size - abs(p[1] - q[1])) <= 1
                       for q in b) for p in a)
    agree = near(sd, sb) and near(sb, sd)
    found = len(sd) + len(sb)
    detail = f"dirac spikes {sorted(sd)}, boundary spikes {sorted(sb)}"
    chk = Check("exceptional-set coincidence", float(found), 1.0, bool(agree and found > 0),
                detail + ("" if found else "; no exceptional point in the scanned window"),
                time.time() - t0)
    return [chk]


def suite_sweep(Q=None, probes=None, scales=None, layout=None, jump=1.0):
    """Solvability over ``a`` and probe points: isolated failures only, continuous conditioning."""
    from .dbar import homotopy_sweep
    t0 = time.time()
    Q = Q or reference_potential()[1]
    L = layout or SpectralLayout(A=3.0, k0=2.5 * np.exp(0.3j), R_max=10.0, R_rec=6.0,
                                 n_radial=16, n_theta=32, m=64)
    scales = np.round(np.arange(1, 11) / 10, 2) if scales is None else scales
    if probes is None:
        probes = [complex(x, y) for x in (-0.5, 0.0, 0.5) for y in (-0.5, 0.0, 0.5)]
    rep = homotopy_sweep(Q, scales, probes, L)
    iso = rep.isolated_failures_only()
    jmp = rep.max_relative_jump()
    return [Check("homotopy: isolated failures only", float((~rep.solvable).sum()), 0.0, iso,
                  f"{rep.solvable.size} cells", time.time() - t0),
            _check("homotopy: max |d log cond| between adjacent a", jmp, jump, "", None)], rep


SUITES = {
    "dbar-k": suite_dbar_k,
    "holomorphy": suite_holomorphy_plus,
    "w-identity": suite_w_identity,
    "jump": suite_jump,
    "h-two-path": suite_h_two_path,
    "born": suite_born,
    "psi-faddeev": suite_psi_faddeev,
    "inverse-crime": suite_inverse_crime,
    "exceptional": suite_exceptional,
}


def run_suite(name):
    if name == "sweep":
        return suite_sweep()[0]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['sweep']}")
    return SUITES[name]()
