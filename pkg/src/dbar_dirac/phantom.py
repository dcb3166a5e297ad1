"""Synthetic conductivities, D-t-N maps and Faddeev boundary traces.

``O`` is the unit disc.  Conductivities are ``gamma = exp(a)`` with an explicit
log-profile ``a`` (for the additive presets ``a = log(1 + c b)``), so the
branch of ``log gamma`` is fixed by construction and derivatives are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import exp1

from .field import CircleQuadrature, ComplexGrid2D, d_spectral, dbar_spectral, grid_points
from .forward import PotentialField


class PhantomError(ValueError):
    pass


# ---------------------------------------------------------------------------
# radial profiles: value, d/d(rho^2)

def _poly_bump(p, R):
    def f(s):  # s = rho^2
        t = np.clip(1.0 - s / R ** 2, 0.0, None)
        return t ** p, -p * t ** (p - 1) / R ** 2
    return f


def _glue(R):
    # (1 - rho^2/R^2)^2 on rho < R: C^1 at rho = R, second derivative jumps
    return _poly_bump(2, R)


@dataclass(frozen=True)
class Conductivity:
    """``gamma = 1 + c b(|z - centre|)`` (``kind="additive"``) or ``exp(c b)``."""

    preset: str
    c: complex
    centre: complex
    radius: float
    power: int
    kind: str = "additive"
    smoothness: str = "smooth"
    params: dict = field(default_factory=dict, compare=False)

    def _profile(self):
        return _glue(self.radius) if self.smoothness == "C1" else _poly_bump(self.power, self.radius)

    def bump(self, z):
        w = np.asarray(z) - self.centre
        b, db = self._profile()(np.abs(w) ** 2)
        # d b = db * conj(w), dbar b = db * w  (b real)
        return b, db * np.conj(w), db * w

    def log_gamma(self, z):
        """``(log gamma, d log gamma, dbar log gamma)`` at points ``z``."""
        b, db, dbb = self.bump(z)
        if self.kind == "exp":
            return self.c * b, self.c * db, self.c * dbb
        g = 1.0 + self.c * b
        return np.log(g), self.c * db / g, self.c * dbb / g

    def gamma(self, z):
        return np.exp(self.log_gamma(z)[0])

    @property
    def support_radius(self):
        return abs(self.centre) + self.radius

    @property
    def contrast(self):
        """``sup |gamma - 1|``, attained at the bump centre."""
        return float(abs(self.gamma(self.centre) - 1.0))

    def on_grid(self, half_width, n) -> ComplexGrid2D:
        return ComplexGrid2D(half_width, n, self.gamma(grid_points(half_width, n)),
                             self.support_radius)

    def ray_distance(self, half_width=2.0, n=256):
        """Distance from the sampled values of gamma to the negative real ray."""
        g = self.gamma(grid_points(half_width, n)).ravel()
        d = np.where(g.real <= 0, np.abs(g.imag), np.abs(g))
        return float(d.min())

    def conj(self):
        """The conductivity ``conj(gamma)``."""
        return Conductivity(self.preset + "*", np.conj(self.c), self.centre, self.radius,
                            self.power, self.kind, self.smoothness, self.params)

    def to_dict(self):
        return {"preset": self.preset, "c": [self.c.real, self.c.imag],
                "centre": [self.centre.real, self.centre.imag], "radius": self.radius,
                "power": self.power, "kind": self.kind, "smoothness": self.smoothness}


PRESETS = ("uniform", "bump", "c1glue", "high_contrast")


def make_phantom(preset="bump", alpha=0.3, beta=0.2, centre=(0.1, 0.05), radius=0.8,
                 power=8, c=None) -> Conductivity:
    """Synthetic conductivity.

    * ``uniform``: gamma = 1.
    * ``bump``: gamma = 1 + (alpha + i beta) (1 - |z-c|^2/R^2)_+^power.
    * ``c1glue``: radial gamma = 1 + (alpha + i beta) (1 - |z|^2/R^2)_+^2, which is
      C^1 across ``|z| = R`` but has a jump in the second derivative.
    * ``high_contrast``: gamma = exp(c b) with complex ``c`` (``|Im c| < pi``).
    """
    ctr = complex(*centre) if not isinstance(centre, complex) else centre
    if preset == "uniform":
        cond = Conductivity("uniform", 0j, 0j, radius, power)
    elif preset == "bump":
        cond = Conductivity("bump", complex(alpha, beta), ctr, radius, power)
    elif preset == "c1glue":
        cond = Conductivity("c1glue", complex(alpha, beta), 0j, radius, 2, smoothness="C1")
    elif preset == "high_contrast":
        cc = complex(*c) if isinstance(c, (list, tuple)) else complex(c if c is not None else 3.0)
        if abs(cc.imag) >= np.pi:
            raise PhantomError("|Im c| must stay below pi for a single-valued log")
        cond = Conductivity("high_contrast", cc, ctr, radius, power, kind="exp")
    else:
        raise PhantomError(f"unknown preset {preset!r}; choose from {PRESETS}")
    if cond.support_radius >= 1.0:
        raise PhantomError("phantom support must lie inside the unit disc")
    if cond.kind == "additive" and abs(cond.c) >= 1.0:
        raise PhantomError("additive contrast must be below 1 so gamma avoids the negative ray")
    if cond.preset != "uniform" and cond.ray_distance() <= 0:
        raise PhantomError("gamma touches the excluded ray")
    return cond


def gamma_to_Q(gamma: Conductivity, half_width=2.0, n=64, spectral=True) -> PotentialField:
    """``Q12 = -d(log gamma)/2`` and ``Q21 = conj(-dbar(log gamma)/2)``.

    With ``spectral=True`` the derivatives are spectral derivatives of the
    sampled ``log gamma``; otherwise the closed-form derivatives are used.
    """
    z = grid_points(half_width, n)
    a, da, dba = gamma.log_gamma(z)
    if spectral:
        g = ComplexGrid2D(half_width, n, a)
        da = d_spectral(g).values
        dba = dbar_spectral(g).values
    r = gamma.support_radius
    return PotentialField.from_arrays(-0.5 * da, np.conj(-0.5 * dba), half_width, r,
                                      source_gamma=gamma)


@dataclass(frozen=True)
class BoundaryTrace:
    """Matrix (or scalar) samples on the ``dO`` quadrature nodes at spectral parameter ``k``."""

    values: np.ndarray
    quad: CircleQuadrature
    k: complex

    def __post_init__(self):
        if np.shape(self.values)[0] != self.quad.m:
            raise PhantomError("trace node count does not match the boundary quadrature")


# ---------------------------------------------------------------------------
# conductivity equation on the unit disc: Chebyshev (diameter) x Fourier collocation

def _cheb(N):
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.r_[2.0, np.ones(N - 1), 2.0] * (-1.0) ** np.arange(N + 1)
    dX = x[:, None] - x[None, :]
    D = np.outer(c, 1 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def _fourier_diff(M):
    n = np.fft.fftfreq(M, 1.0 / M)
    n1 = np.where(np.abs(n) == M // 2, 0, n)
    F = np.fft.fft(np.eye(M), axis=0)
    D1 = np.fft.ifft(1j * n1[:, None] * F, axis=0).real
    D2 = np.fft.ifft(-(n[:, None] ** 2) * F, axis=0).real
    return D1, D2


@dataclass
class PDESolution:
    """Interior field on the polar collocation nodes plus the boundary flux ``gamma du/dr``."""

    disc: "PolarDisc"
    u: np.ndarray       # (n_r, n_theta, ...) interior values
    dirichlet: np.ndarray
    flux: np.ndarray
    residual: float

    def on_diameter(self):
        """Values on the full Chebyshev diameter grid, shape ``(N+1, n_theta/2, ...)``."""
        d = self.disc
        h = d.n_theta // 2
        full = np.concatenate([self.dirichlet[None], self.u,
                               np.roll(self.u, -h, axis=1)[::-1],
                               np.roll(self.dirichlet, -h, axis=0)[None]], axis=0)
        return full[:, :h]

    def evaluate(self, z, derivative=False):
        """Spectral interpolation of ``u`` (and ``(du, dbar u)``) at points ``z`` inside the disc."""
        d = self.disc
        z = np.asarray(z, dtype=complex)
        rho, phi = np.abs(z).ravel(), np.angle(z).ravel()
        full = np.concatenate([self.dirichlet[None], self.u], axis=0)  # r = 1, interior radii
        c = np.fft.fft(full, axis=1) / d.n_theta                       # (1 + n_r, M, ...)
        n = np.fft.fftfreq(d.n_theta, 1.0 / d.n_theta)
        sign = ((-1.0) ** n)[None, :] if c.ndim == 2 else ((-1.0) ** n)[None, :, None]
        # coefficients on the whole diameter: c_n(-r) = (-1)^n c_n(r); nodes 1, r, -r, -1
        cf = np.concatenate([c, (sign * c)[::-1]], axis=0)
        x = np.r_[1.0, d.r, -d.r[::-1], -1.0]
        L = _bary_matrix(x, rho)
        cr = np.tensordot(L, cf, axes=(1, 0))
        ph = np.exp(1j * np.outer(phi, n))
        u = np.einsum("pn,pn...->p...", ph, cr)
        if not derivative:
            return u.reshape(z.shape + u.shape[1:])
        Dx = _cheb_nodes_diff(x)
        cr_r = np.tensordot(L @ Dx, cf, axes=(1, 0))
        ur = np.einsum("pn,pn...->p...", ph, cr_r)
        ut = np.einsum("pn,pn...->p...", ph * (1j * n)[None, :], cr)
        e = np.exp(-1j * phi)
        rr = np.where(rho > 0, rho, 1.0)
        ex = (e,) if u.ndim == 1 else (e[:, None],)
        rr = rr if u.ndim == 1 else rr[:, None]
        du = 0.5 * ex[0] * (ur - 1j * ut / rr)
        dbu = 0.5 * np.conj(ex[0]) * (ur + 1j * ut / rr)
        at0 = rho == 0
        if at0.any():
            # polar form degenerates at the centre: take u_x, u_y along two diameters
            ux = cr_r[at0].sum(axis=1)
            uy = np.einsum("n,pn...->p...", np.exp(0.5j * np.pi * n), cr_r[at0])
            du[at0] = 0.5 * (ux - 1j * uy)
            dbu[at0] = 0.5 * (ux + 1j * uy)
        shp = z.shape + u.shape[1:]
        return u.reshape(shp), du.reshape(shp), dbu.reshape(shp)


def _bary_matrix(x, t):
    """Barycentric interpolation matrix from Chebyshev-type nodes ``x`` to points ``t``."""
    w = 1.0 / np.prod(x[:, None] - x[None, :] + np.eye(x.size), axis=1)
    d = t[:, None] - x[None, :]
    hit = np.isclose(d, 0.0, atol=1e-14)
    d = np.where(hit, 1.0, d)
    L = (w / d)
    L /= L.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    L[rows] = hit[rows].astype(float)
    return L


def _cheb_nodes_diff(x):
    w = 1.0 / np.prod(x[:, None] - x[None, :] + np.eye(x.size), axis=1)
    dX = x[:, None] - x[None, :] + np.eye(x.size)
    D = (w[None, :] / w[:, None]) / dX
    np.fill_diagonal(D, 0.0)
    D -= np.diag(D.sum(axis=1))
    return D


class PolarDisc:
    """Collocation for ``div(gamma grad u) = 0`` on the unit disc.

    Radial direction uses Chebyshev points on the whole diameter ``[-1, 1]``
    (odd ``N``, so the origin is not a node) with ``u(-r, t) = u(r, t + pi)``;
    the angle is Fourier.  Written as ``lap u + grad(log gamma).grad u = 0``.
    """

    def __init__(self, gamma: Conductivity, n_r=24, n_theta=128):
        if n_theta % 2:
            raise PhantomError("n_theta must be even")
        self.gamma = gamma
        self.n_r, self.n_theta = n_r, n_theta
        N = self.N = 2 * n_r + 1
        D, x = _cheb(N)
        D2 = D @ D
        self.r = x[1:n_r + 1]
        self.theta = 2 * np.pi * np.arange(n_theta) / n_theta
        inner = slice(1, n_r + 1)
        mirror = np.arange(N - 1, n_r, -1)
        M = n_theta
        P = np.roll(np.eye(M), M // 2, axis=1)
        I = np.eye(M)
        Dt1, Dt2 = _fourier_diff(M)
        R, TH = np.meshgrid(self.r, self.theta, indexing="ij")
        zz = R * np.exp(1j * TH)
        _, da, dba = gamma.log_gamma(zz)
        e = np.exp(1j * TH)
        a_r = (da * e + dba * np.conj(e)).ravel()
        a_t = (1j * R * (da * e - dba * np.conj(e))).ravel()
        rinv = np.repeat(1.0 / self.r, M)
        Dr = np.kron(D[inner, inner], I) + np.kron(D[inner][:, mirror], P)
        Drr = np.kron(D2[inner, inner], I) + np.kron(D2[inner][:, mirror], P)
        Dtt = np.kron(np.eye(n_r), Dt2)
        Dt = np.kron(np.eye(n_r), Dt1)
        A = Drr + ((rinv + a_r)[:, None] * Dr) + (rinv ** 2)[:, None] * Dtt \
            + (a_t * rinv ** 2)[:, None] * Dt
        self._A = A
        self._lu = lu_factor(A)
        # boundary couplings: x = 1 (angle t) and x = -1 (angle t + pi)
        c0 = D2[inner, 0][:, None] + (1.0 / self.r[:, None] + a_r.reshape(n_r, M)) * D[inner, 0][:, None]
        cN = D2[inner, N][:, None] + (1.0 / self.r[:, None] + a_r.reshape(n_r, M)) * D[inner, N][:, None]
        self._c0, self._cN = c0, cN
        self._d0 = D[0, inner], D[0][mirror], D[0, 0], D[0, N]
        self._P = P
        self.gamma_boundary = gamma.gamma(np.exp(1j * self.theta))

    def solve(self, dirichlet) -> PDESolution:
        """``dirichlet`` has shape ``(n_theta,)`` or ``(n_theta, k)``."""
        g = np.asarray(dirichlet, dtype=complex)
        M, n_r = self.n_theta, self.n_r
        gs = np.roll(g, -M // 2, axis=0)
        extra = g.shape[1:]
        rhs = -(self._c0.reshape(n_r, M, *([1] * len(extra))) * g[None]
                + self._cN.reshape(n_r, M, *([1] * len(extra))) * gs[None])
        rhs = rhs.reshape(n_r * M, -1)
        U = lu_solve(self._lu, rhs)
        res = float(np.abs(self._A @ U - rhs).max() / max(np.abs(rhs).max(), 1e-300))
        U = U.reshape((n_r, M) + extra)
        a, b, c0, cN = self._d0
        Us = np.roll(U, -M // 2, axis=1)
        ur = np.tensordot(a, U, axes=(0, 0)) + np.tensordot(b, Us, axes=(0, 0)) + c0 * g + cN * gs
        gb = self.gamma_boundary.reshape((M,) + (1,) * len(extra))
        return PDESolution(self, U, g, gb * ur, res)


def solve_conductivity_pde(gamma: Conductivity, dirichlet, n_r=24, n_theta=128) -> PDESolution:
    """Solve ``div(gamma grad u) = 0`` in the unit disc with ``u = dirichlet`` on the circle.

    ``dirichlet`` is a callable of the angle or an array of samples at
    ``theta_l = 2 pi l / n_theta``.
    """
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    g = dirichlet(th) if callable(dirichlet) else np.asarray(dirichlet)
    if np.any(np.real(gamma.gamma(0.9 * np.exp(1j * th))) <= 0):
        raise PhantomError("Re gamma must stay positive")
    return PolarDisc(gamma, n_r, n_theta).solve(g)


# ---------------------------------------------------------------------------
# D-t-N map in the basis exp(i n theta), |n| <= N

@dataclass(frozen=True)
class DtNMap:
    matrix: np.ndarray
    N: int
    label: str = ""
    residual: float = 0.0

    @property
    def modes(self):
        return np.arange(-self.N, self.N + 1)

    def apply(self, coeffs):
        """Flux coefficients for Dirichlet coefficients ordered ``n = -N..N``."""
        return self.matrix @ coeffs

    def constant_residual(self):
        return float(np.abs(self.matrix[:, self.N]).max())

    def apply_trace(self, values):
        """``Lambda f`` on equispaced circle samples: exact ``|n|`` multiplier plus the
        band-limited correction ``Lambda - Lambda_1`` on the first ``N`` modes."""
        values = np.asarray(values)
        m = values.shape[0]
        c = np.fft.fft(values, axis=0) / m
        n = np.fft.fftfreq(m, 1.0 / m)
        out = np.abs(n).reshape((m,) + (1,) * (values.ndim - 1)) * c
        idx = self.modes % m
        delta = self.matrix - np.diag(np.abs(self.modes).astype(float))
        out[idx] += np.tensordot(delta, c[idx], axes=(1, 0))
        return np.fft.ifft(out, axis=0) * m

    def to_dict(self):
        return {"N": self.N, "label": self.label, "residual": self.residual}


def assemble_dtn(gamma: Conductivity, N=32, n_r=24, n_theta=128, label=None) -> DtNMap:
    """Columns are the boundary fluxes of ``exp(i n theta)`` data, projected on the basis."""
    if 2 * N + 1 > n_theta:
        raise PhantomError("need n_theta > 2N + 1 to resolve the basis")
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    modes = np.arange(-N, N + 1)
    disc = PolarDisc(gamma, n_r, n_theta)
    sol = disc.solve(np.exp(1j * np.outer(th, modes)))
    c = np.fft.fft(sol.flux, axis=0) / n_theta
    return DtNMap(c[modes % n_theta], N, label or gamma.preset, sol.residual)


def unit_dtn(N=32) -> DtNMap:
    """``Lambda_1 = diag(|n|)``."""
    return DtNMap(np.diag(np.abs(np.arange(-N, N + 1)).astype(complex)), N, "uniform")


# ---------------------------------------------------------------------------
# zero-energy Faddeev Green function and single layer

K_MIN = 1e-6


def faddeev_green(k, z):
    """``G_k(z) = Re E1(-i k z) / (2 pi)``: closed form of the Fourier integral with
    prefactor ``exp(i k z)``; satisfies ``-lap G_k = delta``."""
    k = complex(k)
    if abs(k) < K_MIN:
        raise PhantomError("Faddeev Green function needs |k| > 0")
    z = np.asarray(z, dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(z == 0, np.nan, np.real(exp1(-1j * k * z)) / (2 * np.pi))


def faddeev_green_zero(k, half_width=2.0, n=64) -> ComplexGrid2D:
    """``G_k`` on the z-grid (``nan`` at the origin)."""
    return ComplexGrid2D(half_width, n, faddeev_green(k, grid_points(half_width, n)))


def _green_smooth(k, d):
    """``G_k(d) + log|d| / (2 pi)`` with its limit at ``d = 0``."""
    lim = (-np.euler_gamma - np.log(abs(k))) / (2 * np.pi)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = faddeev_green(k, d) + np.log(np.abs(d)) / (2 * np.pi)
    return np.where(d == 0, lim, val)


def single_layer_matrix(k, quad: CircleQuadrature):
    """``S_k`` on circle samples: log part exactly in Fourier, smooth part by the trapezoid rule."""
    m, r = quad.m, quad.radius
    n = np.fft.fftfreq(m, 1.0 / m)
    # -(1/2 pi) \int log|z - z'| e^{i n t'} r dt' = r/(2|n|) e^{i n t}, and -r log r for n = 0
    mult = np.where(n == 0, -r * np.log(r), r / (2 * np.maximum(np.abs(n), 1)))
    F = np.fft.fft(np.eye(m), axis=0)
    S_log = np.fft.ifft(mult[:, None] * F, axis=0)
    x = quad.nodes
    S_smooth = _green_smooth(k, x[:, None] - x[None, :]) * (2 * np.pi * r / m)
    return S_log + S_smooth


def single_layer(k, sigma, quad: CircleQuadrature):
    return single_layer_matrix(k, quad) @ np.asarray(sigma)


# ---------------------------------------------------------------------------
# Faddeev traces and Dirichlet data of psi

@dataclass(frozen=True)
class FaddeevTraces:
    U1: BoundaryTrace
    U2: BoundaryTrace
    condition: float


def _delta_nodes(dtn: DtNMap, quad: CircleQuadrature):
    """``Lambda - Lambda_1`` acting on circle samples."""
    m = quad.m
    delta = dtn.matrix - np.diag(np.abs(dtn.modes).astype(complex))
    Fw = np.exp(-1j * np.outer(dtn.modes, quad.angles)) / m
    Bk = np.exp(1j * np.outer(quad.angles, dtn.modes))
    return Bk @ delta @ Fw


def _boundary_solve(dtn: DtNMap, k, quad, condition=True, S=None, delta=None):
    kap = np.conj(k) / 2
    S = single_layer_matrix(kap, quad) if S is None else S
    delta = _delta_nodes(dtn, quad) if delta is None else delta
    B = np.eye(quad.m) + S @ delta
    u = np.linalg.solve(B, np.exp(1j * quad.nodes * kap))
    return (2 / (1j * np.conj(k))) * u, (np.linalg.cond(B) if condition else np.nan)


def faddeev_traces(dtn: DtNMap, dtn_conj: DtNMap, k, quad: CircleQuadrature,
                   condition=True, _cache=None) -> FaddeevTraces:
    """``U1 = (2/(i kb)) (I + S_{kb/2}(Lg - L1))^-1 exp(i z kb/2)``; ``U2`` is the same with
    the map of ``conj(gamma)``, conjugated as a whole.  ``Lambda_1`` is the exact ``diag|n|``."""
    k = complex(k)
    if abs(k) < K_MIN:
        raise PhantomError("k = 0 is not admissible")
    S = single_layer_matrix(np.conj(k) / 2, quad)
    d1, d2 = _cache if _cache is not None else (None, None)
    u1, c1 = _boundary_solve(dtn, k, quad, condition, S, d1)
    u2, c2 = _boundary_solve(dtn_conj, k, quad, condition, S, d2)
    return FaddeevTraces(BoundaryTrace(u1, quad, k), BoundaryTrace(np.conj(u2), quad, k), max(c1, c2))


def _ds(values, quad):
    m = quad.m
    n = np.fft.fftfreq(m, 1.0 / m)
    n = np.where(np.abs(n) == m // 2, 0, n)
    return np.fft.ifft(1j * n * np.fft.fft(values)) / quad.radius


def psi_boundary(U1: BoundaryTrace, U2: BoundaryTrace, dtn: DtNMap) -> BoundaryTrace:
    """Dirichlet data of ``psi`` on the unit circle from the Faddeev traces.

    ``[psi11, psi12; conj psi21, conj psi22] = 1/2 [kb, -i kb; k, i k] [L U1, L U2; ds U1, ds U2]``
    with ``k = nu1 + i nu2`` the outward normal.
    """
    q = U1.quad
    if q.radius != 1.0:
        raise PhantomError("the D-t-N map lives on the unit circle")
    kap = np.exp(1j * q.angles)
    out = np.empty((q.m, 2, 2), dtype=complex)
    for col, U in enumerate((U1, U2)):
        LU = dtn.apply_trace(U.values)
        dU = _ds(U.values, q)
        out[:, 0, col] = 0.5 * np.conj(kap) * (LU - 1j * dU)
        out[:, 1, col] = np.conj(0.5 * kap * (LU + 1j * dU))
    return BoundaryTrace(out, q, U1.k)


class DtNTraceSource:
    """``trace(k)`` provider for the contour route: psi on ``dO`` from D-t-N data only."""

    def __init__(self, gamma: Conductivity, N=32, m=256, n_r=24, n_theta=128, noise=0.0, seed=0):
        self.gamma = gamma
        self.quad = CircleQuadrature(0j, 1.0, m)
        self.dtn = assemble_dtn(gamma, N, n_r, n_theta)
        self.dtn_conj = assemble_dtn(gamma.conj(), N, n_r, n_theta)
        if noise:
            rng = np.random.default_rng(seed)
            for d in (self.dtn, self.dtn_conj):
                scale = noise * np.abs(d.matrix).max()
                d.matrix[...] += scale * (rng.standard_normal(d.matrix.shape)
                                          + 1j * rng.standard_normal(d.matrix.shape)) / np.sqrt(2)
        self._delta = (_delta_nodes(self.dtn, self.quad), _delta_nodes(self.dtn_conj, self.quad))

    def trace(self, k) -> BoundaryTrace:
        ft = faddeev_traces(self.dtn, self.dtn_conj, k, self.quad, condition=False,
                            _cache=self._delta)
        return psi_boundary(ft.U1, ft.U2, self.dtn)

    def boundary_condition(self, k):
        """Condition number of the boundary system at ``k`` (exceptional-point detector)."""
        _, c = _boundary_solve(self.dtn, complex(k), self.quad, delta=self._delta[0])
        return c
