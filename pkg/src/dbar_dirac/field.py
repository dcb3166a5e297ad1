"""Grids, quadrature and the basic integral transforms.

Conventions used throughout the package:

* A :class:`ComplexGrid2D` samples the square ``[-s, s)^2`` at nodes
  ``x_j = -s + j h``, ``h = 2 s / n``; arrays are indexed ``values[ix, iy]``
  so that ``z = X + 1j * Y`` with ``meshgrid(..., indexing="ij")``.  The origin
  is always a node.
* Area integrals over the grid are trapezoid sums ``h**2 * sum(...)``; the
  fields we integrate are compactly supported inside the square.
* ``dbar = (d/dx + i d/dy) / 2`` and ``d = (d/dx - i d/dy) / 2``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import _kernels


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ComplexGrid2D:
    half_width: float
    n: int
    values: np.ndarray = field(repr=False)
    support_radius: float | None = None

    def __post_init__(self):
        if self.half_width <= 0:
            raise GridError("half_width must be positive")
        if self.n < 2 or self.n & (self.n - 1):
            raise GridError(f"n must be a power of two, got {self.n}")
        v = np.asarray(self.values)
        if v.shape[:2] != (self.n, self.n):
            raise GridError(f"values shape {v.shape} does not match n={self.n}")
        object.__setattr__(self, "values", v)

    @property
    def h(self):
        return 2.0 * self.half_width / self.n

    @property
    def z(self):
        return grid_points(self.half_width, self.n)

    @property
    def is_matrix(self):
        return self.values.ndim == 4

    def with_values(self, values, support_radius=None):
        return ComplexGrid2D(self.half_width, self.n, values, support_radius)

    def integrate(self):
        return self.h ** 2 * self.values.sum(axis=(0, 1))


@lru_cache(maxsize=32)
def _grid_points(half_width, n):
    x = -half_width + np.arange(n) * (2.0 * half_width / n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    z = X + 1j * Y
    z.setflags(write=False)
    return z


def grid_points(half_width, n):
    return _grid_points(float(half_width), int(n))


def zero_grid(half_width, n, matrix=False):
    shape = (n, n, 2, 2) if matrix else (n, n)
    return ComplexGrid2D(half_width, n, np.zeros(shape, dtype=complex), 0.0)


@dataclass(frozen=True)
class CircleQuadrature:
    """``m`` equispaced counter-clockwise nodes on a circle, trapezoid weights."""

    center: complex
    radius: float
    m: int

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise GridError("circle node count must be even")
        if self.radius <= 0:
            raise GridError("circle radius must be positive")

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(self.m) / self.m

    @property
    def nodes(self):
        return self.center + self.radius * np.exp(1j * self.angles)

    @property
    def weights(self):
        return np.full(self.m, 2.0 * np.pi / self.m)

    @property
    def dz(self):
        """``dz = i (z - c) dtheta`` at the nodes, trapezoid weight included."""
        return 1j * (self.nodes - self.center) * self.weights

    @property
    def dzbar(self):
        return np.conj(self.dz)

    def integrate_dz(self, values):
        """Contour integral ``\\oint f dz``; node axis first."""
        values = np.asarray(values)
        return np.tensordot(self.dz, values, axes=(0, 0))

    def fourier(self, values):
        """Coefficients ``f_n`` with ``f = sum f_n exp(i n theta)``, FFT order."""
        return np.fft.fft(np.asarray(values), axis=0) / self.m


def _fft_freqs(m):
    return np.fft.fftfreq(m, 1.0 / m)


def hardy_weights(m):
    """Multipliers of the interior (``+``) and exterior (``-``) projections.

    The Nyquist mode is shared equally so that ``plus + minus == 1``.
    """
    n = _fft_freqs(m)
    plus = (n >= 0).astype(float)
    minus = (n < 0).astype(float)
    nyq = m // 2
    plus[nyq] = 0.5
    minus[nyq] = 0.5
    return n, plus, minus


def circle_cauchy(phi, quad: CircleQuadrature, k, side="auto"):
    """``(1/2 pi i) \\oint phi(s) ds / (s - k)`` for boundary samples ``phi``.

    ``side`` is ``"inside"``/``"outside"`` for ``k`` off the circle, and
    ``"on_minus"``/``"on_plus"`` for the interior/exterior limits at the nodes
    (``k`` is then ignored and one value per node is returned).  The density
    is expanded in its trigonometric series, so the result is exact for
    trigonometric polynomials.
    """
    phi = np.asarray(phi, dtype=complex)
    coef = quad.fourier(phi)
    n, plus, minus = hardy_weights(quad.m)
    if side in ("on_minus", "on_plus"):
        mult = plus if side == "on_minus" else -minus
        shape = (-1,) + (1,) * (phi.ndim - 1)
        return np.fft.ifft(coef * mult.reshape(shape) * quad.m, axis=0)

    k = np.asarray(k, dtype=complex)
    t = (k - quad.center) / quad.radius
    r = np.abs(t)
    if side == "auto":
        side = "inside" if np.all(r < 1) else "outside"
    if np.any(np.abs(r - 1) < 2 * np.pi / quad.m):
        warnings.warn("evaluation point within one node spacing of the circle",
                      RuntimeWarning, stacklevel=2)
    tt = t.reshape(-1)
    if side == "inside":
        powers = tt[:, None] ** np.where(n >= 0, n, 0)[None, :] * plus[None, :]
    elif side == "outside":
        safe = np.where(tt == 0, 1, tt)
        powers = -(safe[:, None] ** np.where(n < 0, n, 0)[None, :]) * minus[None, :]
    else:
        raise ValueError(f"unknown side {side!r}")
    out = np.tensordot(powers, coef, axes=(1, 0))
    return out.reshape(k.shape + phi.shape[1:])


# ---------------------------------------------------------------------------
# spectral derivatives

def _wavenumbers(half_width, n):
    return 2.0 * np.pi * np.fft.fftfreq(n, 2.0 * half_width / n)


def _spectral(f: ComplexGrid2D, sign):
    v = f.values
    kx = _wavenumbers(f.half_width, f.n)
    KX, KY = np.meshgrid(kx, kx, indexing="ij")
    sym = 0.5 * (1j * KX + sign * 1j * 1j * KY)
    if v.ndim == 4:
        sym = sym[:, :, None, None]
    out = np.fft.ifft2(sym * np.fft.fft2(v, axes=(0, 1)), axes=(0, 1))
    return f.with_values(out, f.support_radius)


def dbar_spectral(f: ComplexGrid2D) -> ComplexGrid2D:
    """Spectral ``dbar f``; exact for band-limited periodic samples."""
    return _spectral(f, +1)


def d_spectral(f: ComplexGrid2D) -> ComplexGrid2D:
    """Spectral ``d f``."""
    return _spectral(f, -1)


def dbar_fd4(values, h):
    """Fourth-order centred ``dbar`` on interior nodes (two-node border set to nan)."""
    v = np.asarray(values, dtype=complex)
    out = np.full(v.shape, np.nan + 0j)
    c = slice(2, -2)

    def diff(axis):
        def sl(off):
            idx = [c, c]
            idx[axis] = slice(2 + off, v.shape[axis] - 2 + off)
            return v[tuple(idx)]
        return (-sl(2) + 8 * sl(1) - 8 * sl(-1) + sl(-2)) / (12 * h)

    out[c, c] = 0.5 * (diff(0) + 1j * diff(1))
    return out


# ---------------------------------------------------------------------------
# convolution with 1/(pi z)

@lru_cache(maxsize=16)
def _cauchy_kernel_fft(half_width, n, conjugate):
    h = 2.0 * half_width / n
    idx = np.arange(2 * n)
    idx = np.where(idx < n, idx, idx - 2 * n) * h
    X, Y = np.meshgrid(idx, idx, indexing="ij")
    d = X + 1j * Y
    if conjugate:
        d = np.conj(d)
    d[0, 0] = 1.0
    ker = 1.0 / (np.pi * d)
    ker[0, 0] = 0.0
    out = np.fft.fft2(ker * h * h)
    out.setflags(write=False)
    return out


def cauchy_convolve(values, half_width, conjugate=False):
    """``h^2 sum_{j != i} f_j / (pi (z_i - z_j))`` for every node ``z_i``.

    Zero-padded to the doubled grid, so there is no wrap-around.  With
    ``conjugate=True`` the kernel is ``1/(pi conj(z_i - z_j))``.
    """
    v = np.asarray(values, dtype=complex)
    n = v.shape[0]
    ker = _cauchy_kernel_fft(float(half_width), int(n), bool(conjugate))
    if v.ndim > 2:
        ker = ker.reshape(ker.shape + (1,) * (v.ndim - 2))
    pad = np.fft.fft2(v, s=(2 * n, 2 * n), axes=(0, 1))
    return np.fft.ifft2(pad * ker, axes=(0, 1))[:n, :n]


def _support_check(f: ComplexGrid2D):
    if f.support_radius is not None and f.support_radius > f.half_width / 2:
        raise GridError(
            f"support radius {f.support_radius} exceeds half_width/2 = {f.half_width / 2}")


def green_regular_part(k):
    """Finite part of ``G(z, k)`` at ``z = 0``: ``i conj(k) / (2 pi)``.

    Used as the self-interaction value of the discrete Green operator.  The
    odd ``1/(pi z)`` part averages to zero over the centred cell.
    """
    return 1j * np.conj(k) / (2.0 * np.pi)


def d_central(values, h, bar=False):
    """Second-order centred ``d`` (``dbar`` with ``bar=True``) over the first two axes.

    Wraps around periodically, so it is meant for data vanishing near the grid edge.
    """
    v = np.asarray(values)
    dx = (np.roll(v, -1, 0) - np.roll(v, 1, 0)) / (2 * h)
    dy = (np.roll(v, -1, 1) - np.roll(v, 1, 1)) / (2 * h)
    return 0.5 * (dx + 1j * dy) if bar else 0.5 * (dx - 1j * dy)


def self_cell_correction(smooth, h, bar=False):
    """Self-cell term ``-(h^2/pi) d(smooth)`` missing from the punctured sum.

    For smooth ``g`` the punctured trapezoid sum of ``g(u)/(pi (z - u))``
    overshoots the integral by ``(h^2/pi) dg(z)``; removing it makes the
    convolution fourth order.  ``bar=True`` gives the conjugate-kernel version.
    """
    return -(h * h / np.pi) * d_central(smooth, h, bar)


def green_convolve(f: ComplexGrid2D, k) -> ComplexGrid2D:
    """``z -> \\iint G(z - z', k) f(z') dx' dy'`` with ``G = exp(i conj(k) z/2) / (pi z)``.

    Computed as ``exp(i kbar z/2) * [ (1/pi z) * (exp(-i kbar z'/2) f) ]`` on the
    doubled grid, plus the self-cell terms: the regular part of ``G`` (exact for the
    exponential) and the centred-difference correction for ``f``.  ``f`` should
    be smooth on the grid scale.
    """
    _support_check(f)
    z = f.z
    kb = np.conj(k)
    grow = np.exp(0.5j * kb * z)
    shrink = np.exp(-0.5j * kb * z)
    v = f.values
    if v.ndim == 4:
        grow = grow[:, :, None, None]
        shrink = shrink[:, :, None, None]
    conv = cauchy_convolve(shrink * v, f.half_width)
    out = grow * conv + f.h ** 2 * green_regular_part(k) * v + self_cell_correction(v, f.h)
    return f.with_values(out)


def cauchy_solid_grid(f: ComplexGrid2D, pole):
    """``-(1/pi) \\iint f(s) / (s - pole)`` for gridded ``f``.

    Punctured trapezoid sum; the cell containing the pole uses the exact
    integral of ``1/(s - pole)`` over that cell times the nodal value.  A pole
    on a node takes the principal value (the centred-cell integral is zero).
    """
    if f.support_radius is not None and f.support_radius >= f.half_width * 0.999:
        warnings.warn("support touches the grid boundary", RuntimeWarning, stacklevel=2)
    h = f.h
    pts = f.z.ravel()
    v = f.values.reshape(pts.size, -1)
    pole = complex(pole)
    ix = int(np.rint((pole.real + f.half_width) / h))
    iy = int(np.rint((pole.imag + f.half_width) / h))
    w = np.full(pts.size, h * h)
    centre = ix * f.n + iy if (0 <= ix < f.n and 0 <= iy < f.n) else None
    if centre is not None:
        w[centre] = 0.0
    # -(1/pi) sum w f / (s - pole) = (1/pi) sum w f / (pole - s)
    total = np.array([_kernels.cauchy_sum(np.array([pole]), pts, w * v[:, c])[0]
                      for c in range(v.shape[1])]) / np.pi
    if centre is not None:
        total -= _cell_integral_inverse(pts[centre], h, pole) * v[centre] / np.pi
    shape = f.values.shape[2:]
    return total.reshape(shape) if shape else complex(total[0])


def _cell_integral_inverse(centre, h, pole):
    """Exact ``\\iint_cell ds / (s - pole)`` over the square cell of side ``h``."""
    p = pole - centre
    half = 0.5 * h
    corners = np.array([half + 1j * half, -half + 1j * half, -half - 1j * half,
                        half - 1j * half, half + 1j * half]) - p
    # sum over the four triangles (pole, corner_a, corner_b): each edge seen
    # from the pole, integral of e^{-i theta} R(theta) d theta in closed form
    total = 0j
    for a, b in zip(corners[:-1], corners[1:]):
        edge = b - a
        nrm = -1j * edge / abs(edge)  # outward normal for ccw traversal
        d = (a * np.conj(nrm)).real
        if abs(d) < 1e-300:
            continue
        alpha = np.angle(nrm)
        ta = np.angle(a * np.exp(-1j * alpha))
        tb = np.angle(b * np.exp(-1j * alpha))
        prim = lambda phi: phi + 1j * np.log(np.cos(phi))
        total += d * np.exp(-1j * alpha) * (prim(tb) - prim(ta))
    return total


# ---------------------------------------------------------------------------
# polar grids and the fast solid Cauchy transform on annuli

@dataclass(frozen=True)
class PolarGrid:
    """Annulus ``r_in <= |k| <= r_out`` with Gauss-Legendre radial panels.

    Panel breakpoints are geometric (uniform when ``r_in == 0``); each panel
    carries ``per_panel`` Gauss nodes.  Angles are ``n_theta`` equispaced
    values starting at ``theta0``.
    """

    r_in: float
    r_out: float
    n_panels: int
    per_panel: int
    n_theta: int
    theta0: float = 0.0

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise GridError("need 0 <= r_in < r_out")
        if self.n_theta % 2:
            raise GridError("n_theta must be even")

    @property
    def breaks(self):
        if self.r_in > 0:
            return np.geomspace(self.r_in, self.r_out, self.n_panels + 1)
        return np.linspace(0.0, self.r_out, self.n_panels + 1)

    @property
    def radii(self):
        return _panel_nodes(self.breaks, self.per_panel)[0]

    @property
    def radial_weights(self):
        return _panel_nodes(self.breaks, self.per_panel)[1]

    @property
    def n_r(self):
        return self.n_panels * self.per_panel

    @property
    def angles(self):
        return self.theta0 + 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def nodes(self):
        """Node array of shape ``(n_r, n_theta)``."""
        return self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    @property
    def area_weights(self):
        return (self.radii * self.radial_weights)[:, None] * np.full(
            self.n_theta, 2 * np.pi / self.n_theta)[None, :]


def _panel_nodes(breaks, p):
    x, w = leggauss(p)
    a, b = breaks[:-1, None], breaks[1:, None]
    r = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wr = (0.5 * (b - a) * w).ravel()
    return r, wr


def radial_cauchy_weights(grid: PolarGrid, targets_r, modes, fine=48):
    """Weights for the solid Cauchy transform of one angular mode.

    For a density ``f(r, theta) = sum_n f_n(r) exp(i n theta)`` on the annulus,

        (1/pi) \\iint f(s) / (s - k) dA  =  sum_n  C_n(rho) * exp(i (n-1) theta_k)

    with ``rho = |k|`` and ``C_n(rho) = sum_l T[n, i, l] f_n(r_l)``.  Returned
    tensor has shape ``(len(modes), len(targets_r), n_r)``.  Exterior targets
    (``rho > r_out``) and interior ones (``rho < r_in``) are allowed.

    Product integration: ``f_n`` is interpolated on each panel and integrated
    against the steep kernels ``(rho/r)^(n-1)`` and ``(r/rho)^(|n|+1)`` with a
    ``fine``-point Gauss rule split at ``rho``.
    """
    breaks = grid.breaks
    p = grid.per_panel
    targets_r = np.atleast_1d(np.asarray(targets_r, dtype=float))
    modes = np.atleast_1d(np.asarray(modes))
    pos = modes >= 1
    xf, wf = leggauss(fine)
    vinv = _legendre_vinv(p)
    T = np.zeros((modes.size, targets_r.size, grid.radii.size))
    for ti, rho in enumerate(targets_r):
        for pi in range(grid.n_panels):
            a, b = breaks[pi], breaks[pi + 1]
            sl = slice(pi * p, (pi + 1) * p)
            for c, d, upper in ((a, min(b, rho), False), (max(a, rho), b, True)):
                if d <= c:
                    continue
                rf = 0.5 * (d - c) * (xf + 1) + c
                L = np.polynomial.legendre.legvander(2 * (rf - a) / (b - a) - 1, p - 1) @ vinv
                w = 0.5 * (d - c) * wf
                if upper:
                    # n >= 1: 2 \int_{r > rho} (rho/r)^(n-1) f_n dr
                    K = 2.0 * (rho / rf)[None, :] ** (modes[pos, None] - 1)
                    T[pos, ti, sl] += (K * w) @ L
                else:
                    # n <= 0: -2 \int_{r < rho} (r/rho)^(|n|+1) f_n dr
                    K = -2.0 * (rf / rho)[None, :] ** (1 - modes[~pos, None])
                    T[~pos, ti, sl] += (K * w) @ L
    return T


@lru_cache(maxsize=8)
def _legendre_vinv(p):
    x, _ = leggauss(p)
    return np.linalg.inv(np.polynomial.legendre.legvander(x, p - 1))


class PolarCauchy:
    """Solid Cauchy transform ``(1/pi) \\iint_annulus f(s) ds / (s - k)``.

    Densities are sampled on a :class:`PolarGrid`; targets are arbitrary points
    grouped by radius.  Exact for densities that are band-limited in angle and
    polynomial of degree < ``per_panel`` on each radial panel.
    """

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        self.modes = _fft_freqs(grid.n_theta).astype(int)
        self._cache = {}

    def weights(self, rho):
        key = round(float(rho), 14)
        T = self._cache.get(key)
        if T is None:
            T = radial_cauchy_weights(self.grid, [rho], self.modes)[:, 0, :]
            self._cache[key] = T
        return T

    def mode_coefficients(self, density):
        """FFT in angle; density shape ``(n_r, n_theta, ...)``."""
        g = self.grid
        coef = np.fft.fft(density, axis=1) / g.n_theta
        # nodes start at theta0: f = sum c_n e^{i n (theta - theta0)}
        shift = np.exp(-1j * self.modes * g.theta0)
        return coef * shift.reshape((1, -1) + (1,) * (density.ndim - 2))

    def evaluate(self, density, targets, coef=None):
        """Transform at arbitrary ``targets`` (any shape); trailing density dims kept."""
        density = np.asarray(density, dtype=complex)
        if coef is None:
            coef = self.mode_coefficients(density)
        tail = density.shape[2:]
        targets = np.asarray(targets, dtype=complex)
        flat = targets.ravel()
        out = np.zeros((flat.size,) + tail, dtype=complex)
        rho_all = np.abs(flat)
        for rho in np.unique(np.round(rho_all, 14)):
            sel = np.nonzero(np.abs(np.round(rho_all, 14) - rho) == 0)[0]
            T = self.weights(rho)  # (modes, n_r)
            C = np.einsum("ml,lm...->m...", T, coef)  # (modes, ...)
            th = np.angle(flat[sel])
            ph = np.exp(1j * (self.modes[None, :] - 1) * th[:, None])
            out[sel] = np.tensordot(ph, C, axes=(1, 0))
        return out.reshape(targets.shape + tail)

    def evaluate_on_rings(self, density, radii, n_theta, theta0=0.0, coef=None):
        """Transform at ``radii x equispaced angles``; returns ``(len(radii), n_theta, ...)``."""
        density = np.asarray(density, dtype=complex)
        if coef is None:
            coef = self.mode_coefficients(density)
        th = theta0 + 2 * np.pi * np.arange(n_theta) / n_theta
        ph = np.exp(1j * (self.modes[None, :] - 1) * th[:, None])
        out = []
        for rho in np.atleast_1d(radii):
            T = self.weights(rho)
            C = np.einsum("ml,lm...->m...", T, coef)
            out.append(np.tensordot(ph, C, axes=(1, 0)))
        return np.stack(out)


def cauchy_solid(f, pole, polar: PolarGrid | None = None):
    """``-(1/pi) \\iint f(s) / (s - pole) ds_R ds_I``.

    ``f`` is either a :class:`ComplexGrid2D` or an array of samples on the
    polar grid ``polar``.
    """
    if isinstance(f, ComplexGrid2D):
        return cauchy_solid_grid(f, pole)
    if polar is None:
        raise ValueError("polar samples need the PolarGrid they live on")
    return -PolarCauchy(polar).evaluate(np.asarray(f), np.asarray(pole))


def inverse_d_spectral(values, half_width, bar=False):
    """Spectral solution ``u`` of ``d u = f`` (``dbar u = f`` with ``bar=True``).

    The zero mode is dropped (a compactly supported derivative has zero mean)
    and ``u`` is shifted so that its mean over the four grid corners vanishes.
    """
    v = np.asarray(values, dtype=complex)
    n = v.shape[0]
    kx = _wavenumbers(half_width, n)
    KX, KY = np.meshgrid(kx, kx, indexing="ij")
    sym = 0.5 * (1j * KX - KY) if bar else 0.5 * (1j * KX + KY)
    sym[0, 0] = 1.0
    uh = np.fft.fft2(v) / sym
    uh[0, 0] = 0.0
    u = np.fft.ifft2(uh)
    corners = u[[0, 0, -1, -1], [0, -1, 0, -1]].mean()
    return u - corners
