"""Forward Dirac scattering: Lippmann-Schwinger solves, exceptional-point scans, v and v+.

The matrix equation ``mu = F I + L_kappa [Q conj(mu)]`` splits into two
independent column problems.  For column 1 (``a = mu11``, ``b = mu21``) and
column 2 (``a = mu22``, ``b = mu12``)

    a = F + K[e P conj(b)],     b = K[e R conj(a)]

with ``(P, R) = (Q12, Q21)`` resp. ``(Q21, Q12)``, ``e = exp(-i Re(conj(kappa) w))``
and ``K`` the discrete Cauchy operator.  Eliminating ``b`` leaves the
complex-linear equation ``a - K[e P Kc[conj(e R) a]] = F`` on the support
nodes, where ``Kc`` is the conjugate operator.  This is what GMRES (or a dense
LU at small n) solves.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import _kernels
from .field import (CircleQuadrature, ComplexGrid2D, GridError, PolarGrid,
                    cauchy_convolve, grid_points, green_regular_part, self_cell_correction)

log = logging.getLogger(__name__)

DENSE_BELOW = 64


class ExceptionalPointError(RuntimeError):
    """Raised when a scattering system is (numerically) singular at ``k``."""

    def __init__(self, k, detail):
        super().__init__(f"scattering system singular at k={k}: {detail}")
        self.k = k
        self.detail = detail


class LayoutError(ValueError):
    pass


# ---------------------------------------------------------------------------
# types

@dataclass(frozen=True)
class PotentialField:
    """Off-diagonal Dirac potential ``Q = [[0, Q12], [Q21, 0]]`` on a square grid."""

    Q12: ComplexGrid2D
    Q21: ComplexGrid2D
    support_radius: float
    source_gamma: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if (self.Q12.n, self.Q12.half_width) != (self.Q21.n, self.Q21.half_width):
            raise GridError("Q12 and Q21 live on different grids")
        if self.support_radius > self.Q12.half_width / 2:
            raise GridError("potential support exceeds half the grid width")
        outside = np.abs(self.Q12.z) > self.support_radius
        if np.any(self.Q12.values[outside]) or np.any(self.Q21.values[outside]):
            raise GridError("potential does not vanish outside its support radius")

    @classmethod
    def from_arrays(cls, q12, q21, half_width, support_radius, source_gamma=None):
        """Build from raw samples, zeroing everything outside ``support_radius``."""
        q12 = np.array(q12, dtype=complex)
        q21 = np.array(q21, dtype=complex)
        n = q12.shape[0]
        outside = np.abs(grid_points(half_width, n)) > support_radius
        q12[outside] = 0.0
        q21[outside] = 0.0
        return cls(ComplexGrid2D(half_width, n, q12, support_radius),
                   ComplexGrid2D(half_width, n, q21, support_radius),
                   support_radius, source_gamma)

    @classmethod
    def zero(cls, half_width, n, support_radius=None):
        r = half_width / 2 if support_radius is None else support_radius
        zeros = np.zeros((n, n), dtype=complex)
        return cls.from_arrays(zeros, zeros, half_width, r)

    @property
    def half_width(self):
        return self.Q12.half_width

    @property
    def n(self):
        return self.Q12.n

    @property
    def h(self):
        return self.Q12.h

    @property
    def z(self):
        return self.Q12.z

    def scaled(self, a):
        return PotentialField.from_arrays(a * self.Q12.values, a * self.Q21.values,
                                          self.half_width, self.support_radius)

    def matrix(self):
        out = np.zeros((self.n, self.n, 2, 2), dtype=complex)
        out[..., 0, 1] = self.Q12.values
        out[..., 1, 0] = self.Q21.values
        return out

    def is_zero(self):
        return not (np.any(self.Q12.values) or np.any(self.Q21.values))

    def norm(self):
        """Discrete L2 norm of the off-diagonal pair."""
        v = np.abs(self.Q12.values) ** 2 + np.abs(self.Q21.values) ** 2
        return float(np.sqrt(self.h ** 2 * v.sum()))


@dataclass(frozen=True)
class SpectralLayout:
    """Disc ``D = {|k| < A}``, base point ``k0``, exterior polar grid and ``dD`` nodes."""

    A: float
    k0: complex
    R_max: float
    R_rec: float
    n_radial: int = 32
    n_theta: int = 64
    m: int = 128
    per_panel: int = 8

    def __post_init__(self):
        if self.A <= 0:
            raise LayoutError("A must be positive")
        if not abs(self.k0) < self.A:
            raise LayoutError("k0 must lie inside D")
        if not self.R_max > self.A:
            raise LayoutError("R_max must exceed A")
        if not self.R_rec > self.A:
            raise LayoutError("R_rec must exceed A")
        if self.n_radial % self.per_panel:
            raise LayoutError("n_radial must be a multiple of per_panel")

    @property
    def exterior(self) -> PolarGrid:
        return PolarGrid(self.A, self.R_max, self.n_radial // self.per_panel,
                         self.per_panel, self.n_theta)

    @property
    def exterior_nodes(self):
        return self.exterior.nodes

    @property
    def boundary(self) -> CircleQuadrature:
        return CircleQuadrature(0j, self.A, self.m)

    def rec_nodes(self, count=8):
        return self.R_rec * np.exp(2j * np.pi * np.arange(count) / count)

    def to_dict(self):
        return {"A": self.A, "k0": [self.k0.real, self.k0.imag], "R_max": self.R_max,
                "R_rec": self.R_rec, "n_radial": self.n_radial, "n_theta": self.n_theta,
                "m": self.m, "per_panel": self.per_panel}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        k0 = d.pop("k0")
        return cls(k0=complex(k0[0], k0[1]), **d)


@dataclass(frozen=True)
class ScatteringSolution:
    k: complex
    mu: ComplexGrid2D = field(repr=False)
    kind: Literal["standard", "plus"] = "standard"
    k0: complex | None = None
    condition: float | None = None
    residual: float = 0.0
    iterations: int = 0

    @property
    def psi(self):
        """``psi = mu exp(i conj(k) z / 2)``."""
        ph = np.exp(0.5j * np.conj(self.k) * self.mu.z)[:, :, None, None]
        return self.mu.with_values(self.mu.values * ph)


# ---------------------------------------------------------------------------
# the column operator

class _ColumnSystem:
    """Discrete Lippmann-Schwinger machinery for one potential on one grid."""

    def __init__(self, Q: PotentialField):
        self.Q = Q
        self.hw = Q.half_width
        self.n = Q.n
        self.h = Q.h
        self.h2 = Q.h ** 2
        self.z = Q.z
        mask = np.abs(self.z) <= Q.support_radius
        self.mask = mask
        self.idx = np.nonzero(mask.ravel())[0]
        self._dense_cauchy = None
        self._dense_d = None

    # operators on full-grid arrays; the density is e * s with e the phase, s smooth
    def K(self, s, kappa, e):
        f = e * s
        return (cauchy_convolve(f, self.hw) + self.h2 * green_regular_part(kappa) * f
                + e * self_cell_correction(s, self.h))

    def Kc(self, s, kappa, e):
        """Complex conjugate of the operator: ``conj(K[conj s])``."""
        ce = np.conj(e)
        f = ce * s
        return (cauchy_convolve(f, self.hw, conjugate=True)
                + self.h2 * np.conj(green_regular_part(kappa)) * f
                + ce * self_cell_correction(s, self.h, bar=True))

    def phase(self, kappa):
        return np.exp(-1j * np.real(np.conj(kappa) * self.z))

    def pr(self, column):
        return ((self.Q.Q12.values, self.Q.Q21.values) if column == 0
                else (self.Q.Q21.values, self.Q.Q12.values))

    def dense_cauchy(self):
        if self._dense_cauchy is None:
            pts = self.z.ravel()[self.idx]
            self._dense_cauchy = _kernels.cauchy_matrix(pts)
        return self._dense_cauchy

    def dense_d(self):
        """Centred ``d`` on support nodes as a matrix (off-support neighbours are zero)."""
        if self._dense_d is None:
            n, N = self.n, self.idx.size
            pos = np.full(n * n, -1)
            pos[self.idx] = np.arange(N)
            i, j = np.divmod(self.idx, n)
            D = np.zeros((N, N), dtype=complex)
            for di, dj, w in ((1, 0, 1.0), (-1, 0, -1.0), (0, 1, -1j), (0, -1, 1j)):
                q = pos[((i + di) % n) * n + (j + dj) % n]
                ok = q >= 0
                D[np.nonzero(ok)[0], q[ok]] += w / (4 * self.h)
            self._dense_d = D
        return self._dense_d

    def dense_M(self, kappa, column):
        """``M`` with ``a - M a = F`` on support nodes (dense)."""
        C = self.dense_cauchy()
        c = green_regular_part(kappa)
        e = self.phase(kappa).ravel()[self.idx]
        P, R = (x.ravel()[self.idx] for x in self.pr(column))
        Km = self.h2 * C
        Km[np.diag_indices_from(Km)] = self.h2 * c
        corr = (self.h2 / np.pi) * self.dense_d()
        Ks = Km * e[None, :] - e[:, None] * corr
        Kcs = np.conj(Km) * np.conj(e)[None, :] - np.conj(e)[:, None] * np.conj(corr)
        return (Ks * P[None, :]) @ (Kcs * np.conj(R)[None, :])

    def solve(self, kappa, F, column, tol=1e-12, dense=None, maxiter=400):
        """Return ``(a, b, info)`` on the full grid."""
        e = self.phase(kappa)
        P, R = self.pr(column)
        if dense is None:
            dense = self.n < DENSE_BELOW
        Fs = F.ravel()[self.idx]
        info = {"iterations": 0, "condition": None}
        if not np.any(P) or not np.any(R) or self.idx.size == 0:
            a_s = Fs.copy()
        elif dense:
            M = self.dense_M(kappa, column)
            I_M = np.eye(M.shape[0]) - M
            try:
                a_s = np.linalg.solve(I_M, Fs)
            except np.linalg.LinAlgError as exc:
                raise ExceptionalPointError(kappa, str(exc)) from exc
            info["condition"] = float(np.linalg.svd(I_M, compute_uv=False)[-1])
        else:
            cR = np.conj(R)
            full = np.zeros(self.n * self.n, dtype=complex)

            def mv(u):
                full[:] = 0.0
                full[self.idx] = u
                g = cR * full.reshape(self.n, self.n)
                out = self.K(P * self.Kc(g, kappa, e), kappa, e)
                return u - out.ravel()[self.idx]

            N = self.idx.size
            op = LinearOperator((N, N), matvec=mv, dtype=complex)
            count = [0]

            def cb(_):
                count[0] += 1

            a_s, flag = gmres(op, Fs, rtol=tol, atol=0.0, restart=60, maxiter=maxiter,
                              callback=cb, callback_type="pr_norm")
            res = np.linalg.norm(mv(a_s) - Fs) / max(np.linalg.norm(Fs), 1e-300)
            if flag != 0 or res > 1e3 * tol:
                raise ExceptionalPointError(kappa, f"GMRES stalled, residual {res:.2e}")
            info["iterations"] = count[0]
        a_full = np.zeros(self.n * self.n, dtype=complex)
        a_full[self.idx] = a_s
        a_full = a_full.reshape(self.n, self.n)
        b = self.K(R * np.conj(a_full), kappa, e)
        a = F + self.K(P * np.conj(b), kappa, e)
        # plug-back residual of the coupled pair
        r1 = a - F - self.K(P * np.conj(b), kappa, e)
        r2 = b - self.K(R * np.conj(a), kappa, e)
        scale = max(np.abs(F).max(), 1e-300)
        info["residual"] = float(max(np.abs(r1).max(), np.abs(r2).max()) / scale)
        return a, b, info


_SYSTEMS: dict[int, _ColumnSystem] = {}


def _system(Q: PotentialField) -> _ColumnSystem:
    key = id(Q)
    sys_ = _SYSTEMS.get(key)
    if sys_ is None or sys_.Q is not Q:
        if len(_SYSTEMS) > 8:
            _SYSTEMS.clear()
        sys_ = _SYSTEMS[key] = _ColumnSystem(Q)
    return sys_


def _assemble(Q, kappa, F, tol, dense):
    s = _system(Q)
    mu = np.zeros((Q.n, Q.n, 2, 2), dtype=complex)
    a, b, i1 = s.solve(kappa, F, 0, tol=tol, dense=dense)
    mu[..., 0, 0], mu[..., 1, 0] = a, b
    a, b, i2 = s.solve(kappa, F, 1, tol=tol, dense=dense)
    mu[..., 1, 1], mu[..., 0, 1] = a, b
    conds = [c for c in (i1["condition"], i2["condition"]) if c is not None]
    return mu, {"condition": min(conds) if conds else None,
                "residual": max(i1["residual"], i2["residual"]),
                "iterations": i1["iterations"] + i2["iterations"]}


def solve_mu(Q: PotentialField, k, tol=1e-12, dense=None) -> ScatteringSolution:
    """Normalised scattering solution ``mu(z, k)`` on the potential's grid."""
    k = complex(k)
    F = np.ones((Q.n, Q.n), dtype=complex)
    mu, info = _assemble(Q, k, F, tol, dense)
    return ScatteringSolution(k, ComplexGrid2D(Q.half_width, Q.n, mu), "standard", None,
                              info["condition"], info["residual"], info["iterations"])


def solve_mu_plus(Q: PotentialField, k, k0, tol=1e-12, dense=None) -> ScatteringSolution:
    """``mu+ = psi+ exp(-i conj(k) z/2)`` where the Green kernel is frozen at ``k0``."""
    k, k0 = complex(k), complex(k0)
    z = Q.z
    F = np.exp(0.5j * np.conj(k - k0) * z)
    mu0, info = _assemble(Q, k0, F, tol, dense)
    mu = mu0 * np.exp(0.5j * np.conj(k0 - k) * z)[:, :, None, None]
    return ScatteringSolution(k, ComplexGrid2D(Q.half_width, Q.n, mu), "plus", k0,
                              info["condition"], info["residual"], info["iterations"])


def ls_residual(Q: PotentialField, sol: ScatteringSolution):
    """Max-norm residual of the matrix equation ``psi - phi0 I - G[Q conj psi]``."""
    psi = sol.psi.values
    z = Q.z
    kk = sol.k0 if sol.kind == "plus" else sol.k
    g = _system(Q)
    shrink = np.exp(-0.5j * np.conj(kk) * z)[:, :, None, None]
    grow = np.exp(0.5j * np.conj(kk) * z)[:, :, None, None]
    # density Q conj(psi) = tail * smooth with smooth built from psi normalised at kk
    smooth = np.einsum("xyij,xyjk->xyik", Q.matrix(), np.conj(psi * shrink))
    tail = np.conj(grow)
    dens = smooth * tail
    conv = grow * cauchy_convolve(shrink * dens, Q.half_width) \
        + g.h2 * green_regular_part(kk) * dens + tail * self_cell_correction(smooth, g.h)
    inc = np.exp(0.5j * np.conj(sol.k) * z)[:, :, None, None] * np.eye(2)
    r = psi - inc - conv
    mask = np.abs(z) <= Q.support_radius
    return float(np.abs(r[mask]).max() / np.abs(psi[mask]).max())


# ---------------------------------------------------------------------------
# v, v+ and the jump

def build_v(sol: ScatteringSolution) -> ComplexGrid2D:
    """``v`` (or ``v+``) from ``mu``: conjugated diagonal, phased off-diagonal."""
    mu = sol.mu.values
    ph = np.exp(1j * np.real(np.conj(sol.k) * sol.mu.z))
    v = np.empty_like(mu)
    v[..., 0, 0] = np.conj(mu[..., 0, 0])
    v[..., 1, 1] = np.conj(mu[..., 1, 1])
    v[..., 0, 1] = mu[..., 0, 1] * ph
    v[..., 1, 0] = mu[..., 1, 0] * ph
    return sol.mu.with_values(v)


def v_from_mu(mu, k, z):
    """Pointwise version of :func:`build_v` for arrays ``mu[..., 2, 2]``."""
    mu = np.asarray(mu)
    ph = np.exp(1j * np.real(np.conj(k) * z))
    v = np.empty_like(mu)
    v[..., 0, 0] = np.conj(mu[..., 0, 0])
    v[..., 1, 1] = np.conj(mu[..., 1, 1])
    v[..., 0, 1] = mu[..., 0, 1] * ph
    v[..., 1, 0] = mu[..., 1, 0] * ph
    return v


def jump_on_D(Q: PotentialField, layout: SpectralLayout, z_index, tol=1e-12):
    """``[v'] = v+ - v`` at the ``dD`` nodes for grid node(s) ``z_index``.

    ``z_index`` is a tuple of index arrays into the z-grid.  Returns an array
    ``(m, ..., 2, 2)``.
    """
    out = []
    for k in layout.boundary.nodes:
        v = build_v(solve_mu(Q, k, tol=tol)).values[z_index]
        vp = build_v(solve_mu_plus(Q, k, layout.k0, tol=tol)).values[z_index]
        out.append(vp - v)
    return np.stack(out)


# ---------------------------------------------------------------------------
# exceptional-point scan

@dataclass
class ExceptionalReport:
    radii: np.ndarray
    angles: np.ndarray
    scales: np.ndarray
    sigma: np.ndarray  # (scales, radii, angles) smallest singular value
    flag_ratio: float
    margin: float
    flagged: list = field(default_factory=list)
    recommended_A: float = 0.0
    k0: complex | None = None
    needs_refinement: bool = False

    def k_nodes(self):
        return self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    def to_dict(self):
        return {"recommended_A": self.recommended_A,
                "k0": None if self.k0 is None else [self.k0.real, self.k0.imag],
                "flagged": [[float(k.real), float(k.imag), float(a), float(s)]
                            for k, a, s in self.flagged],
                "min_sigma": float(self.sigma.min()) if self.sigma.size else None,
                "needs_refinement": self.needs_refinement}


def min_singular_value(Q: PotentialField, k) -> float:
    """Smallest singular value over both column systems at ``k`` (dense)."""
    s = _system(Q)
    if s.idx.size == 0 or Q.is_zero():
        return 1.0
    out = np.inf
    for col in (0, 1):
        I_M = np.eye(s.idx.size) - s.dense_M(complex(k), col)
        out = min(out, np.linalg.svd(I_M, compute_uv=False)[-1])
    return float(out)


def scan_exceptional(Q: PotentialField, radii, angles, scales=(1.0,), flag_ratio=1e-6,
                     margin=1e-3, dip_level=None, k0_candidates=16) -> ExceptionalReport:
    """Smallest singular value of the Lippmann-Schwinger system on a polar k-scan.

    A node is flagged when its singular value drops below ``flag_ratio`` times
    the median or below the absolute ``dip_level`` (default: ``margin``).  The
    recommended radius ``A`` keeps every flagged node inside ``|k| < A - 1``;
    the returned ``k0`` is the best-conditioned candidate in ``A - 1 < |k| < A``.
    The systems for ``Q`` and ``-Q`` have identical singular values after
    elimination, so one scan covers both.
    """
    radii = np.asarray(radii, float)
    angles = np.asarray(angles, float)
    scales = np.asarray(scales, float)
    sig = np.ones((scales.size, radii.size, angles.size))
    for ia, a in enumerate(scales):
        Qa = Q if a == 1.0 else Q.scaled(a)
        if Qa.is_zero():
            continue
        for ir, r in enumerate(radii):
            for it, t in enumerate(angles):
                sig[ia, ir, it] = min_singular_value(Qa, r * np.exp(1j * t))
    dip = margin if dip_level is None else dip_level
    med = np.median(sig)
    flagged = []
    knodes = radii[:, None] * np.exp(1j * angles)[None, :]
    for ia in range(scales.size):
        bad = (sig[ia] < flag_ratio * med) | (sig[ia] < dip)
        for ir, it in zip(*np.nonzero(bad)):
            flagged.append((knodes[ir, it], scales[ia], sig[ia, ir, it]))
    rmax = max((abs(k) for k, _, _ in flagged), default=0.0)
    # a flagged node whose radial neighbours are also flagged is unresolved
    refine = False
    for ia in range(scales.size):
        bad = sig[ia] < dip
        if np.any(bad[1:] & bad[:-1]):
            refine = True
    rep = ExceptionalReport(radii, angles, scales, sig, flag_ratio, margin, flagged,
                            recommended_A=rmax + 1.0 if flagged else 0.0,
                            needs_refinement=refine)
    return rep


def certify_k0(Q: PotentialField, A, candidates=16, margin=1e-3, radius=None):
    """Pick the best-conditioned ``k0`` on a ring inside the annulus ``A-1 < |k| < A``."""
    r = radius if radius is not None else max(A - 0.5, 0.5 * A)
    best, best_s = None, -1.0
    for t in 2 * np.pi * (np.arange(candidates) + 0.5) / candidates:
        k = r * np.exp(1j * t)
        s = min_singular_value(Q, k)
        if s > best_s:
            best, best_s = k, s
    if best_s < margin:
        raise LayoutError(f"no certified k0 on |k|={r}: best sigma {best_s:.2e}")
    return complex(best), best_s
