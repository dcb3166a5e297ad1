"""The d-bar reconstruction: log kernel W, operator T_z, the integral equation, psi, Q and gamma.

Unknowns for a fixed reconstruction point ``z`` are 2x2 blocks at the exterior
polar nodes (``|k| > A``) followed by the interior traces on the ``dD`` nodes.
``T_z`` is real-linear only (it conjugates its argument), so the GMRES solve
runs on the stacked real and imaginary parts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .field import (CircleQuadrature, ComplexGrid2D, PolarCauchy, dbar_fd4, grid_points,
                    hardy_weights)
from .forward import LayoutError, PotentialField, SpectralLayout
from .scattering import ScatteringData

log = logging.getLogger(__name__)

# With h normalised by (2 pi)^-2 the k-derivative of v is
#   dv/dkbar = 2 pi i exp(i Re(conj(k) z)) conj(v) h^o(k, k),
# so the area term of T_z carries the same factor.
DBAR_FACTOR = 2j * np.pi


# ---------------------------------------------------------------------------
# entrywise phase/conjugation maps

def op_A(k, z, X):
    """``A(k, z) X = exp(i k conj(z)/2) [conj(X^d) + X^o]``."""
    X = np.asarray(X)
    out = np.empty(np.broadcast_shapes(np.shape(X), np.shape(k) + (2, 2)), dtype=complex)
    out[..., 0, 0] = np.conj(X[..., 0, 0])
    out[..., 1, 1] = np.conj(X[..., 1, 1])
    out[..., 0, 1] = X[..., 0, 1]
    out[..., 1, 0] = X[..., 1, 0]
    return out * np.exp(0.5j * np.asarray(k) * np.conj(z))[..., None, None]


def op_A_star(k, z, Y):
    """``A*(k, z) Y = exp(i conj(k) z/2) conj(Y^d) + exp(-i k conj(z)/2) Y^o``."""
    Y = np.asarray(Y)
    k = np.asarray(k)
    e1 = np.exp(0.5j * np.conj(k) * z)
    e2 = np.exp(-0.5j * k * np.conj(z))
    out = np.empty(np.broadcast_shapes(np.shape(Y), np.shape(k) + (2, 2)), dtype=complex)
    out[..., 0, 0] = e1 * np.conj(Y[..., 0, 0])
    out[..., 1, 1] = e1 * np.conj(Y[..., 1, 1])
    out[..., 0, 1] = e2 * Y[..., 0, 1]
    out[..., 1, 0] = e2 * Y[..., 1, 0]
    return out


# ---------------------------------------------------------------------------
# the log kernel

@dataclass(frozen=True)
class WKernel:
    """``W(k, s) = Ln((conj(s) - conj(k)) / (conj(s) - conj(k0)))`` on ``dD``.

    ``values[i, j] = W(s_i, s_j)`` off the diagonal, the finite part on it.
    ``weights[i, j]`` integrate ``W(s_i, .) f`` against ``d theta``:
    ``\\int W(s_i, s) f(s) d theta ~ sum_j weights[i, j] f_j``; ``weights_conj``
    does the same for ``conj(W)``.  The log singularity is integrated exactly
    for trigonometric polynomials.
    """

    quad: CircleQuadrature
    k0: complex
    values: np.ndarray = field(repr=False)
    smooth: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    weights_conj: np.ndarray = field(repr=False)


def _log_weights(theta_k, theta, m):
    """Product weights for ``L(theta - theta_k) = Log(1 - exp(i (theta - theta_k)))``."""
    n = np.arange(1, m // 2 + 1)
    c = 1.0 / n
    c[-1] *= 0.5  # Nyquist shared with its alias
    d = theta[None, :] - np.asarray(theta_k)[:, None]
    return -(2 * np.pi / m) * np.exp(1j * d[..., None] * n).dot(c)


def _log_part(delta):
    return np.log(1.0 - np.exp(1j * delta))


def _branch_check(W):
    worst = np.abs(W.imag).max() if W.size else 0.0
    if worst >= np.pi * (1 - 1e-12):
        raise LayoutError(f"branch of W violated: max |Im W| = {worst:.6f}")


def dirac_green(z, k):
    """``G(z, k) = exp(i conj(k) z/2) / (pi z)``."""
    z = np.asarray(z, dtype=complex)
    return np.exp(0.5j * np.conj(k) * z) / (np.pi * z)


def w_values(k, s, k0):
    """Principal ``W(k, s)`` for ``k != s`` (arrays broadcast)."""
    return np.log((np.conj(s) - np.conj(k)) / (np.conj(s) - np.conj(k0)))


def build_W(layout: SpectralLayout) -> WKernel:
    q = layout.boundary
    th = q.angles
    nodes = q.nodes
    m = q.m
    k0 = layout.k0
    off = ~np.eye(m, dtype=bool)
    K, S = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.zeros((m, m), dtype=complex)
    W[off] = w_values(K[off], S[off], k0)
    _branch_check(W[off])
    delta = th[None, :] - th[:, None]
    smooth = np.zeros_like(W)
    smooth[off] = W[off] - _log_part(delta[off])
    # finite part on the diagonal, branch matched to the neighbours
    diag = np.log(np.conj(nodes) / (np.conj(nodes) - np.conj(k0)))
    nb = 0.5 * (smooth[np.arange(m), (np.arange(m) + 1) % m]
                + smooth[np.arange(m), (np.arange(m) - 1) % m])
    diag += 2j * np.pi * np.round((nb - diag).imag / (2 * np.pi))
    smooth[np.diag_indices(m)] = diag
    W[np.diag_indices(m)] = diag
    Lw = _log_weights(th, th, m)
    h = 2 * np.pi / m
    return WKernel(q, k0, W, smooth, Lw + h * smooth, np.conj(Lw) + h * np.conj(smooth))


def w_weights_at(layout: SpectralLayout, k):
    """Quadrature row(s) for ``\\int W(k, s) f(s) d theta`` with ``k`` anywhere on ``dD``."""
    q = layout.boundary
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    th_k = np.angle(k)
    th = q.angles
    delta = th[None, :] - th_k[:, None]
    S = q.nodes[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        W = w_values(k[:, None], S, layout.k0)
        smooth = W - _log_part(delta)
    close = np.abs(np.exp(1j * delta) - 1) < 1e-12
    if np.any(close):
        kk = np.broadcast_to(k[:, None], close.shape)[close]
        smooth[close] = np.log(np.conj(kk) / (np.conj(kk) - np.conj(layout.k0)))
    _branch_check(W[~close])
    return _log_weights(th_k, th, q.m) + (2 * np.pi / q.m) * smooth


def green_difference_contour(layout: SpectralLayout, z, k):
    """Right side of the W identity: ``(2 pi)^-2 \\oint W(k, s) exp(i conj(s) z/2) d conj(s)``."""
    q = layout.boundary
    wts = w_weights_at(layout, k)  # (nk, m)
    s = q.nodes
    f = np.exp(0.5j * np.conj(s)[None, :] * np.asarray(z).reshape(-1, 1)) * (-1j * np.conj(s))
    return np.einsum("km,zm->zk", wts, f) / (2 * np.pi) ** 2


# ---------------------------------------------------------------------------
# jump representation through W and h

def jump_from_W(Wk: WKernel, h_bd, psi_plus):
    """``psi - psi+`` at the ``dD`` nodes from ``psi+`` at the same nodes.

    ``psi_plus[j]`` is ``psi+(z, s_j)``, shape ``(m, ..., 2, 2)``;
    ``h_bd[a, b] = h(s_a, s_b)``.  Implements
    ``\\oint (Pd psi+(s) M + Po psi+(s) conj(M))`` with ``M = W(k, s) h(s, k) d conj(s)``.
    """
    M, Mc = jump_matrices(Wk, h_bd)
    return _apply_jump(M, Mc, np.asarray(psi_plus))


def jump_matrices(Wk: WKernel, h_bd):
    """``M[i, j] = Wq[i, j] (-i conj(s_j)) h(s_j, s_i)`` and the conjugate-side partner."""
    s = Wk.quad.nodes
    hT = np.swapaxes(h_bd, 0, 1)  # hT[i, j] = h(s_j, s_i)
    M = (Wk.weights * (-1j * np.conj(s))[None, :])[..., None, None] * hT
    Mc = (Wk.weights_conj * (1j * s)[None, :])[..., None, None] * np.conj(hT)
    return M, Mc


def _apply_jump(M, Mc, P):
    d = np.zeros_like(P)
    o = np.zeros_like(P)
    d[..., 0, 0], d[..., 1, 1] = P[..., 0, 0], P[..., 1, 1]
    o[..., 0, 1], o[..., 1, 0] = P[..., 0, 1], P[..., 1, 0]
    extra = P.ndim - 3
    ein = "jZab,ijbc->iZac".replace("Z", "xyz"[:extra])
    return np.einsum(ein, d, M) + np.einsum(ein, o, Mc)


# ---------------------------------------------------------------------------
# the operator T_z

class TzCache:
    """Everything in ``T_z`` that does not depend on ``z``; shared across reconstruction points."""

    def __init__(self, data: ScatteringData, W: WKernel | None = None):
        L = data.layout
        self.data = data
        self.layout = L
        self.grid = L.exterior
        self.quad = L.boundary
        self.W = W if W is not None else build_W(L)
        self.cauchy = PolarCauchy(self.grid)
        self.modes = self.cauchy.modes
        self.nodes = self.grid.nodes
        self.bd = self.quad.nodes
        self.n_ext = self.nodes.size
        self.m = self.quad.m
        # solid Cauchy weights for every exterior ring and for the dD ring
        self.T_ring = np.stack([self.cauchy.weights(r) for r in self.grid.radii])
        self.T_bd = self.cauchy.weights(L.A)
        th = self.quad.angles
        self.ph_bd = np.exp(1j * (self.modes[None, :] - 1) * th[:, None])
        self.shift_ext = np.exp(-1j * self.grid.angles)
        # outer Cauchy integral over dD: exterior values and interior traces
        eye = np.eye(self.m)
        self.C_out = _circle_matrix(self.quad, self.nodes.ravel())
        self.C_in = _circle_trace_matrix(self.quad)
        self.M, self.Mc = jump_matrices(self.W, data.h_bd)
        self.h_diag = data.h_diag
        del eye

    def operator(self, z) -> "TzOperator":
        return TzOperator(self, z)


def _circle_matrix(quad: CircleQuadrature, targets):
    """Matrix of ``(1/2 pi i) \\oint f(s) ds / (s - k)`` for ``|k| > radius``."""
    n, plus, minus = hardy_weights(quad.m)
    t = (np.asarray(targets) - quad.center) / quad.radius
    pw = -(t[:, None] ** np.where(n < 0, n, 0)[None, :]) * minus[None, :]
    dft = np.exp(-1j * np.outer(n, quad.angles)) / quad.m
    return pw @ dft


def _circle_trace_matrix(quad: CircleQuadrature):
    """Interior boundary limit of the circle Cauchy integral at the nodes."""
    n, plus, minus = hardy_weights(quad.m)
    dft = np.exp(-1j * np.outer(n, quad.angles)) / quad.m
    inv = np.exp(1j * np.outer(quad.angles, n))
    return (inv * plus[None, :]) @ dft


class TzOperator:
    """``T_z`` for one reconstruction point; acts on ``(ext, bd)`` pairs of 2x2 blocks."""

    def __init__(self, cache: TzCache, z):
        self.c = cache
        self.z = complex(z)
        self.E = np.exp(1j * np.real(np.conj(cache.nodes) * self.z))

    @property
    def shape_ext(self):
        return self.c.nodes.shape + (2, 2)

    def first_term_density(self, phi_ext):
        f = np.einsum("rtab,rtbc->rtac", np.conj(phi_ext), self.c.h_diag)
        return (DBAR_FACTOR * self.E)[..., None, None] * f

    def _coef(self, dens):
        return np.fft.fft(dens, axis=1) / self.c.grid.n_theta

    def boundary_density(self, phi_bd):
        """``F`` on ``dD``: ``A(s_i, z) sum_j [...]`` applied to ``A*(s_j, z) phi_j``."""
        bd = self.c.bd
        P = op_A_star(bd, self.z, phi_bd)
        B = _apply_jump(self.c.M, self.c.Mc, P)
        return op_A(bd, self.z, B)

    def apply(self, phi_ext, phi_bd):
        c = self.c
        coef = self._coef(self.first_term_density(phi_ext))
        C = np.einsum("rml,lmab->rmab", c.T_ring, coef)
        t1_ext = np.fft.ifft(C, axis=1) * c.grid.n_theta * c.shift_ext[None, :, None, None]
        Cb = np.einsum("ml,lmab->mab", c.T_bd, coef)
        t1_bd = np.einsum("im,mab->iab", c.ph_bd, Cb)
        F = self.boundary_density(phi_bd)
        t2_ext = np.einsum("pj,jab->pab", c.C_out, F).reshape(self.shape_ext)
        t2_bd = np.einsum("ij,jab->iab", c.C_in, F)
        return t1_ext + t2_ext, t1_bd + t2_bd

    def __call__(self, phi_ext, phi_bd):
        return self.apply(phi_ext, phi_bd)

    def evaluate(self, phi_ext, phi_bd, k):
        """``T_z phi`` at arbitrary points ``k`` outside ``D`` (array, any shape)."""
        k = np.asarray(k, dtype=complex)
        c = self.c
        if np.any(np.abs(k) <= c.layout.A):
            raise ValueError("evaluation points must lie outside D")
        dens = self.first_term_density(phi_ext)
        t1 = c.cauchy.evaluate(dens, k)
        F = self.boundary_density(phi_bd)
        C = _circle_matrix(c.quad, k.ravel())
        t2 = np.einsum("pj,jab->pab", C, F).reshape(k.shape + (2, 2))
        return t1 + t2

    # real stacking for Krylov solvers
    def pack(self, ext, bd):
        v = np.concatenate([np.ravel(ext), np.ravel(bd)])
        return np.concatenate([v.real, v.imag])

    def unpack(self, x):
        n = x.size // 2
        v = x[:n] + 1j * x[n:]
        ne = self.c.n_ext * 4
        return v[:ne].reshape(self.shape_ext), v[ne:].reshape(self.c.m, 2, 2)

    def linear_operator(self):
        n = 2 * 4 * (self.c.n_ext + self.c.m)

        def mv(x):
            e, b = self.unpack(x)
            te, tb = self.apply(e, b)
            return x + self.pack(te, tb)

        return LinearOperator((n, n), matvec=mv, dtype=float)


@dataclass
class DbarSolution:
    z: complex
    w_ext: np.ndarray = field(repr=False)
    w_bd: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    converged: bool
    op: TzOperator | None = field(default=None, repr=False)

    def v_at(self, k):
        """``v'(z, k) = I - T_z v'`` at arbitrary exterior ``k``."""
        eye = np.eye(2)
        return eye - self.op.evaluate(self.w_ext + eye, self.w_bd + eye, k)


def solve_w(op: TzOperator, tol=1e-8, restart=80, maxiter=20) -> DbarSolution:
    """Solve ``(I + T_z) w = -T_z I`` by restarted GMRES on the real-stacked unknowns."""
    eye = np.eye(2)
    Ie = np.broadcast_to(eye, op.shape_ext)
    Ib = np.broadcast_to(eye, (op.c.m, 2, 2))
    te, tb = op.apply(Ie, Ib)
    rhs = -op.pack(te, tb)
    nrm = np.linalg.norm(rhs)
    if nrm == 0.0:
        z0 = np.zeros(op.shape_ext, dtype=complex)
        return DbarSolution(op.z, z0, np.zeros((op.c.m, 2, 2), complex), 0.0, 0, True, op)
    A = op.linear_operator()
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(A, rhs, rtol=tol, atol=0.0, restart=restart, maxiter=maxiter,
                    callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(A.matvec(x) - rhs) / nrm)
    e, b = op.unpack(x)
    ok = info == 0 and res < 10 * tol
    if not ok:
        log.warning("solvability failure at z=%s: residual %.2e", op.z, res)
    return DbarSolution(op.z, e, b, res, count[0], ok, op)


# ---------------------------------------------------------------------------
# psi, Q and gamma

def recover_psi(v, k, z):
    """``psi = [exp(i conj(k) z/2) C Pd + exp(-i conj(z) k/2) Po] v`` entrywise."""
    return op_A_star(k, z, v)


def mu_from_v(v, k, z):
    """Invert the phase/conjugation pattern of ``v``: diagonal conjugated, off-diagonal de-phased."""
    v = np.asarray(v)
    ph = np.exp(-1j * np.real(np.conj(k) * z))
    mu = np.empty_like(v)
    mu[..., 0, 0] = np.conj(v[..., 0, 0])
    mu[..., 1, 1] = np.conj(v[..., 1, 1])
    mu[..., 0, 1] = v[..., 0, 1] * ph
    mu[..., 1, 0] = v[..., 1, 0] * ph
    return mu


@dataclass
class ReconstructionResult:
    gamma_hat: ComplexGrid2D
    Q_hat: PotentialField
    z_nodes: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    diag_residual: float
    crosscheck: float
    metrics: dict = field(default_factory=dict)
    # mu(z, k) at the reconstruction k-nodes, shape (n, n, n_k, 2, 2); nan where not solved
    mu_k: np.ndarray | None = field(default=None, repr=False)
    ks: np.ndarray | None = None

    @property
    def failures(self):
        return int(np.count_nonzero(~self.converged))


def reconstruct_Q(mu_k, ks, half_width, det_floor=1e-3):
    """Average ``exp(i Re(conj(k) z)) dbar(mu) conj(mu)^-1`` over the sampled ``k``.

    ``mu_k`` has shape ``(n, n, nk, 2, 2)`` with ``nan`` where not computed; the
    z-derivative is a fourth-order finite difference.  Returns ``(Q12, Q21,
    diag_residual)`` where the last is the ratio of the diagonal to the
    off-diagonal content.
    """
    n = mu_k.shape[0]
    h = 2 * half_width / n
    z = grid_points(half_width, n)
    acc = np.zeros((n, n, 2, 2), dtype=complex)
    cnt = np.zeros((n, n))
    for j, k in enumerate(ks):
        mu = mu_k[:, :, j]
        dmu = np.empty_like(mu)
        for a in range(2):
            for b in range(2):
                dmu[..., a, b] = dbar_fd4(mu[..., a, b], h)
        cm = np.conj(mu)
        det = cm[..., 0, 0] * cm[..., 1, 1] - cm[..., 0, 1] * cm[..., 1, 0]
        ok = np.isfinite(det) & np.all(np.isfinite(dmu), axis=(-1, -2)) & (np.abs(det) > det_floor)
        inv = np.empty_like(cm)
        inv[..., 0, 0], inv[..., 1, 1] = cm[..., 1, 1], cm[..., 0, 0]
        inv[..., 0, 1], inv[..., 1, 0] = -cm[..., 0, 1], -cm[..., 1, 0]
        inv /= np.where(ok, det, 1.0)[..., None, None]
        q = np.exp(1j * np.real(np.conj(k) * z))[..., None, None] * np.einsum("xyab,xybc->xyac", dmu, inv)
        acc[ok] += q[ok]
        cnt[ok] += 1
    Qh = np.where(cnt[..., None, None] > 0, acc / np.maximum(cnt, 1)[..., None, None], 0.0)
    off = np.abs(Qh[..., 0, 1]) ** 2 + np.abs(Qh[..., 1, 0]) ** 2
    dg = np.abs(Qh[..., 0, 0]) ** 2 + np.abs(Qh[..., 1, 1]) ** 2
    ratio = float(np.sqrt(dg.sum() / off.sum())) if off.sum() > 0 else 0.0
    return Qh[..., 0, 1], Qh[..., 1, 0], ratio


def reconstruct_gamma(Q_hat: PotentialField, warn_above=0.05):
    """``log gamma = -2 d^-1 Q12``; also returns the relative discrepancy of ``-2 dbar^-1 conj(Q21)``."""
    from .field import inverse_d_spectral
    hw = Q_hat.half_width
    lg = -2.0 * inverse_d_spectral(Q_hat.Q12.values, hw)
    lg2 = -2.0 * inverse_d_spectral(np.conj(Q_hat.Q21.values), hw, bar=True)
    scale = max(np.abs(lg).max(), 1e-300)
    disc = float(np.abs(lg - lg2).max() / scale) if np.abs(lg).max() > 0 else 0.0
    if disc > warn_above:
        log.warning("inconsistent Q-hat: log-gamma cross-check differs by %.2e", disc)
    return ComplexGrid2D(hw, Q_hat.n, np.exp(lg)), disc


def reconstruction_nodes(half_width, n, radius=1.0, pad=2):
    """Grid indices needed to differentiate on ``|z| <= radius`` (with ``pad`` extra nodes)."""
    h = 2 * half_width / n
    z = grid_points(half_width, n)
    return np.nonzero(np.abs(z) <= radius + pad * h * np.sqrt(2) + 1e-12)


def reconstruct(data: ScatteringData, half_width=2.0, n=64, radius=1.0, n_k=8, tol=1e-8,
                cache: TzCache | None = None, progress=None) -> ReconstructionResult:
    """Solve the integral equation at every needed z-node and rebuild ``Q`` and ``gamma``."""
    cache = cache or TzCache(data)
    ks = data.layout.rec_nodes(n_k)
    ix, iy = reconstruction_nodes(half_width, n, radius)
    z = grid_points(half_width, n)
    mu_k = np.full((n, n, n_k, 2, 2), np.nan, dtype=complex)
    res = np.zeros(ix.size)
    its = np.zeros(ix.size, dtype=int)
    conv = np.ones(ix.size, dtype=bool)
    for p, (i, j) in enumerate(zip(ix, iy)):
        zz = z[i, j]
        sol = solve_w(cache.operator(zz), tol=tol)
        res[p], its[p], conv[p] = sol.residual, sol.iterations, sol.converged
        if sol.converged:
            mu_k[i, j] = mu_from_v(sol.v_at(ks), ks, zz)
        if progress is not None:
            progress(p, ix.size)
    if not conv.all():
        _fill_failures(mu_k, ix, iy, conv)
    inside = np.abs(z) <= radius
    q12, q21, diag = reconstruct_Q(mu_k, ks, half_width)
    q12 = np.where(inside, q12, 0.0)
    q21 = np.where(inside, q21, 0.0)
    Qh = PotentialField.from_arrays(q12, q21, half_width, min(radius, half_width / 2))
    g, disc = reconstruct_gamma(Qh)
    return ReconstructionResult(g, Qh, z[ix, iy], res, its, conv, diag, disc, mu_k=mu_k, ks=ks)


def _fill_failures(mu_k, ix, iy, conv):
    """Replace unsolved nodes by the mean of solved 4-neighbours (interpolation only)."""
    n = mu_k.shape[0]
    for i, j in zip(ix[~conv], iy[~conv]):
        nb = [(i + a, j + b) for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1))
              if 0 <= i + a < n and 0 <= j + b < n]
        vals = [mu_k[p] for p in nb if np.all(np.isfinite(mu_k[p]))]
        if len(vals) >= 2:
            mu_k[i, j] = np.mean(vals, axis=0)


# ---------------------------------------------------------------------------
# homotopy in the contrast

def condition_estimate(op: TzOperator, probes=4, seed=0, tol=1e-10):
    """Randomised estimate of ``cond(I + T_z)`` from forward and inverse probes."""
    A = op.linear_operator()
    rng = np.random.default_rng(seed)
    big, small = 0.0, 0.0
    for _ in range(probes):
        x = rng.standard_normal(A.shape[0])
        x /= np.linalg.norm(x)
        big = max(big, np.linalg.norm(A.matvec(x)))
        y, _ = gmres(A, x, rtol=tol, atol=0.0, restart=80, maxiter=20)
        small = max(small, np.linalg.norm(y))
    return big * small


@dataclass
class SweepReport:
    scales: np.ndarray
    probes: np.ndarray
    solvable: np.ndarray
    condition: np.ndarray
    residual: np.ndarray
    w_norm: np.ndarray

    def isolated_failures_only(self):
        bad = ~self.solvable
        return not np.any(bad[1:] & bad[:-1])

    def max_relative_jump(self):
        c = np.log(self.condition)
        return float(np.abs(np.diff(c, axis=0)).max()) if c.shape[0] > 1 else 0.0

    def to_dict(self):
        return {"scales": self.scales.tolist(),
                "probes": [[p.real, p.imag] for p in self.probes],
                "solvable": self.solvable.tolist(), "condition": self.condition.tolist(),
                "residual": self.residual.tolist(), "w_norm": self.w_norm.tolist()}


def homotopy_sweep(Q: PotentialField, scales, probes, layout: SpectralLayout, tol=1e-8,
                   assemble=None) -> SweepReport:
    """Solvability map of the integral equation for ``a Q`` over ``a`` and probe points."""
    from .scattering import assemble_scattering
    assemble = assemble or assemble_scattering
    scales = np.asarray(scales, float)
    probes = np.asarray(probes, complex)
    shape = (scales.size, probes.size)
    ok = np.zeros(shape, bool)
    cond = np.zeros(shape)
    res = np.zeros(shape)
    wn = np.zeros(shape)
    W = build_W(layout)
    for i, a in enumerate(scales):
        data = assemble(Q.scaled(a), layout)
        cache = TzCache(data, W)
        for j, z in enumerate(probes):
            op = cache.operator(z)
            sol = solve_w(op, tol=tol)
            ok[i, j] = sol.converged
            res[i, j] = sol.residual
            wn[i, j] = np.sqrt(np.sum(np.abs(sol.w_ext) ** 2) + np.sum(np.abs(sol.w_bd) ** 2))
            cond[i, j] = condition_estimate(op)
    return SweepReport(scales, probes, ok, cond, res, wn)
