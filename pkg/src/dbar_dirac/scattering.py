"""Generalised scattering data ``h(s, k)``: volumetric and contour evaluation."""

from __future__ import annotations

import logging
from functools import partial
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .field import CircleQuadrature
from .forward import (ExceptionalPointError, LayoutError, PotentialField, ScatteringSolution,
                      SpectralLayout, solve_mu)
from .phantom import BoundaryTrace

log = logging.getLogger(__name__)

_NORM = 1.0 / (2.0 * np.pi) ** 2


@dataclass(frozen=True)
class ScatteringData:
    """``h_diag[r, t]`` = off-diagonal part of ``h(k, k)`` at exterior node ``(r, t)``;
    ``h_bd[a, b] = h(s_a, s_b)`` for ``dD`` nodes ``s_a``, ``s_b``."""

    layout: SpectralLayout
    h_diag: np.ndarray = field(repr=False)
    h_bd: np.ndarray = field(repr=False)
    provenance: str = "volumetric"
    truncation_radius: float | None = None

    def __post_init__(self):
        L = self.layout
        if self.h_diag.shape != (L.n_radial, L.n_theta, 2, 2):
            raise ValueError(f"h_diag has shape {self.h_diag.shape}")
        if self.h_bd.shape != (L.m, L.m, 2, 2):
            raise ValueError(f"h_bd has shape {self.h_bd.shape}")
        if np.any(self.h_diag[..., 0, 0]) or np.any(self.h_diag[..., 1, 1]):
            raise ValueError("h_diag must be off-diagonal")

    @classmethod
    def zero(cls, layout):
        return cls(layout, np.zeros((layout.n_radial, layout.n_theta, 2, 2), complex),
                   np.zeros((layout.m, layout.m, 2, 2), complex), "volumetric")

    def is_zero(self):
        return not (np.any(self.h_diag) or np.any(self.h_bd))

    def radial_profile(self):
        """Max off-diagonal modulus of ``h_diag`` per exterior radius."""
        return np.abs(self.h_diag).max(axis=(1, 2, 3))


def offdiag(M):
    out = np.array(M, dtype=complex, copy=True)
    out[..., 0, 0] = 0.0
    out[..., 1, 1] = 0.0
    return out


def _density(Q: PotentialField, sol: ScatteringSolution):
    """``Q conj(mu)`` on the grid (only the off-diagonal/diagonal pattern survives)."""
    mu = sol.mu.values
    d = np.zeros_like(mu)
    d[..., 0, :] = Q.Q12.values[..., None] * np.conj(mu[..., 1, :])
    d[..., 1, :] = Q.Q21.values[..., None] * np.conj(mu[..., 0, :])
    return d


def h_volumetric(Q: PotentialField, sol: ScatteringSolution, s) -> np.ndarray:
    """``h(s, k) = (2 pi)^-2 \\iint exp(-i (k conj(z) + conj(s) z)/2) Q conj(mu) dxdy``.

    ``s`` may be an array; the result then has shape ``s.shape + (2, 2)``.
    """
    s = np.asarray(s, dtype=complex)
    z = Q.z
    mask = np.abs(z) <= Q.support_radius
    pts = z[mask]
    dens = _density(Q, sol)[mask].reshape(-1, 4)
    lead = np.exp(-0.5j * sol.k * np.conj(pts))
    waves = np.exp(-0.5j * np.conj(s.ravel())[:, None] * pts[None, :])
    out = (waves * lead[None, :]) @ dens * (Q.h ** 2 * _NORM)
    return out.reshape(s.shape + (2, 2))


def h_bd_volumetric(Q: PotentialField, sols, nodes, backend="auto"):
    """``h(s_a, k_b)`` for solutions ``sols[b]`` and first arguments ``nodes[a]``."""
    z = Q.z
    mask = np.abs(z) <= Q.support_radius
    pts = z[mask]
    ks = np.array([s.k for s in sols])
    out = np.empty((len(nodes), len(sols), 2, 2), dtype=complex)
    dens = np.stack([_density(Q, s)[mask] for s in sols], axis=1)  # (pts, b, 2, 2)
    for r in range(2):
        for c in range(2):
            ps = _kernels.phase_sum(ks, nodes, pts, dens[:, :, r, c], backend=backend)
            out[:, :, r, c] = ps.T
    return out * (Q.h ** 2 * _NORM)


def psi_on_circle(Q: PotentialField, sol: ScatteringSolution, quad: CircleQuadrature,
                  normalised=False) -> BoundaryTrace:
    """``psi(z, k)`` at the nodes of ``quad`` (outside the support) from the grid sources.

    With ``normalised=True`` returns ``mu = psi exp(-i conj(k) z/2)`` instead,
    which stays bounded for large ``|k|``.
    """
    k = sol.k
    z = Q.z
    mask = np.abs(z) <= Q.support_radius
    pts = z[mask]
    dens = _density(Q, sol)[mask].reshape(-1, 4)
    # psi(z) = e^{i kb z/2} [ I + sum_u h^2 e^{-i Re(kb u)} (Q conj mu)(u) / (pi (z - u)) ]
    # (the phases of psi and conj(psi) combine into exp(-i Re(conj(k) u)))
    w = np.exp(-1j * np.real(np.conj(k) * pts)) * Q.h ** 2 / np.pi
    tg = quad.nodes
    if np.any(np.abs(tg[:, None] - pts[None, :]) < 0.5 * Q.h):
        raise ValueError("boundary nodes too close to the potential support")
    vals = np.stack([_kernels.cauchy_sum(tg, pts, w * dens[:, c]) for c in range(4)], axis=1)
    mu = vals.reshape(-1, 2, 2) + np.eye(2)
    if not normalised:
        mu = mu * np.exp(0.5j * np.conj(k) * tg)[:, None, None]
    return BoundaryTrace(mu, quad, k)


def h_contour(trace: BoundaryTrace, s, normalised=False) -> np.ndarray:
    """``h(s, k)`` from boundary values of ``psi(., k)`` on ``dO``.

    Green's formula gives ``h = (1/(2i (2 pi)^2)) \\oint exp(-i conj(s) z/2) psi(z, k) dz``.
    If ``trace`` holds ``mu`` rather than ``psi`` pass ``normalised=True``.
    """
    s = np.asarray(s, dtype=complex)
    q = trace.quad
    zn = q.nodes
    vals = np.asarray(trace.values).reshape(q.m, -1)
    kb = np.conj(trace.k)
    # exp(-i conj(s) z/2) psi = exp(i conj(k - s) z/2) mu
    shift = np.conj(s.ravel())[:, None] if not normalised else (np.conj(s.ravel())[:, None] - kb)
    waves = np.exp(-0.5j * shift * zn[None, :]) * q.dz[None, :]
    out = waves @ vals * (_NORM / 2j)
    return out.reshape(s.shape + np.shape(trace.values)[1:])


def _exterior_h(source, path, tol, quad, k):
    is_Q = isinstance(source, PotentialField)
    if path == "volumetric":
        return offdiag(h_volumetric(source, _solve(source, k, tol), k))
    if is_Q:
        tr = psi_on_circle(source, _solve(source, k, tol), quad, normalised=True)
        return offdiag(h_contour(tr, k, normalised=True))
    return offdiag(h_contour(source.trace(k), k))


def _solve(Q, k, tol):
    try:
        return solve_mu(Q, k, tol=tol)
    except ExceptionalPointError as exc:
        raise LayoutError(f"layout node {k} is exceptional") from exc


def assemble_scattering(source, layout: SpectralLayout, path="volumetric", tol=1e-12,
                        progress=None, mapper=None) -> ScatteringData:
    """Fill ``h_diag`` on every exterior node and ``h_bd`` on all ``dD`` node pairs.

    ``source`` is a :class:`PotentialField` for ``path="volumetric"`` (and for
    ``"contour"`` with forward-computed traces), or any object with a
    ``trace(k) -> BoundaryTrace`` method (the D-t-N route) for ``"contour"``.
    ``mapper`` is an order-preserving ``map`` replacement (e.g. a process pool's)
    used for the exterior nodes; results are placed by index, so the output does
    not depend on it.
    """
    ext = layout.exterior_nodes
    bd = layout.boundary.nodes
    if path not in ("volumetric", "contour"):
        raise ValueError(f"unknown path {path!r}")
    is_Q = isinstance(source, PotentialField)
    if is_Q and source.is_zero():
        return ScatteringData.zero(layout)
    quad = getattr(source, "quad", None) or CircleQuadrature(0j, 1.0, 256)
    task = partial(_exterior_h, source, path, tol, quad)
    ks = ext.ravel()
    if mapper is None:
        hs = []
        for idx, k in zip(np.ndindex(ext.shape), ks):
            hs.append(task(k))
            if progress is not None:
                progress(idx)
    else:
        hs = list(mapper(task, ks))
    h_diag = np.asarray(hs, dtype=complex).reshape(ext.shape + (2, 2))
    if path == "volumetric":
        sols = [_solve(source, k, tol) for k in bd]
        h_bd = h_bd_volumetric(source, sols, bd)
    else:
        h_bd = np.empty((bd.size, bd.size, 2, 2), dtype=complex)
        for b, k in enumerate(bd):
            tr = psi_on_circle(source, _solve(source, k, tol), quad) if is_Q else source.trace(k)
            h_bd[:, b] = h_contour(tr, bd)
    return ScatteringData(layout, h_diag, h_bd, path)


def truncate(data: ScatteringData, R) -> ScatteringData:
    """Zero ``h_diag`` outside ``|k| <= R``."""
    L = data.layout
    if R >= L.R_max:
        return replace(data, truncation_radius=None if data.truncation_radius is None
                       else data.truncation_radius)
    if R < L.A:
        log.warning("truncation radius %.3g below A=%.3g: exterior data emptied", R, L.A)
    keep = (L.exterior.radii <= R)[:, None, None, None]
    return replace(data, h_diag=np.where(keep, data.h_diag, 0.0), truncation_radius=float(R))
