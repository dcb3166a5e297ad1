"""Pairwise kernels that dominate direct (non-FFT) evaluations.

Every public function takes a ``backend`` argument: ``"auto"`` picks the
faster path measured in ``benchmarks/bench_kernels.py``, ``"numba"`` forces the
compiled loop (when available) and ``"numpy"`` the vectorised twin.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

_CHUNK = 2048


@njit
def _cauchy_sum_loop(targets, sources, weights, out):
    nt = targets.shape[0]
    ns = sources.shape[0]
    for i in range(nt):
        acc = 0j
        t = targets[i]
        for j in range(ns):
            d = t - sources[j]
            if d != 0:
                acc += weights[j] / d
        out[i] = acc
    return out


def _cauchy_sum_numpy(targets, sources, weights, out):
    for start in range(0, targets.shape[0], _CHUNK):
        t = targets[start:start + _CHUNK, None]
        d = t - sources[None, :]
        zero = d == 0
        d[zero] = 1.0
        terms = weights[None, :] / d
        terms[zero] = 0.0
        out[start:start + _CHUNK] = terms.sum(axis=1)
    return out


def cauchy_sum(targets, sources, weights, backend="auto"):
    """``sum_j weights[j] / (targets[i] - sources[j])``, coincident pairs skipped."""
    targets = np.ascontiguousarray(targets, dtype=complex).ravel()
    sources = np.ascontiguousarray(sources, dtype=complex).ravel()
    weights = np.ascontiguousarray(weights, dtype=complex).ravel()
    out = np.empty(targets.shape[0], dtype=complex)
    if backend in ("auto", "numba") and HAVE_NUMBA:
        return _cauchy_sum_loop(targets, sources, weights, out)
    return _cauchy_sum_numpy(targets, sources, weights, out)


@njit
def _cauchy_matrix_loop(points, out):
    n = points.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j:
                out[i, j] = 1.0 / (np.pi * (points[i] - points[j]))
            else:
                out[i, j] = 0.0
    return out


def _cauchy_matrix_numpy(points, out):
    d = points[:, None] - points[None, :]
    np.fill_diagonal(d, 1.0)
    out[:] = 1.0 / (np.pi * d)
    np.fill_diagonal(out, 0.0)
    return out


def cauchy_matrix(points, backend="auto"):
    """Dense ``1/(pi (z_i - z_j))`` with a zero diagonal."""
    points = np.ascontiguousarray(points, dtype=complex).ravel()
    out = np.empty((points.size, points.size), dtype=complex)
    if backend in ("auto", "numba") and HAVE_NUMBA:
        return _cauchy_matrix_loop(points, out)
    return _cauchy_matrix_numpy(points, out)


@njit
def _phase_sum_loop(a, b, pts, dens, out):
    # out[p, q] = sum_j exp(-1j*(a[p]*conj(pts[j]) + conj(b[q])*pts[j])/2) * dens[j, p]
    na = a.shape[0]
    nb = b.shape[0]
    npts = pts.shape[0]
    for p in range(na):
        for q in range(nb):
            acc = 0j
            for j in range(npts):
                z = pts[j]
                acc += np.exp(-0.5j * (a[p] * z.conjugate() + b[q].conjugate() * z)) * dens[j, p]
            out[p, q] = acc
    return out


def _phase_sum_numpy(a, b, pts, dens, out):
    left = np.exp(-0.5j * a[:, None] * np.conj(pts)[None, :]) * dens.T
    right = np.exp(-0.5j * np.conj(b)[None, :] * pts[:, None])
    out[:] = left @ right
    return out


def phase_sum(a, b, pts, dens, backend="auto"):
    """Bilinear plane-wave sum used for off-diagonal scattering data.

    ``out[p, q] = sum_j exp(-i (a_p conj(z_j) + conj(b_q) z_j) / 2) dens[j, p]``.
    The numpy path factorises the exponential and calls BLAS, which beats the
    triple loop by a wide margin, so ``"auto"`` picks it; ``"numba"`` forces the loop.
    """
    a = np.ascontiguousarray(a, dtype=complex).ravel()
    b = np.ascontiguousarray(b, dtype=complex).ravel()
    pts = np.ascontiguousarray(pts, dtype=complex).ravel()
    dens = np.ascontiguousarray(dens, dtype=complex).reshape(pts.size, a.size)
    out = np.empty((a.size, b.size), dtype=complex)
    if backend == "numba" and HAVE_NUMBA:
        return _phase_sum_loop(a, b, pts, dens, out)
    return _phase_sum_numpy(a, b, pts, dens, out)
