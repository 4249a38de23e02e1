"""Trapezoid rules for contour integrals over the unit circle.

Every integral here has the form ``(1/2 pi i) int_T k(tau, w) dtau`` evaluated
at the grid nodes w_j.  With ``dtau = i tau dtheta`` the uniform trapezoid rule
becomes ``(1/N) sum_k k(tau_k, w_j) tau_k``.  Kernels with a removable
singularity on the diagonal get their continuous limit at tau = w; kernels
with a simple pole are split into ``c(w)/(tau - w)`` plus a smooth remainder,
and the principal value of the pole part is ``c(w)/2``.
"""

from __future__ import annotations

import numpy as np

from .spectral import BoundaryGrid, ComplexArray


class DegenerateGridError(ValueError):
    """Two distinct nodes map to the same boundary point."""


def differences(grid: BoundaryGrid) -> tuple[ComplexArray, ComplexArray]:
    """``Phi(tau_k) - Phi(w_j)`` and ``tau_k - w_j`` with rows j, columns k.

    The diagonal is set to 1 so that callers can divide freely and then
    overwrite it with the analytic limit.
    """
    phi, w = grid.phi, grid.w
    dphi = phi[None, :] - phi[:, None]
    dtau = w[None, :] - w[:, None]
    np.fill_diagonal(dphi, 1.0)
    np.fill_diagonal(dtau, 1.0)
    scale = np.abs(dtau)
    if np.any(np.abs(dphi) < 1e-13 * scale):
        raise DegenerateGridError("boundary map is not injective on the grid")
    return dphi, dtau


def contour_sum(kernel: ComplexArray, density: ComplexArray, w: ComplexArray) -> ComplexArray:
    """Row-wise trapezoid of ``(1/2 pi i) int kernel(tau, w) density(tau) dtau``."""
    return (kernel @ (density * w)) / w.size


def with_diagonal(kernel: ComplexArray, diag: ComplexArray) -> ComplexArray:
    np.fill_diagonal(kernel, diag)
    return kernel


def principal_value(
    kernel: ComplexArray,
    residue: ComplexArray,
    remainder_diag: ComplexArray,
    grid: BoundaryGrid,
) -> ComplexArray:
    """p.v. of ``(1/2 pi i) int kernel dtau`` for a kernel with a simple pole.

    ``kernel`` must hold the off-diagonal values; ``residue`` is c(w) in
    ``kernel ~ c(w)/(tau - w)`` and ``remainder_diag`` the diagonal value of
    ``kernel - c(w)/(tau - w)``.
    """
    w = grid.w
    dtau = w[None, :] - w[:, None]
    np.fill_diagonal(dtau, 1.0)
    smooth = kernel - residue[:, None] / dtau
    np.fill_diagonal(smooth, remainder_diag)
    return contour_sum(smooth, np.ones_like(w), w) + 0.5 * residue


def laurent_coefficients(values: ComplexArray) -> ComplexArray:
    """``c_k`` with ``values_j = sum_k c_k w_j^k``; index k taken mod N."""
    return np.fft.fft(values) / values.size


def pair_with_log(density: ComplexArray, w: ComplexArray) -> ComplexArray:
    """Exact ``(1/2 pi i) int g(tau) log(1 - w/tau) dtau`` for band-limited g.

    Uses ``log(1 - w/tau) = -sum_{k>=1} w^k tau^{-k} / k`` so the integral is
    ``-sum_k w^k ghat_{k-1} / k``.
    """
    N = w.size
    ghat = laurent_coefficients(density)
    c = np.zeros(N, dtype=np.complex128)
    k = np.arange(1, N // 2)
    c[k] = -ghat[k - 1] / k
    return np.fft.ifft(c) * N
