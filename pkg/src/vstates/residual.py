"""Nonlinear functionals of the boundary map evaluated on the circle grid.

``compute_G`` is the residual used by the solver: it involves only bounded
kernels.  ``compute_F`` (log kernel) is kept as an independent check; on any
input ``G == 0.5 * dF/dtheta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadrature import (
    contour_sum,
    differences,
    pair_with_log,
    principal_value,
    with_diagonal,
)
from .spectral import BoundaryGrid, ComplexArray, FloatArray


class BranchCutError(ValueError):
    """The logarithm split used for the log-kernel integrals is invalid."""


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def compute_I1(grid: BoundaryGrid) -> ComplexArray:
    """``(1/2 pi i) int conj(dPhi)/dPhi Phi'(tau) dtau`` at every node."""
    dphi, _ = differences(grid)
    kernel = np.conj(dphi) / dphi
    # conj(tau - w)/(tau - w) -> -1/w^2 on the circle
    kernel = with_diagonal(kernel, -np.conj(grid.dphi) / (grid.w**2 * grid.dphi))
    return contour_sum(kernel, grid.dphi, grid.w)


def compute_G(lam: float, grid: BoundaryGrid, I1: ComplexArray | None = None) -> FloatArray:
    """Differentiated rotating-frame equation ``Im{w Phi' [(1-lam) conj(Phi) + I1]}``."""
    _check_lambda(lam)
    if I1 is None:
        I1 = compute_I1(grid)
    return np.imag(grid.w * grid.dphi * ((1.0 - lam) * np.conj(grid.phi) + I1))


def log_integral(grid: BoundaryGrid, density: ComplexArray) -> ComplexArray:
    """``(1/2 pi i) int g(tau) log(1 - Phi(w)/Phi(tau)) dtau`` for band-limited g.

    The logarithm is split as
    ``log(dPhi/dtau) + log(1 - w/tau) - log(Phi(tau)/tau)``; the outer terms
    are smooth, the middle one is paired exactly in frequency space.
    """
    dphi, dtau = differences(grid)
    ratio = dphi / dtau
    np.fill_diagonal(ratio, grid.dphi)
    if np.any(ratio.real <= 0.0):
        raise BranchCutError("Re((Phi(tau)-Phi(w))/(tau-w)) <= 0 somewhere on the grid")
    outer = grid.phi / grid.w
    if np.any(outer.real <= 0.0):
        raise BranchCutError("Re(Phi(tau)/tau) <= 0 somewhere on the grid")
    w = grid.w
    first = contour_sum(np.log(ratio), density, w)
    middle = pair_with_log(density, w)
    last = np.sum(density * w * np.log(outer)) / w.size
    return first + middle - last


def compute_S(grid: BoundaryGrid) -> ComplexArray:
    return log_integral(grid, np.conj(grid.phi) * grid.dphi)


def compute_mean(lam: float, grid: BoundaryGrid, S: ComplexArray) -> float:
    return float(np.mean(lam * np.abs(grid.phi) ** 2 + 2.0 * S.real))


def compute_F(lam: float, grid: BoundaryGrid, S: ComplexArray | None = None) -> FloatArray:
    _check_lambda(lam)
    if S is None:
        S = compute_S(grid)
    vals = lam * np.abs(grid.phi) ** 2 + 2.0 * S.real
    return vals - vals.mean()


def pv_cauchy_derivative(grid: BoundaryGrid) -> ComplexArray:
    """p.v. ``(1/2 pi i) int Phi'(tau)/(Phi(tau) - Phi(w)) dtau`` (equals 1/2)."""
    dphi, _ = differences(grid)
    kernel = grid.dphi[None, :] / dphi
    residue = np.ones_like(grid.w)
    return principal_value(kernel, residue, grid.d2phi / (2 * grid.dphi), grid)


def t_of_one(grid: BoundaryGrid) -> ComplexArray:
    """p.v. ``(1/2 pi i) int dtau/(Phi(tau) - Phi(w))``; equals ``1 - 1/(2 Phi'(w))``."""
    dphi, _ = differences(grid)
    kernel = 1.0 / dphi
    residue = 1.0 / grid.dphi
    return principal_value(kernel, residue, -grid.d2phi / (2 * grid.dphi**2), grid)


@dataclass
class ResidualSample:
    lam: float
    grid: BoundaryGrid
    I1: ComplexArray
    G: FloatArray
    S: ComplexArray | None = None
    F: FloatArray | None = None
    mean: float | None = None

    @property
    def omega(self) -> float:
        return 0.5 * (1.0 - self.lam)


def sample(lam: float, grid: BoundaryGrid, with_log: bool = False) -> ResidualSample:
    I1 = compute_I1(grid)
    out = ResidualSample(lam, grid, I1, compute_G(lam, grid, I1))
    if with_log:
        out.S = compute_S(grid)
        out.mean = compute_mean(lam, grid, out.S)
        out.F = compute_F(lam, grid, out.S)
    return out
