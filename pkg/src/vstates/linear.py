"""Linearizations of the residual around a boundary map."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .quadrature import contour_sum, differences, with_diagonal
from .residual import compute_G, log_integral
from .spectral import (
    BoundaryGrid,
    ComplexArray,
    CosineModes,
    FloatArray,
    ModeVector,
    default_grid_size,
    project_cosine,
    project_sine,
    synthesize,
)

Unknowns = Literal["coeffs", "pinned", "augmented"]

DEFAULT_STEP = 1e-6


@dataclass(frozen=True)
class JacobianMatrix:
    matrix: FloatArray
    unknowns: Unknowns
    labels: tuple[str, ...]
    step: float
    lam: float
    mv: ModeVector

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape  # type: ignore[return-value]


@dataclass(frozen=True)
class MultiplierSpectrum:
    fold: int
    lam: float
    frequencies: np.ndarray
    f_multipliers: FloatArray  # on cos(n theta) per unit b_{n-1}
    g_multipliers: FloatArray  # on sin(n theta) per unit b_{n-1}

    def zeros(self, atol: float = 1e-12) -> np.ndarray:
        return self.frequencies[np.abs(self.g_multipliers) <= atol]


def sine_residual(lam: float, mv: ModeVector, N: int) -> FloatArray:
    grid = synthesize(mv, N, derivs=1)
    return project_sine(compute_G(lam, grid), mv.fold, mv.trunc).coeffs


def _labels(mv: ModeVector, unknowns: Unknowns) -> tuple[str, ...]:
    names = [f"a{p}" for p in mv.powers]
    if unknowns == "coeffs":
        return tuple(names)
    if unknowns == "pinned":
        return tuple(names[1:] + ["lambda"])
    return tuple(names + ["lambda"])


def jacobian_fd(
    lam: float,
    mv: ModeVector,
    unknowns: Unknowns = "coeffs",
    step: float = DEFAULT_STEP,
    N: int | None = None,
) -> JacobianMatrix:
    """Central-difference Jacobian of the sine-projected residual G."""
    if N is None:
        N = default_grid_size(mv.fold, mv.trunc)
    labels = _labels(mv, unknowns)
    reach = mv.derivative_bound + step * max(1.0, float(np.abs(mv.coeffs).max())) * mv.powers.sum()
    if reach >= 1.0:
        raise ValueError("finite-difference stencil leaves the certified conformal region")

    cols = []
    for name in labels:
        if name == "lambda":
            h = step * max(1.0, abs(lam))
            if not (0.0 < lam - h and lam + h < 1.0):
                raise ValueError("lambda stencil leaves (0, 1)")
            plus = sine_residual(lam + h, mv, N)
            minus = sine_residual(lam - h, mv, N)
        else:
            i = labels.index(name) + (1 if unknowns == "pinned" else 0)
            h = step * max(1.0, abs(mv.coeffs[i]))
            e = np.zeros(mv.trunc)
            e[i] = h
            plus = sine_residual(lam, mv.with_coeffs(mv.coeffs + e), N)
            minus = sine_residual(lam, mv.with_coeffs(mv.coeffs - e), N)
        col = (plus - minus) / (2 * h)
        if not np.isfinite(col).all():
            raise FloatingPointError(f"non-finite residual while differentiating {name}")
        cols.append(col)
    return JacobianMatrix(np.column_stack(cols), unknowns, labels, step, lam, mv)


def linearize_at_zero(lam: float, fold: int, trunc: int) -> MultiplierSpectrum:
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    n = fold * np.arange(1, trunc + 1)
    return MultiplierSpectrum(
        fold=fold,
        lam=lam,
        frequencies=n,
        f_multipliers=2.0 * (lam - 1.0 / n),
        g_multipliers=1.0 - n * lam,
    )


def perturbation(h: ModeVector, N: int, order: int = 1) -> tuple[ComplexArray, ...]:
    """Values of h and its first ``order`` w-derivatives on the grid."""
    g = synthesize(h, N, derivs=max(order, 1))
    vals = [g.phi - g.w, g.dphi - 1.0]
    vals += [g.derivative(k) for k in range(2, order + 1)]
    return tuple(vals[: order + 1])


def gateaux_terms(grid: BoundaryGrid, h: ModeVector) -> dict[str, ComplexArray]:
    """The four integrals A, B, C, D of the directional derivative of S.

    C and D follow the textbook definitions with kernel
    ``(h(w) - h(tau))/(Phi(tau) - Phi(w))`` and density ``conj(Phi)/Phi h Phi'``;
    they enter the derivative with a minus sign (see ``gateaux_dS``).
    """
    hv, dh = perturbation(h, grid.size, order=1)
    w = grid.w
    A = log_integral(grid, np.conj(hv) * grid.dphi)
    B = log_integral(grid, np.conj(grid.phi) * dh)
    dphi, _ = differences(grid)
    kernel = (hv[:, None] - hv[None, :]) / dphi
    kernel = with_diagonal(kernel, -dh / grid.dphi)
    C = contour_sum(kernel, np.conj(grid.phi) * grid.dphi, w)
    D = np.sum(np.conj(grid.phi) / grid.phi * hv * grid.dphi * w) / w.size
    return {"A": A, "B": B, "C": C, "D": np.full_like(A, D)}


def gateaux_dS(grid: BoundaryGrid, h: ModeVector) -> ComplexArray:
    """``d/dt S(f + t h)`` at t = 0."""
    t = gateaux_terms(grid, h)
    # d/dt log(1 - Phi(w)/Phi(tau)) = -(h(w)-h(tau))/(Phi(tau)-Phi(w)) - h(tau)/Phi(tau)
    return t["A"] + t["B"] - t["C"] - t["D"]


def transversality(fold: int, trunc: int, N: int | None = None) -> tuple[FloatArray, CosineModes]:
    """Mixed derivative in (f, lambda) at (1/m, 0) applied to the kernel generator."""
    if N is None:
        N = default_grid_size(fold, trunc)
    h = ModeVector.single(fold, trunc, 1.0)
    hv, = perturbation(h, N, order=0)
    w = np.exp(2j * np.pi * np.arange(N) / N)
    vals = 2.0 * np.real(hv * np.conj(w))
    return vals, project_cosine(vals, fold, trunc)


def solve_range_equation(target: CosineModes) -> ModeVector:
    """Preimage of a cosine series under the linearization at (1/m, 0).

    Coefficient ``beta`` of ``cos(n theta)`` maps back to
    ``b_{n-1} = beta * m n / (2 (n - m))``; the frequency n = m is not in the
    range and must be absent from ``target``.
    """
    m = target.fold
    beta = np.asarray(target.coeffs, dtype=np.float64)
    if beta[0] != 0.0:
        raise ValueError(f"cos({m} theta) is not in the range of the linearization")
    n = m * np.arange(1, beta.size + 1)
    b = np.zeros_like(beta)
    b[1:] = beta[1:] * m * n[1:] / (2.0 * (n[1:] - m))
    return ModeVector(m, b)
