"""Regularity and shape diagnostics for a boundary map.

The checks are numerical shadows of the smoothness argument: the tangent
quotient identity that holds on exact solutions, the ladder of Taylor-kernel
integrals I_n with their derivative recursion, the p.v. value they rely on,
curvature/convexity, and spectral decay of the coefficients.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import factorial

import numpy as np

from .quadrature import contour_sum, differences, principal_value, with_diagonal
from .residual import compute_I1
from .spectral import (
    BoundaryGrid,
    ComplexArray,
    FloatArray,
    ModeVector,
    check_conformal,
    d_dw,
    evaluate,
    synthesize,
)

CONVEX_TOL = -1e-12


class VanishingDenominator(ValueError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(f"denominator of the tangent quotient vanishes at node {index} (|D|={value:.3g})")
        self.index = index


def compute_q(grid: BoundaryGrid, lam: float, I1: ComplexArray | None = None) -> tuple[ComplexArray, ComplexArray]:
    """Tangent quotient from the rotating-frame identity and from its definition."""
    if I1 is None:
        I1 = compute_I1(grid)
    top = (1.0 - lam) * np.conj(grid.phi) + I1
    bottom = np.conj(top)
    mag = np.abs(bottom)
    scale = max(1.0, float(np.abs(top).max()))
    if mag.min() <= 1e-14 * scale:
        j = int(np.argmin(mag))
        raise VanishingDenominator(j, float(mag[j]))
    q_formula = grid.w**2 * top / bottom
    q_direct = np.conj(grid.dphi) / grid.dphi
    return q_formula, q_direct


@dataclass(frozen=True)
class DenominatorReport:
    min_modulus: float
    bound: float
    smallness: bool
    smallness_lhs: float
    smallness_rhs: float


def denominator_margin(grid: BoundaryGrid, lam: float, I1: ComplexArray | None = None) -> DenominatorReport:
    if I1 is None:
        I1 = compute_I1(grid)
    D = (1.0 - lam) * grid.phi + np.conj(I1)
    mv = grid.mv
    lhs = mv.sup_bound + mv.derivative_bound
    rhs = lam / (4.0 + lam)
    return DenominatorReport(float(np.abs(D).min()), lam / 2.0, lhs <= rhs, lhs, rhs)


def compute_In(grid: BoundaryGrid, n: int) -> ComplexArray:
    """Taylor-kernel integral I_n; ``n = 1`` reproduces ``compute_I1``."""
    if n < 1:
        raise ValueError("level must be >= 1")
    if grid.max_order < n:
        raise ValueError(f"I_{n} needs Phi derivatives up to order {n}; grid has {grid.max_order}")
    dphi, dtau = differences(grid)
    np.fill_diagonal(dtau, 0.0)
    taylor = np.zeros_like(dphi)
    power = np.ones_like(dphi)
    for j in range(n):
        taylor += grid.derivs[j][:, None] * power / factorial(j)
        power = power * dtau
    remainder = grid.phi[None, :] - taylor
    if n >= 2:
        _refine_near_remainders(grid, n, dtau, remainder)
    kernel = np.conj(remainder) / dphi**n
    w, d1 = grid.w, grid.dphi
    diag = (-1) ** n * np.conj(grid.derivs[n]) * np.conj(w) ** (2 * n) / (factorial(n) * d1**n)
    kernel = with_diagonal(kernel, diag)
    return contour_sum(kernel, d1, w)


NEAR_CHORD = 0.1
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _refine_near_remainders(grid: BoundaryGrid, n: int, dtau: ComplexArray, remainder: ComplexArray) -> None:
    """Recompute Taylor remainders of close node pairs from the integral form.

    Subtracting the Taylor polynomial loses about ``n`` powers of the node
    spacing to cancellation; ``(tau-w)^n/(n-1)! int_0^1 (1-s)^{n-1}
    Phi^{(n)}(w + s(tau-w)) ds`` does not.
    """
    rows, cols = np.nonzero((np.abs(dtau) < NEAR_CHORD) & ~np.eye(dtau.shape[0], dtype=bool))
    if rows.size == 0:
        return
    s = 0.5 * (_GL_NODES + 1.0)
    wts = 0.5 * _GL_WEIGHTS * (1.0 - s) ** (n - 1) / factorial(n - 1)
    h = dtau[rows, cols]
    z = grid.w[rows][:, None] + s[None, :] * h[:, None]
    integral = evaluate(grid.mv, z, n) @ wts
    remainder[rows, cols] = h**n * integral


def check_In_recursion(grid: BoundaryGrid, n_max: int) -> dict[int, float]:
    """Sup-norm defects of the derivative recursion for I_1 .. I_{n_max}.

    Level 1 checks ``dI1/dw = Phi' I2 + conj(Phi')/w^2``; level n >= 2 checks
    ``dIn/dw = n Phi' I_{n+1}``.
    """
    ladder = {n: compute_In(grid, n) for n in range(1, n_max + 2)}
    w, d1 = grid.w, grid.dphi
    out = {}
    for n in range(1, n_max + 1):
        lhs = d_dw(ladder[n], w)
        if n == 1:
            rhs = d1 * ladder[2] + np.conj(d1) / w**2
        else:
            rhs = n * d1 * ladder[n + 1]
        out[n] = float(np.max(np.abs(lhs - rhs)))
    return out


def pv_sublemma(grid: BoundaryGrid, n: int) -> ComplexArray:
    """p.v. ``(1/2 pi i) int (tau-w)^n / dPhi^{n+1} Phi'(tau) dtau / tau^n``."""
    dphi, dtau = differences(grid)
    w, d1, d2 = grid.w, grid.dphi, grid.d2phi
    kernel = dtau**n / dphi ** (n + 1) * (d1 / w**n)[None, :]
    residue = 1.0 / (d1 * w) ** n
    remainder = residue * ((1 - n) * d2 / (2 * d1) - n / w)
    return principal_value(kernel, residue, remainder, grid)


def check_pv_sublemma(grid: BoundaryGrid, n: int) -> float:
    expected = -0.5 / (grid.dphi * grid.w) ** n
    return float(np.max(np.abs(pv_sublemma(grid, n) - expected)))


@dataclass(frozen=True)
class CurvatureProfile:
    kappa: FloatArray
    min_kappa: float
    convex: bool
    c2_proxy: float
    sufficient: bool


def curvature_profile(grid: BoundaryGrid) -> CurvatureProfile:
    kappa = np.real(1.0 + grid.w * grid.d2phi / grid.dphi) / np.abs(grid.dphi)
    c2 = grid.mv.c2_bound
    kmin = float(kappa.min())
    return CurvatureProfile(kappa, kmin, kmin >= CONVEX_TOL, c2, c2 < 0.5)


@dataclass(frozen=True)
class DecayFit:
    rho: float
    residual: float
    beta: float = 0.0
    points: int = 0
    indeterminate: bool = False


def decay_rate(
    mv: ModeVector,
    threshold: float = 1e-14,
    model: str = "darboux",
    skip_amplitude: bool = True,
) -> DecayFit:
    """Fit the decay of ``|a_{nm-1}|`` in n.

    ``model="darboux"`` fits ``log|a_n| = c + n log(rho) + beta log(n)``, the
    asymptotic form for maps analytic beyond the circle; ``model="geometric"``
    drops the ``log(n)`` term.  By default the pinned amplitude ``a_{m-1}`` is
    left out since it scales like xi while the tail scales like xi^n.
    ``residual`` is the RMS misfit in decades.
    """
    a = np.abs(mv.coeffs)
    n = np.arange(1, a.size + 1, dtype=np.float64)
    keep = a > threshold
    if skip_amplitude:
        keep &= n >= 2
    if keep.sum() < 4:
        return DecayFit(np.nan, np.nan, np.nan, int(keep.sum()), indeterminate=True)
    cols = [np.ones(keep.sum()), n[keep]]
    if model == "darboux":
        cols.append(np.log(n[keep]))
    elif model != "geometric":
        raise ValueError(f"unknown decay model {model!r}")
    A = np.column_stack(cols)
    y = np.log(a[keep])
    c, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = (y - A @ c) / np.log(10.0)
    beta = float(c[2]) if model == "darboux" else 0.0
    return DecayFit(float(np.exp(c[1])), float(np.sqrt(np.mean(r**2))), beta, int(keep.sum()))


@dataclass
class DiagnosticsReport:
    lam: float
    q_consistency: float
    q_unit_error: float
    denom_margin: float
    denom_bound: float
    smallness: bool
    In_recursion_err: dict[int, float]
    sublemma_err: dict[int, float]
    curvature: FloatArray = field(repr=False)
    min_curvature: float = 0.0
    convex: bool = True
    c2_proxy: float = 0.0
    c2_sufficient: bool = False
    decay_rho: float = float("nan")
    decay_residual: float = float("nan")
    decay_indeterminate: bool = True
    bilipschitz_margin: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["curvature"] = [float(x) for x in self.curvature]
        d["In_recursion_err"] = {str(k): v for k, v in self.In_recursion_err.items()}
        d["sublemma_err"] = {str(k): v for k, v in self.sublemma_err.items()}
        return d


def diagnose(mv: ModeVector, lam: float, N: int, n_max: int = 3) -> DiagnosticsReport:
    grid = synthesize(mv, N, derivs=n_max + 1)
    I1 = compute_I1(grid)
    qf, qd = compute_q(grid, lam, I1)
    den = denominator_margin(grid, lam, I1)
    curv = curvature_profile(grid)
    fit = decay_rate(mv)
    return DiagnosticsReport(
        lam=lam,
        q_consistency=float(np.max(np.abs(qf - qd))),
        q_unit_error=float(np.max(np.abs(np.abs(qd) - 1.0))),
        denom_margin=den.min_modulus,
        denom_bound=den.bound,
        smallness=den.smallness,
        In_recursion_err=check_In_recursion(grid, n_max),
        sublemma_err={n: check_pv_sublemma(grid, n) for n in (1, 2)},
        curvature=curv.kappa,
        min_curvature=curv.min_kappa,
        convex=curv.convex,
        c2_proxy=curv.c2_proxy,
        c2_sufficient=curv.sufficient,
        decay_rho=fit.rho,
        decay_residual=fit.residual,
        decay_indeterminate=fit.indeterminate,
        bilipschitz_margin=check_conformal(mv, N).bilipschitz_margin,
    )
