"""Newton solver with amplitude pinning and branch continuation from the disc."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .linear import DEFAULT_STEP, jacobian_fd, sine_residual
from .residual import compute_G
from .spectral import ModeVector, default_grid_size, synthesize

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
FOLD_CONDITION = 1e10
TRUNCATION_WARNING = 1e-8


class NewtonFailure(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ConformalityLoss(NewtonFailure):
    pass


@dataclass(frozen=True)
class VState:
    fold: int
    lam: float
    mv: ModeVector
    residual_inf: float
    grid_size: int
    iterations: int = 0
    condition: float = float("nan")

    @property
    def omega(self) -> float:
        return 0.5 * (1.0 - self.lam)

    @property
    def xi(self) -> float:
        return float(self.mv.coeffs[0])

    def residual_at(self, N: int) -> float:
        """Full-grid sup norm of G re-evaluated on an N-point grid."""
        return float(np.max(np.abs(compute_G(self.lam, synthesize(self.mv, N, derivs=1)))))


@dataclass
class Branch:
    fold: int
    states: list[VState] = field(default_factory=list)
    steps: list[dict] = field(default_factory=list)
    reason: str = ""
    warnings: list[str] = field(default_factory=list)

    @property
    def xi(self) -> np.ndarray:
        return np.array([s.xi for s in self.states])

    @property
    def lam(self) -> np.ndarray:
        return np.array([s.lam for s in self.states])

    def __len__(self) -> int:
        return len(self.states)


def predict_tangent(fold: int, trunc: int = 16) -> tuple[float, ModeVector]:
    """Bifurcation point ``1/m`` and the kernel direction ``conj(w)^{m-1}``."""
    return 1.0 / fold, ModeVector.single(fold, trunc, 1.0)


def newton_solve(
    fold: int,
    xi: float,
    init: tuple[float, ModeVector],
    tol: float = DEFAULT_TOL,
    max_iter: int = 30,
    N: int | None = None,
    step: float = DEFAULT_STEP,
) -> VState:
    """Solve the K sine-mode equations of G for ``(a_{2m-1}, ..., a_{Km-1}, lambda)``.

    ``a_{m-1}`` is pinned to ``xi``.  A step that would leave the certified
    conformal region (``sum (nm-1)|a| < 1``) is halved until it stays inside.
    """
    lam, mv = init
    if mv.fold != fold:
        raise ValueError("initial guess has the wrong fold")
    coeffs = np.array(mv.coeffs, dtype=np.float64)
    coeffs[0] = xi
    mv = mv.with_coeffs(coeffs)
    if N is None:
        N = default_grid_size(fold, mv.trunc)
    if not mv.valid:
        raise ConformalityLoss("initial guess is outside the certified conformal region", np.inf, 0)

    res = sine_residual(lam, mv, N)
    rnorm = float(np.max(np.abs(res)))
    cond = float("nan")
    it = 0
    while rnorm > tol:
        if it >= max_iter:
            raise NewtonFailure(f"no convergence after {max_iter} iterations", rnorm, it)
        it += 1
        try:
            jac = jacobian_fd(lam, mv, unknowns="pinned", step=step, N=N).matrix
        except ValueError as exc:
            raise ConformalityLoss(f"cannot differentiate at this iterate: {exc}", rnorm, it) from exc
        cond = float(np.linalg.cond(jac))
        if not np.isfinite(cond) or cond > FOLD_CONDITION:
            raise NewtonFailure(f"singular Jacobian (condition {cond:.3g}); fold suspected", rnorm, it)
        delta = np.linalg.solve(jac, -res)
        damping = 1.0
        while True:
            trial = mv.coeffs.copy()
            trial[1:] += damping * delta[:-1]
            trial_lam = lam + damping * delta[-1]
            cand = mv.with_coeffs(trial)
            if cand.valid and 0.0 < trial_lam < 1.0:
                break
            damping *= 0.5
            if damping < 1e-6:
                raise ConformalityLoss("every damped step leaves the certified region", rnorm, it)
        mv, lam = cand, trial_lam
        res = sine_residual(lam, mv, N)
        new_norm = float(np.max(np.abs(res)))
        logger.debug("newton it=%d |res|=%.3e damping=%g", it, new_norm, damping)
        if not np.isfinite(new_norm):
            raise NewtonFailure("residual became non-finite", new_norm, it)
        rnorm = new_norm

    full = float(np.max(np.abs(compute_G(lam, synthesize(mv, N, derivs=1)))))
    return VState(fold, float(lam), mv, full, N, iterations=it, condition=cond)


def _xi_at(i: int, dxi: float) -> float:
    return (i + 1) * dxi


def continue_branch(
    fold: int,
    xi_max: float,
    dxi: float,
    K: int = 16,
    N: int | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = 30,
    start: Branch | None = None,
) -> Branch:
    """Follow the m-fold branch in amplitude ``xi = a_{m-1}`` from the disc.

    The first state is seeded by the kernel tangent at ``lambda = 1/m``; later
    states by the secant through the last two.  ``start`` resumes a partial
    branch; the results are the same as an uninterrupted run.
    """
    if dxi <= 0 or xi_max < dxi:
        raise ValueError("need 0 < dxi <= xi_max")
    if N is None:
        N = default_grid_size(fold, K)
    if N < 4 * K * fold:
        raise ValueError(f"grid of size {N} aliases for K={K}, m={fold}")

    branch = Branch(fold) if start is None else Branch(
        fold, list(start.states), list(start.steps), "", list(start.warnings)
    )
    lam0, tangent = predict_tangent(fold, K)
    i = len(branch.states)
    while _xi_at(i, dxi) <= xi_max * (1 + 1e-12):
        xi = _xi_at(i, dxi)
        states = branch.states
        if len(states) == 0:
            guess = (lam0, tangent * xi)
        elif len(states) == 1:
            guess = (states[-1].lam, states[-1].mv)
        else:
            a, b = states[-2], states[-1]
            t = (xi - b.xi) / (b.xi - a.xi)
            guess = (b.lam + t * (b.lam - a.lam), b.mv + t * (b.mv - a.mv))
        pinned = guess[1].coeffs.copy()
        pinned[0] = xi
        if not ModeVector(fold, pinned).valid:
            branch.reason = "conformality margin exhausted"
            break
        try:
            state = newton_solve(fold, xi, guess, tol=tol, max_iter=max_iter, N=N)
        except ConformalityLoss as exc:
            branch.reason = "conformality margin exhausted"
            branch.steps.append({"xi": xi, "ok": False, "error": str(exc)})
            break
        except NewtonFailure as exc:
            branch.reason = "fold suspected" if "fold" in str(exc) else "newton failure"
            branch.steps.append({"xi": xi, "ok": False, "error": str(exc)})
            break
        branch.states.append(state)
        branch.steps.append({"xi": xi, "ok": True, "iterations": state.iterations})
        tail = abs(state.mv.coeffs[-1])
        if tail > TRUNCATION_WARNING * abs(state.mv.coeffs[0]) and state.xi != 0:
            branch.warnings.append(f"truncation not certified at xi={xi:.6g}")
        i += 1
    else:
        branch.reason = "reached xi_max"
    return branch
