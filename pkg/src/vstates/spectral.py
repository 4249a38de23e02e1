"""Coefficient space for m-fold perturbations of the identity map.

A perturbation ``f(w) = sum_n a_{nm-1} conj(w)^{nm-1}`` is stored by its real
coefficients.  On the unit circle ``conj(w) = 1/w``, so every field we need
(Phi and its derivatives) is a finite Laurent polynomial and can be evaluated
exactly on the uniform grid of N-th roots of unity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

DEFAULT_K = 16
DEFAULT_N = 256


@dataclass(frozen=True)
class ModeVector:
    """Real coefficients ``(a_{m-1}, a_{2m-1}, ..., a_{Km-1})`` of f."""

    fold: int
    coeffs: FloatArray

    def __post_init__(self) -> None:
        if self.fold < 2:
            raise ValueError("fold must be >= 2")
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size < 1:
            raise ValueError("need at least one coefficient")
        if not np.isfinite(c).all():
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, fold: int, trunc: int = DEFAULT_K) -> "ModeVector":
        return cls(fold, np.zeros(trunc))

    @classmethod
    def single(cls, fold: int, trunc: int, amplitude: float, index: int = 0) -> "ModeVector":
        c = np.zeros(trunc)
        c[index] = amplitude
        return cls(fold, c)

    @property
    def trunc(self) -> int:
        return int(self.coeffs.size)

    @property
    def powers(self) -> NDArray[np.int64]:
        """Exponents ``nm - 1`` of conj(w) carried by each coefficient."""
        return self.fold * np.arange(1, self.trunc + 1) - 1

    @property
    def sup_bound(self) -> float:
        return float(np.abs(self.coeffs).sum())

    @property
    def derivative_bound(self) -> float:
        return float((self.powers * np.abs(self.coeffs)).sum())

    @property
    def c2_bound(self) -> float:
        p = self.powers
        a = np.abs(self.coeffs)
        return float(a.sum() + (p * a).sum() + (p * (p + 1) * a).sum())

    @property
    def valid(self) -> bool:
        return self.sup_bound < 1.0 and self.derivative_bound < 1.0

    def with_coeffs(self, coeffs: FloatArray) -> "ModeVector":
        return ModeVector(self.fold, coeffs)

    def __add__(self, other: "ModeVector") -> "ModeVector":
        _check_compatible(self, other)
        return ModeVector(self.fold, self.coeffs + other.coeffs)

    def __sub__(self, other: "ModeVector") -> "ModeVector":
        _check_compatible(self, other)
        return ModeVector(self.fold, self.coeffs - other.coeffs)

    def __mul__(self, s: float) -> "ModeVector":
        return ModeVector(self.fold, float(s) * self.coeffs)

    __rmul__ = __mul__


def _check_compatible(a: ModeVector, b: ModeVector) -> None:
    if a.fold != b.fold or a.trunc != b.trunc:
        raise ValueError("mode vectors have different fold or truncation")


@dataclass(frozen=True)
class SineModes:
    """Coefficients ``c_{nm}`` of ``sum_n c_{nm} sin(nm theta)``.

    ``leak`` is the mean-square energy of the input outside the retained sine
    modes; ``symmetry_leak`` counts only the part that breaks the m-fold odd
    symmetry (cosine components and frequencies that are not multiples of m).
    """

    fold: int
    coeffs: FloatArray
    leak: float = 0.0
    symmetry_leak: float = 0.0


@dataclass(frozen=True)
class CosineModes:
    """Coefficients ``c_{nm}`` of ``sum_n c_{nm} cos(nm theta)`` (mean removed)."""

    fold: int
    coeffs: FloatArray
    leak: float = 0.0
    symmetry_leak: float = 0.0


@dataclass(frozen=True)
class BoundaryGrid:
    """Phi and its w-derivatives sampled at the N-th roots of unity.

    ``derivs[j]`` holds the j-th derivative (``derivs[0]`` is Phi itself).
    """

    mv: ModeVector
    w: ComplexArray
    derivs: tuple[ComplexArray, ...] = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.w.size)

    @property
    def theta(self) -> FloatArray:
        return 2 * np.pi * np.arange(self.size) / self.size

    @property
    def phi(self) -> ComplexArray:
        return self.derivs[0]

    @property
    def dphi(self) -> ComplexArray:
        return self.derivs[1]

    @property
    def d2phi(self) -> ComplexArray:
        if len(self.derivs) < 3:
            raise ValueError("grid was synthesized without second derivatives")
        return self.derivs[2]

    @property
    def max_order(self) -> int:
        return len(self.derivs) - 1

    def derivative(self, order: int) -> ComplexArray:
        if order > self.max_order:
            raise ValueError(
                f"grid carries derivatives up to order {self.max_order}, need {order}"
            )
        return self.derivs[order]


def min_grid_size(fold: int, trunc: int) -> int:
    return 4 * fold * trunc


def default_grid_size(fold: int, trunc: int, base: int = DEFAULT_N) -> int:
    """Smallest power of two that is >= ``base`` and alias-free."""
    n = base
    while n < min_grid_size(fold, trunc):
        n *= 2
    return n


def _falling(p: NDArray[np.int64], j: int) -> FloatArray:
    # d^j/dw^j w^q = q (q-1) ... (q-j+1) w^{q-j}
    out = np.ones(p.shape, dtype=np.float64)
    for i in range(j):
        out = out * (p - i)
    return out


def synthesize(mv: ModeVector, N: int = DEFAULT_N, derivs: int = 2) -> BoundaryGrid:
    """Evaluate Phi = w + f and its first ``derivs`` derivatives on N nodes."""
    if derivs < 1:
        raise ValueError("derivs must be >= 1")
    if N < min_grid_size(mv.fold, mv.trunc):
        raise ValueError(
            f"grid of size {N} aliases: need N >= 4*K*m = {min_grid_size(mv.fold, mv.trunc)}"
        )
    j = np.arange(N)
    w = np.exp(2j * np.pi * j / N)
    q = -mv.powers  # f = sum a w^q with q = -(nm-1)
    # w**q for negative q by exact index arithmetic on the roots of unity
    out = []
    for order in range(derivs + 1):
        fac = _falling(q, order) * mv.coeffs
        expo = (q - order)[:, None] * j[None, :] % N
        vals = fac @ np.exp(2j * np.pi * expo / N)
        if order == 0:
            vals = vals + w
        elif order == 1:
            vals = vals + 1.0
        out.append(np.asarray(vals, dtype=np.complex128))
    return BoundaryGrid(mv=mv, w=w, derivs=tuple(out))


def evaluate(mv: ModeVector, z: ComplexArray | complex, order: int = 0) -> ComplexArray:
    """Phi^{(order)} at arbitrary nonzero points (analytic continuation of the Laurent sum)."""
    z = np.asarray(z, dtype=np.complex128)
    q = -mv.powers
    fac = _falling(q, order) * mv.coeffs
    vals = (fac[:, None] * z.ravel()[None, :] ** (q - order)[:, None]).sum(axis=0)
    vals = vals.reshape(z.shape)
    if order == 0:
        vals = vals + z
    elif order == 1:
        vals = vals + 1.0
    return vals


def project_sine(values: FloatArray, fold: int, trunc: int) -> SineModes:
    values = np.asarray(values, dtype=np.float64)
    N = values.size
    if N < min_grid_size(fold, trunc):
        raise ValueError(f"need at least {min_grid_size(fold, trunc)} samples, got {N}")
    spec = np.fft.rfft(values) / N
    freqs = fold * np.arange(1, trunc + 1)
    coeffs = -2.0 * spec[freqs].imag
    total = float(np.mean(values**2))
    kept = 0.5 * float((coeffs**2).sum())
    sym = _energy(spec, lambda k: (k % fold != 0) | (k == 0), part="all")
    sym += _energy(spec, lambda k: (k % fold == 0) & (k > 0), part="real")
    return SineModes(fold, coeffs, leak=max(total - kept, 0.0), symmetry_leak=sym)


def project_cosine(values: FloatArray, fold: int, trunc: int) -> CosineModes:
    values = np.asarray(values, dtype=np.float64)
    N = values.size
    if N < min_grid_size(fold, trunc):
        raise ValueError(f"need at least {min_grid_size(fold, trunc)} samples, got {N}")
    spec = np.fft.rfft(values) / N
    freqs = fold * np.arange(1, trunc + 1)
    coeffs = 2.0 * spec[freqs].real
    centered = values - values.mean()
    total = float(np.mean(centered**2))
    kept = 0.5 * float((coeffs**2).sum())
    sym = _energy(spec, lambda k: (k % fold != 0) & (k > 0), part="all")
    sym += _energy(spec, lambda k: (k % fold == 0) & (k > 0), part="imag")
    return CosineModes(fold, coeffs, leak=max(total - kept, 0.0), symmetry_leak=sym)


def _energy(spec: ComplexArray, select, part: str) -> float:
    # mean-square energy of a real signal from its rfft/N coefficients
    N2 = spec.size
    k = np.arange(N2)
    mask = select(k)
    if part == "real":
        c = spec.real
    elif part == "imag":
        c = spec.imag
    else:
        c = spec
    weight = np.where((k == 0), 1.0, 2.0)
    return float((weight * np.abs(c) ** 2)[mask].sum())


def wavenumbers(N: int) -> FloatArray:
    k = np.fft.fftfreq(N, d=1.0 / N)
    if N % 2 == 0:
        k[N // 2] = 0.0  # Nyquist mode has no well-defined derivative
    return k


def spectral_derivative(values: ComplexArray | FloatArray, order: int = 1) -> ComplexArray:
    """d/dtheta of samples of a smooth 2*pi-periodic function."""
    values = np.asarray(values)
    ik = 1j * wavenumbers(values.size)
    out = np.fft.ifft((ik**order) * np.fft.fft(values))
    if np.isrealobj(values):
        return out.real
    return out


def d_dw(values: ComplexArray, w: ComplexArray) -> ComplexArray:
    """d/dw on the circle, using d/dtheta = i w d/dw."""
    return spectral_derivative(np.asarray(values, dtype=np.complex128)) / (1j * w)


@dataclass(frozen=True)
class ConformalReport:
    bound: float
    sup_bound: float
    grid_fprime_sup: float
    bilipschitz_margin: float
    valid: bool


def check_conformal(mv: ModeVector, N: int | None = None) -> ConformalReport:
    if N is None:
        N = default_grid_size(mv.fold, mv.trunc)
    grid = synthesize(mv, N, derivs=1)
    dphi = grid.phi[None, :] - grid.phi[:, None]
    dw = grid.w[None, :] - grid.w[:, None]
    np.fill_diagonal(dw, 1.0)
    ratio = np.abs(dphi / dw)
    np.fill_diagonal(ratio, np.inf)
    return ConformalReport(
        bound=mv.derivative_bound,
        sup_bound=mv.sup_bound,
        grid_fprime_sup=float(np.max(np.abs(grid.dphi - 1.0))),
        bilipschitz_margin=float(ratio.min()),
        valid=mv.valid,
    )

