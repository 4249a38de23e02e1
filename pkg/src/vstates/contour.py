"""Velocity of a uniform vortex patch from boundary integrals, and a rigid-rotation test.

With unit vorticity, ``v = (i/2) conj((1/pi) int_D dA(zeta)/(z - zeta))`` and
the area integral reduces to the Cauchy integral ``C(z)`` of ``conj(zeta)``
over the boundary: it equals ``conj(z) - C(z)`` inside the patch and ``-C(z)``
outside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .residual import compute_I1
from .spectral import (
    BoundaryGrid,
    ComplexArray,
    FloatArray,
    ModeVector,
    evaluate,
    spectral_derivative,
    synthesize,
)

INTERIOR, EXTERIOR, UNRESOLVED = "interior", "exterior", "unresolved"


class MarkerFoldover(RuntimeError):
    pass


def boundary_velocity(grid: BoundaryGrid, I1: ComplexArray | None = None) -> ComplexArray:
    """Fluid velocity at ``Phi(w_j)``; the Plemelj limit gives ``-(i/2) conj(I1)``."""
    if I1 is None:
        I1 = compute_I1(grid)
    return -0.5j * np.conj(I1)


def patch_area(grid: BoundaryGrid) -> float:
    # (1/2) int Im(conj(Z) dZ/dtheta) dtheta with dZ/dtheta = i w Phi'
    return float(np.pi * np.mean(np.real(np.conj(grid.phi) * grid.w * grid.dphi)))


def winding_number(points: ComplexArray, curve: ComplexArray) -> np.ndarray:
    rel = curve[None, :] - points[:, None]
    turn = np.angle(np.roll(rel, -1, axis=1) / rel)
    return np.rint(turn.sum(axis=1) / (2 * np.pi)).astype(int)


@dataclass(frozen=True)
class VelocityField:
    points: ComplexArray
    velocities: ComplexArray
    tags: tuple[str, ...]


def velocity_at(points, grid: BoundaryGrid, min_distance: float | None = None) -> VelocityField:
    """Biot-Savart velocity at points off the boundary.

    Points closer to the boundary than one grid spacing (or ``min_distance``)
    are tagged unresolved and get NaN velocity.
    """
    z = np.atleast_1d(np.asarray(points, dtype=np.complex128))
    if min_distance is None:
        min_distance = 2 * np.pi / grid.size * float(np.abs(grid.dphi).max())
    dist = np.abs(z[:, None] - grid.phi[None, :]).min(axis=1)
    inside = winding_number(z, grid.phi) != 0
    density = np.conj(grid.phi) * grid.dphi * grid.w
    cauchy = (density[None, :] / (grid.phi[None, :] - z[:, None])).sum(axis=1) / grid.size
    area_term = np.where(inside, np.conj(z) - cauchy, -cauchy)
    v = 0.5j * np.conj(area_term)
    tags = np.where(inside, INTERIOR, EXTERIOR).astype(object)
    bad = dist <= min_distance
    tags[bad] = UNRESOLVED
    v[bad] = np.nan
    return VelocityField(z, v, tuple(str(t) for t in tags))


def rotation_residual(grid: BoundaryGrid, lam: float, I1: ComplexArray | None = None) -> FloatArray:
    """Normal velocity in the frame rotating at ``(1-lam)/2``, scaled by ``|Phi'|``."""
    v = boundary_velocity(grid, I1)
    omega = 0.5 * (1.0 - lam)
    return np.real((v - 1j * omega * grid.phi) * np.conj(grid.w * grid.dphi))


def marker_velocity(Z: ComplexArray) -> ComplexArray:
    """Boundary velocity for a closed curve sampled at uniform labels.

    Same Plemelj reduction as ``boundary_velocity`` but parametrized by the
    marker labels, so it applies to a curve that is no longer a conformal image.
    """
    N = Z.size
    Zt = spectral_derivative(Z)
    d = Z[None, :] - Z[:, None]
    np.fill_diagonal(d, 1.0)
    kernel = np.conj(d) / d
    np.fill_diagonal(kernel, np.conj(Zt) / Zt)
    J = (kernel @ Zt) / (1j * N)
    return -0.5j * np.conj(J)


def _distance_to_curve(y: ComplexArray, mv: ModeVector, N: int) -> FloatArray:
    """Distance from each point to ``Phi(T)`` by Newton on the angle."""
    dense = 8 * N
    th = 2 * np.pi * np.arange(dense) / dense
    curve = evaluate(mv, np.exp(1j * th))
    t = th[np.abs(y[:, None] - curve[None, :]).argmin(axis=1)]
    for _ in range(20):
        w = np.exp(1j * t)
        p = evaluate(mv, w)
        d1, d2 = evaluate(mv, w, 1), evaluate(mv, w, 2)
        zt = 1j * w * d1
        ztt = -w * (d1 + w * d2)
        r = p - y
        g = np.real(np.conj(r) * zt)
        dg = np.abs(zt) ** 2 + np.real(np.conj(r) * ztt)
        step = g / dg
        t = t - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return np.abs(evaluate(mv, np.exp(1j * t)) - y)


@dataclass(frozen=True)
class DriftReport:
    drift: float
    t_final: float
    steps: int
    omega: float
    min_spacing_ratio: float


def rigid_rotation_check(
    mv: ModeVector,
    lam: float,
    t_final: float = 0.5,
    steps: int = 256,
    N: int = 256,
) -> DriftReport:
    """Advect boundary markers with the fluid and compare to the rotated patch.

    Lagrangian markers slide along a rotating boundary, so the drift is the
    largest distance from a marker to the rotated curve ``e^{i Omega t} Phi(T)``.
    """
    if steps < 64:
        raise ValueError("steps must be >= 64")
    omega = 0.5 * (1.0 - lam)
    Z = synthesize(mv, N, derivs=1).phi.copy()
    spacing0 = np.abs(np.diff(np.append(Z, Z[0]))).min()
    dt = t_final / steps
    for _ in range(steps):
        k1 = marker_velocity(Z)
        k2 = marker_velocity(Z + 0.5 * dt * k1)
        k3 = marker_velocity(Z + 0.5 * dt * k2)
        k4 = marker_velocity(Z + dt * k3)
        Z = Z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        spacing = np.abs(np.diff(np.append(Z, Z[0]))).min()
        signed = np.mean(np.imag(np.conj(Z) * spectral_derivative(Z)))
        if not np.isfinite(Z).all() or spacing < 0.05 * spacing0 or signed <= 0:
            raise MarkerFoldover("markers collided or the boundary folded over")
    back = Z * np.exp(-1j * omega * t_final)
    drift = float(_distance_to_curve(back, mv, N).max())
    return DriftReport(drift, t_final, steps, omega, float(spacing / spacing0))


def far_field_error(grid: BoundaryGrid, factor: float = 10.0, samples: int = 16) -> tuple[float, ComplexArray, ComplexArray]:
    """Deviation of the far velocity from the point-vortex field of equal area."""
    R = factor * float(np.abs(grid.phi).max())
    z = R * np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)
    v = velocity_at(z, grid).velocities
    mono = 1j * patch_area(grid) / (2 * np.pi * np.conj(z))
    return float(np.max(np.abs(v - mono))), z, v


def interior_circulation(grid: BoundaryGrid, radius: float, samples: int = 64) -> float:
    """Circulation of v around a circle about the origin lying inside the patch."""
    th = 2 * np.pi * np.arange(samples) / samples
    z = radius * np.exp(1j * th)
    v = velocity_at(z, grid).velocities
    dz = 1j * z * (2 * np.pi / samples)
    return float(np.real(np.conj(v) * dz).sum())
