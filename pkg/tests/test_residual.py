import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from conftest import random_mv
from vstates.contour import rotation_residual
from vstates.quadrature import DegenerateGridError, pair_with_log
from vstates.residual import (
    BranchCutError,
    compute_F,
    compute_G,
    compute_I1,
    compute_mean,
    compute_S,
    log_integral,
    pv_cauchy_derivative,
    t_of_one,
)
from vstates.spectral import ModeVector, evaluate, spectral_derivative, synthesize


def brute_I1(mv, theta0):
    """Adaptive quadrature of the I1 integral at w = e^{i theta0}."""
    w = np.exp(1j * theta0)
    p = evaluate(mv, w)

    def integrand(t):
        tau = np.exp(1j * t)
        d = evaluate(mv, tau) - p
        if abs(d) < 1e-300:
            return 0j
        return np.conj(d) / d * evaluate(mv, tau, 1) * tau / (2 * np.pi)

    re = quad(lambda t: integrand(t).real, theta0, theta0 + 2 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    im = quad(lambda t: integrand(t).imag, theta0, theta0 + 2 * np.pi, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
    return re + 1j * im


@pytest.mark.parametrize("mv", [ModeVector.single(2, 4, 0.3), ModeVector(3, [0.1, -0.01, 0.002, 0.0])])
def test_I1_matches_adaptive_quadrature(mv):
    g = synthesize(mv, 64, derivs=1)
    I1 = compute_I1(g)
    for j in (0, 5, 17, 40):
        assert abs(I1[j] - brute_I1(mv, g.theta[j])) < 1e-10


def test_disc_and_ellipse_closed_forms():
    g = synthesize(ModeVector.zeros(2, 4), 64)
    # conj(tau - w)/(tau - w) = -1/(tau w) on the circle, so I1 = -conj(w)
    assert np.max(np.abs(compute_I1(g) + np.conj(g.w))) < 1e-14
    assert np.max(np.abs(compute_G(0.3, g))) < 1e-14
    assert np.max(np.abs(compute_S(g))) < 1e-14

    xi = 0.3
    g = synthesize(ModeVector.single(2, 4, xi), 64)
    w = g.w
    S = compute_S(g)
    assert np.max(np.abs(S + 0.5 * xi * (w + xi * np.conj(w)) ** 2)) < 1e-14
    assert S[0].real == pytest.approx(-0.2535, abs=1e-14)
    assert np.max(np.abs(2 * S.real + xi * (1 + xi**2) * np.cos(2 * g.theta) + 2 * xi**2)) < 1e-14
    lam = 0.5 * (1 + xi**2)
    assert np.max(np.abs(compute_G(lam, g))) < 1e-14
    assert np.max(np.abs(compute_F(lam, g, S))) < 1e-14
    assert np.max(np.abs(compute_G(0.5, g))) > 1e-2


def test_pv_and_t_of_one():
    for mv in (ModeVector.zeros(2, 4), ModeVector.single(2, 4, 0.3), ModeVector(3, [0.1, 0.01, -0.001, 0.0])):
        g = synthesize(mv, 256)
        assert np.max(np.abs(pv_cauchy_derivative(g) - 0.5)) < 1e-13
        assert np.max(np.abs(t_of_one(g) - (1 - 0.5 / g.dphi))) < 1e-13


def test_pair_with_log_matches_series():
    N = 64
    w = np.exp(2j * np.pi * np.arange(N) / N)
    g = 1 + 2 * w**-1 + 3j * w**-3
    # -(sum_k w^k ghat_{k-1}/k): ghat_0 = 1, ghat_{-1}=2 (unused), so only k = 1 contributes
    assert np.max(np.abs(pair_with_log(g, w) + w)) < 1e-14


def test_lambda_outside_unit_interval_rejected():
    g = synthesize(ModeVector.zeros(2, 4), 32)
    for lam in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            compute_G(lam, g)


def test_branch_violation_detected():
    # outside the certified region: the difference quotient turns around
    g = synthesize(ModeVector(2, [0.0, 0.0, 0.25]), 64)
    with pytest.raises(BranchCutError):
        log_integral(g, np.conj(g.phi) * g.dphi)


def test_degenerate_grid_detected():
    # not injective: Phi(w) = w + conj(w) collapses the circle to a segment
    g = synthesize(ModeVector.single(2, 2, 1.0), 32)
    with pytest.raises(DegenerateGridError):
        compute_I1(g)


def test_mean_is_constant_of_F():
    mv = ModeVector(3, [0.08, 0.01, 0.0])
    g = synthesize(mv, 128)
    S = compute_S(g)
    vals = 0.4 * np.abs(g.phi) ** 2 + 2 * S.real
    assert compute_mean(0.4, g, S) == pytest.approx(vals.mean(), abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]), st.floats(0.05, 0.95))
def test_G_is_half_derivative_of_F(seed, m, lam):
    mv = random_mv(np.random.default_rng(seed), m, trunc=5, budget=0.3)
    g = synthesize(mv, 256)
    G = compute_G(lam, g)
    F = compute_F(lam, g)
    assert np.max(np.abs(G - 0.5 * spectral_derivative(F))) < 1e-11


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 5]), st.floats(0.05, 0.95))
def test_symmetries_of_G_and_F(seed, m, lam):
    mv = random_mv(np.random.default_rng(seed), m, trunc=4, budget=0.4)
    N = 120
    g = synthesize(mv, N)
    G, F = compute_G(lam, g), compute_F(lam, g)
    flip = (-np.arange(N)) % N
    shift = (np.arange(N) + N // m) % N
    assert np.max(np.abs(G[flip] + G)) < 1e-12  # odd: real coefficients
    assert np.max(np.abs(F[flip] - F)) < 1e-12  # even
    assert np.max(np.abs(G[shift] - G)) < 1e-12  # m-fold
    assert np.max(np.abs(F[shift] - F)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4]), st.floats(0.05, 0.95))
def test_normal_velocity_identity(seed, m, lam):
    mv = random_mv(np.random.default_rng(seed), m, trunc=5, budget=0.5)
    g = synthesize(mv, 128)
    I1 = compute_I1(g)
    assert np.max(np.abs(rotation_residual(g, lam, I1) + 0.5 * compute_G(lam, g, I1))) < 1e-13
