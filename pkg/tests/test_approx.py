import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from toruseig import approx as ap, lattice as la, spectral as sp
from toruseig.errors import PreconditionError, TailToleranceError


def _box_grid(d, r, n):
    axis = np.linspace(-r, r, n)
    return np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)


def _in_ball(x, r):
    return np.linalg.norm(x, axis=1) < r


def test_bump_transform_matches_direct_integral():
    # G(xi) = int f(|x|) e^{-i xi x_1} dx, here in d = 3 as 4 pi int f(u) u^2 sinc(xi u) du
    for xi in (0.0, 3.0, 17.0):
        ref, _ = integrate.quad(lambda u: 4 * math.pi * float(ap.bump(u)) * u * u * np.sinc(xi * u / math.pi),
                                0, 0.5, epsabs=1e-14)
        assert float(ap.bump_transform(3, xi)) == pytest.approx(ref, rel=1e-10, abs=1e-16)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_autocorrelation_at_zero_is_self_energy(d):
    assert float(ap.bump_autocorrelation(d, 0.0)) == pytest.approx(ap.bump_self_energy(d), rel=1e-10)
    assert float(ap.bump_autocorrelation(d, 1.0)) == 0.0
    assert ap.bump_self_energy(d) < 1


@pytest.mark.parametrize("d,r,tol", [(2, 0.5, 1e-10), (3, 1.1, 1e-6), (4, 1.3, 1e-4)])
def test_minorant_coefficients_non_negative(d, r, tol):
    F = ap.smooth_minorant(d, r, tol)
    assert F.kind == "minorant"
    assert np.all(F.radial >= -1e-14)
    assert F.zero_coefficient > 0
    assert F.coefficient([0] * d) == F.zero_coefficient
    assert F.coefficient([F.T_cut + 1] + [0] * (d - 1)) == 0.0


def test_minorant_zero_coefficient_is_squared_mean():
    d, r = 2, 0.7
    F = ap.smooth_minorant(d, r)
    G0 = float(ap.bump_transform(d, 0.0))
    assert F.zero_coefficient + F.tail_bound == pytest.approx(r**d * (2 * math.pi) ** -d * G0**2, rel=1e-12)


@settings(max_examples=5, deadline=None)
@given(st.floats(0.6, 1.5))
def test_sandwich_d2_on_dense_grid(r):
    lo = ap.smooth_minorant(2, r, 1e-8)
    hi = ap.scaled_majorant(2, r * 0.75, 0.25, 1e-8)
    x = _box_grid(2, r, 64)
    inside = _in_ball(x, r * 0.75)
    assert np.all(lo(x) <= _in_ball(x, r) + 1e-10)
    h = hi(x)
    assert np.all(h >= -1e-10)
    assert np.all(h[inside] >= 1 - 1e-9)


@pytest.mark.parametrize("d,r", [(3, 1.2), (3, 1.45), (4, 1.4)])
def test_sandwich_higher_dimensions(d, r):
    lo = ap.smooth_minorant(d, r, 1e-4)
    hi = ap.scaled_majorant(d, r * 0.75, 0.25, 1e-4)
    x = _box_grid(d, r, 9 if d == 3 else 5)
    assert np.all(lo(x) <= _in_ball(x, r) + 1e-10)
    h = hi(x)
    assert np.all(h >= -1e-10)
    assert np.all(h[_in_ball(x, r * 0.75)] >= 1 - 1e-9)


def test_minorant_vanishes_on_boundary_and_stays_below_one():
    r = 0.8
    F = ap.smooth_minorant(2, r)
    theta = np.linspace(0, 2 * math.pi, 50, endpoint=False)
    edge = r * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    assert np.all(F(edge) <= 1e-10)
    x = np.random.default_rng(0).uniform(-math.pi, math.pi, (200, 2))
    assert np.all(F(x) <= 1)


def test_truncation_tracks_exact_profile():
    F = ap.smooth_minorant(2, 0.5)
    x = _box_grid(2, 0.6, 21)
    assert np.max(np.abs(F(x) - F.exact(x))) < 10 * F.tail_bound + 1e-13


def test_majorant_at_centre_and_in_ball():
    r = 0.6
    A = ap.scaled_majorant(2, r)
    assert float(A(np.zeros((1, 2)))[0]) >= 1
    rng = np.random.default_rng(4)
    u = rng.standard_normal((200, 2))
    u *= (r * np.sqrt(rng.uniform(0, 1, 200)) / np.linalg.norm(u, axis=1))[:, None]
    assert np.all(A(u) >= 1 - 1e-9)


def test_majorant_constants_recorded():
    # frozen from this implementation: the loss against vol B(0, r) and C in |a(zeta)| <= C r^d
    A = ap.scaled_majorant(2, 0.5)
    assert A.volume_ratio == pytest.approx(46104, rel=2e-3)
    assert A.coefficient_constant == pytest.approx(3669, rel=2e-3)
    assert np.all(np.abs(A.radial) <= A.coefficient_constant * A.r**2 * (1 + 1e-12))


def _spatial_pairing(F, psi, y, n=48):
    """int F(x) |psi(x + y)|^2 dvol(x) by tensor Gauss-Legendre over the support box."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    R = F.support_radius
    axes = [nodes * R] * psi.d
    w = weights * R
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, psi.d)
    W = np.prod(np.stack(np.meshgrid(*([w] * psi.d), indexing="ij"), axis=-1).reshape(-1, psi.d), axis=1)
    vals = F.exact(pts) * F.scale * psi.intensity(pts + y)
    return float(np.dot(W, vals)) / (2 * math.pi) ** psi.d


@pytest.mark.parametrize("k", range(10))
def test_pairing_matches_spatial_quadrature(k):
    rng = np.random.default_rng(100 + k)
    d = 2 if k < 6 else 3
    lam = int(rng.choice([5, 13, 25, 50]) if d == 2 else rng.choice([3, 9, 11, 17]))
    psi = sp.random_onb(la.enumerate_sphere(d, lam), k).member(0)
    y = rng.uniform(-math.pi, math.pi, d)
    F = ap.smooth_minorant(d, 0.9, 1e-8)
    paired = F.pair(psi, y)
    spatial = _spatial_pairing(F, psi, y, 48 if d == 2 else 28)
    assert paired == pytest.approx(spatial, abs=1e-4 * max(1.0, abs(spatial)))
    # and against the full untruncated coefficients: the tail is the only gap
    assert abs(paired - spatial) <= 2 * F.tail_bound * psi.support_size**2 + 1e-7


def test_pairing_with_exponential_is_zero_coefficient():
    F = ap.smooth_minorant(3, 1.0, 1e-6)
    assert F.pair(sp.exponential((1, 2, 2))) == pytest.approx(F.zero_coefficient, rel=1e-12)


def test_trig_polynomial_round_trip():
    F = ap.smooth_minorant(2, 1.2, 1e-6)
    P = F.trig_polynomial()
    assert P.is_conjugate_symmetric()
    assert len(P.freqs) == F.term_count()
    x = np.random.default_rng(1).uniform(-3, 3, (7, 2))
    assert np.allclose(P(x).real, F(x), atol=1e-13)


def test_errors():
    with pytest.raises(PreconditionError):
        ap.smooth_minorant(2, 1.6)
    with pytest.raises(PreconditionError):
        ap.smooth_minorant(2, 0.0)
    with pytest.raises(PreconditionError):
        ap.smooth_minorant(5, 0.5)
    with pytest.raises(PreconditionError):
        ap.scaled_majorant(2, 0.5, delta=0.3)
    with pytest.raises(PreconditionError):
        ap.scaled_majorant(2, 0.5, delta=0.0)
    with pytest.raises(PreconditionError):
        ap.scaled_majorant(2, 1.3, delta=0.25)
    with pytest.raises(PreconditionError):
        ap.smooth_minorant(2, 0.5, tail_tol=0.0)
    with pytest.raises(TailToleranceError):
        ap.smooth_minorant(2, 0.01, tail_tol=1e-12)
    with pytest.raises(TailToleranceError):
        ap.smooth_minorant(4, 0.3, 1e-10).frequencies()
