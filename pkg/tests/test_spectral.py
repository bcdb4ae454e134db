import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from toruseig import lattice as la
from toruseig import spectral as sp
from toruseig.bessel import SERIES_SWITCH, jn
from toruseig.errors import PairBudgetExceeded, PreconditionError

KERNEL_POINTS = (0.1, 1.0, 5.0, 19.0, 21.0, 100.0)


def kernel_oracle(d, xi):
    """(1/vol B) int_B cos(xi x1) dx, reduced to one dimension: the slice at x1 = t is a
    (d-1)-ball of radius sqrt(1 - t^2)."""
    slice_vol = lambda t: math.pi ** ((d - 1) / 2) / math.gamma((d + 1) / 2) * (1 - t * t) ** ((d - 1) / 2)
    num = 2 * integrate.quad(slice_vol, 0, 1, weight="cos", wvar=xi, epsabs=1e-14, limit=500)[0]
    return num / sp.unit_ball_volume(d)


@pytest.mark.parametrize("nu", [0, 1, 2])
def test_bessel_against_reference(nu):
    x = np.linspace(0, 120, 2401)
    assert np.max(np.abs(jn(nu, x) - special.jv(nu, x))) < 5e-9


def test_bessel_seam_continuity():
    for nu in (1, 2):
        lo, hi = jn(nu, SERIES_SWITCH), jn(nu, np.nextafter(SERIES_SWITCH, 100))
        assert abs(lo - hi) < 1e-8


def test_bessel_rejects_negative():
    with pytest.raises(ValueError):
        jn(1, -1.0)


def test_kernel_examples():
    assert sp.ball_kernel(3, 0.0) == 1.0
    assert sp.ball_kernel(3, math.pi) == pytest.approx(3 / math.pi**2, abs=1e-14)
    assert abs(sp.ball_kernel(2, 10.0) - kernel_oracle(2, 10.0)) < 1e-8
    with pytest.raises(PreconditionError):
        sp.ball_kernel(2, -1.0)


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("xi", KERNEL_POINTS)
def test_kernel_against_quadrature(d, xi):
    assert abs(sp.ball_kernel(d, xi) - kernel_oracle(d, xi)) < 1e-8


@pytest.mark.parametrize("d", [2, 4])
def test_kernel_continuous_at_seam(d):
    a = sp.ball_kernel(d, SERIES_SWITCH)
    b = sp.ball_kernel(d, np.nextafter(SERIES_SWITCH, 100))
    assert abs(a - b) < 1e-8


def test_ball_volume_normalisation():
    assert sp.ball_volume(2, math.pi) == pytest.approx(math.pi / 4)
    assert sp.ball_volume(3, 1.0) == pytest.approx(4 / 3 * math.pi / (2 * math.pi) ** 3)


def test_ball_radius_guard():
    with pytest.raises(PreconditionError):
        sp.Ball((0, 0), math.pi)
    with pytest.raises(PreconditionError):
        sp.Ball((0, 0), 0.0)


def test_eigenfunction_invariants():
    with pytest.raises(PreconditionError):
        sp.Eigenfunction.from_mapping(2, {(3, 4): 1.0, (1, 1): 0.0})
    with pytest.raises(PreconditionError):
        sp.Eigenfunction.from_mapping(2, {(3, 4): 1.0, (4, 3): 1.0})
    psi = sp.Eigenfunction.from_mapping(2, {(3, 4): 1.0, (4, 3): 1.0}, normalize=True)
    assert np.sum(np.abs(psi.coeffs) ** 2) == pytest.approx(1.0, abs=1e-15)
    assert psi.lam == 25


def test_eigenfunction_json_roundtrip(tmp_path):
    psi = sp.random_onb(la.enumerate_sphere(3, 27), 5).member(3)
    path = tmp_path / "psi.json"
    psi.save(path)
    back = sp.Eigenfunction.load(path)
    assert np.array_equal(back.points, psi.points)
    assert np.array_equal(back.coeffs, psi.coeffs)
    assert back.to_json() == psi.to_json()


def test_trig_polynomial_symmetry():
    with pytest.raises(PreconditionError):
        sp.TrigPolynomial(2, [[1, 0]], [1.0], real=True)
    p = sp.TrigPolynomial(2, [[1, 0], [-1, 0], [0, 0]], [0.5, 0.5, 1.0], real=True)
    x = np.array([[0.3, 0.1], [2.0, 1.0]])
    assert np.allclose(p(x), 1 + np.cos(x[:, 0]))


def test_matrix_element_examples():
    h = 1 / math.sqrt(2)
    psi = sp.Eigenfunction.from_mapping(2, {(3, 4): h, (5, 0): h})
    assert sp.matrix_element(psi, (2, -4)) == pytest.approx(0.5)
    assert sp.matrix_element(psi, (0, 0)) == pytest.approx(1.0)
    assert sp.matrix_element(psi, (11, 0)) == 0


def test_mass_pure_mode():
    for d in (2, 3, 4):
        mu = (1, 2, 2, 0)[:d]
        ball = sp.Ball(tuple(np.linspace(0.1, 2, d)), 0.7)
        assert sp.mass_average(sp.exponential(mu), ball) == pytest.approx(1.0, abs=1e-14)
        assert sp.mass_average_quadrature(sp.exponential(mu), ball, 1e-6) == pytest.approx(1.0, abs=1e-6)


def _thm31(m):
    a, b = m, m + 1
    return sp.Eigenfunction.from_mapping(2, {(a, b): .5, (-a, -b): .5, (b, a): .5, (-b, -a): .5})


def test_mass_thm31_small_ball_against_quadrature():
    psi = _thm31(10)
    for r, tol in ((0.02, 0.05), (0.3, 1e-3)):
        ball = sp.Ball((0.0, 0.0), r)
        assert abs(sp.mass_average(psi, ball) - sp.mass_average_quadrature(psi, ball, 1e-4)) < tol


def test_mass_two_mode_formula():
    h = 1 / math.sqrt(2)
    psi = sp.Eigenfunction.from_mapping(2, {(3, 4): h, (4, 3): -h})
    r = 0.01 / math.sqrt(2)
    value = sp.mass_average(psi, sp.Ball((0.0, 0.0), r))
    assert value == pytest.approx(1 - sp.ball_kernel(2, 0.01), abs=1e-14)
    assert value <= 1e-3


def test_mass_center_sign_convention():
    # a ball centred at y sees |psi|^2 around y, not around -y
    psi = _thm31(3)
    y = np.array([0.7, -0.2])
    ball = sp.Ball(tuple(y), 0.25)
    assert sp.mass_average(psi, ball) == pytest.approx(sp.mass_average_quadrature(psi, ball, 1e-9), abs=1e-8)


def test_mass_pair_budget():
    psi = sp.random_onb(la.enumerate_sphere(2, 25), 0).member(0)
    with pytest.raises(PairBudgetExceeded):
        sp.mass_average(psi, sp.Ball((0, 0), 0.3), pair_budget=100)


def test_mass_average_over_centres_is_one():
    psi = sp.random_onb(la.enumerate_sphere(2, 65), 3).member(1)
    ticks = 2 * math.pi * np.arange(10) / 10
    vals = [sp.mass_average(psi, sp.Ball((a, b), 0.4)) for a in ticks for b in ticks]
    # a full period of centres integrates every nonzero frequency away
    assert np.mean(vals) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]))
def test_mass_random_against_quadrature(seed, d):
    rng = np.random.default_rng(seed)
    lam = {2: 65, 3: 27, 4: 12}[d]
    E = la.enumerate_sphere(d, lam)
    pick = rng.choice(E.size, 3, replace=False)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    psi = sp.Eigenfunction(d, lam, E.points[pick], c / np.linalg.norm(c))
    ball = sp.Ball(tuple(rng.uniform(0, 2 * math.pi, d)), float(rng.uniform(0.05, 1.0)))
    assert abs(sp.mass_average(psi, ball) - sp.mass_average_quadrature(psi, ball, 1e-5)) < 1e-4


def test_discrepancy_examples():
    assert sp.discrepancy_bound(sp.exponential((3, 4)), 5) == 0
    h = 1 / math.sqrt(2)
    psi = sp.Eigenfunction.from_mapping(2, {(3, 4): h, (4, 3): h})
    assert sp.discrepancy_bound(psi, 2) == pytest.approx(1.0)
    # thm31 at T = 3: only (+-1, -+1) within the positive pair and its mirror
    assert sp.discrepancy_bound(_thm31(7), 3) == pytest.approx(1.0)


def test_random_onb_examples():
    E = la.enumerate_sphere(2, 25)
    a, b = sp.random_onb(E, 7), sp.random_onb(E, 7)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.size == 12
    assert np.max(np.abs(a.gram() - np.eye(12))) < 1e-10
    small = sp.random_onb(la.enumerate_sphere(2, 1), 3)
    assert small.size == 4
    assert np.max(np.abs(small.parseval_sums() - 1)) < 1e-10


def test_v1_examples():
    E = la.enumerate_sphere(2, 25)
    assert sp.v1_localized(sp.exponential_basis(E), (1, -1)) == 0
    assert sp.v1_localized(sp.random_onb(E, 1), (1, -1)) <= 2 + 1e-9
    assert sp.v1_localized(sp.random_onb(E, 1), (11, 0)) == 0
    with pytest.raises(PreconditionError):
        sp.v1_localized(sp.random_onb(E, 1), (0, 0))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2, 200), (3, 200), (4, 40)]).flatmap(
    lambda dl: st.tuples(st.just(dl[0]), st.integers(1, dl[1]))), st.integers(0, 2**31))
def test_parseval_and_shift_count_bound(d_lam, seed):
    d, lam = d_lam
    E = la.enumerate_sphere(d, lam)
    if E.size == 0:
        return
    B = sp.random_onb(E, seed)
    assert np.max(np.abs(B.parseval_sums() - 1)) < 1e-10
    zetas, col, _ = B.matrix_element_sums(4 * lam)
    table_z, counts = la.shift_count_table(E, 4 * lam)
    assert np.array_equal(zetas, table_z)
    assert np.all(col <= counts + 1e-9)
    z = zetas[len(zetas) // 2]
    assert counts[len(zetas) // 2] == la.equal_norm_shift_count_exact(d, lam, z)


def test_matrix_elements_match_direct():
    B = sp.random_onb(la.enumerate_sphere(3, 29), 11)
    zetas, M = B.matrix_elements(20)
    for k in (0, 5, len(zetas) - 1):
        for n in (0, 3):
            assert M[n, k] == pytest.approx(sp.matrix_element(B.member(n), zetas[k]), abs=1e-14)
    z2, col, row = B.matrix_element_sums(20)
    assert np.array_equal(z2, zetas)
    assert np.allclose(col, np.abs(M).sum(axis=0), atol=1e-13)
    assert np.allclose(row, np.abs(M).sum(axis=1), atol=1e-13)


def test_prop24_shape():
    ratios = []
    zeta = (1, 1)
    for Lam in (100, 1000, 10000):
        groups = la.circle_points_by_norm(Lam)
        total = sum(sp.v1_localized(sp.random_onb(la.Eigenspace(2, n, g), n), zeta) for n, g in groups.items())
        avg = total / la.weyl_count(2, Lam)
        ratios.append(avg * Lam**0.5 * math.sqrt(2))
    assert max(ratios) < 10
