import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toruseig import arithmetic as ar
from toruseig import lattice as la
from toruseig.errors import PreconditionError


def test_enumerate_examples():
    E = la.enumerate_sphere(2, 25)
    assert E.size == 12
    assert E.contains(np.array([[3, 4], [-5, 0], [1, 1]])).tolist() == [True, True, False]
    assert la.enumerate_sphere(2, 3).size == 0
    origin = la.enumerate_sphere(3, 0)
    assert origin.size == 1 and origin.points.tolist() == [[0, 0, 0]]


def test_enumeration_sorted_and_symmetric():
    for d, lam in ((2, 325), (3, 101), (4, 30)):
        E = la.enumerate_sphere(d, lam)
        P = E.points
        assert [tuple(p) for p in P] == sorted(tuple(p) for p in P)
        assert E.contains(-P).all()
        assert E.contains(P[:, ::-1]).all()
        flipped = P.copy()
        flipped[:, 0] *= -1
        assert E.contains(flipped).all()


def test_enumeration_matches_counts():
    for d in (2, 3, 4):
        table = ar.r_d_table(d, 400)
        for lam in range(0, 401, 7):
            assert la.enumerate_sphere(d, lam).size == table[lam]


def test_index_of():
    E = la.enumerate_sphere(3, 27)
    idx = E.index_of(E.points[::-1])
    assert idx.tolist() == list(range(E.size))[::-1]
    assert E.index_of(np.array([[0, 0, 0]]))[0] == -1


def test_cache_roundtrip(tmp_path):
    E = la.enumerate_sphere(3, 101, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    raw = files[0].read_bytes()
    magic, version, d, lam, count = la._CACHE_HEADER.unpack_from(raw)
    assert (magic, version, d, lam, count) == (b"TSPH", 1, 3, 101, E.size)
    assert len(raw) == la._CACHE_HEADER.size + 8 * 3 * E.size
    again = la.enumerate_sphere(3, 101, cache_dir=tmp_path)
    assert np.array_equal(again.points, E.points)
    assert files[0].read_bytes() == raw


def test_cache_rejects_corruption(tmp_path):
    la.enumerate_sphere(2, 25, cache_dir=tmp_path)
    path = next(tmp_path.iterdir())
    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(ValueError):
        la.read_cache_file(path)


def test_cache_env(tmp_path, monkeypatch):
    monkeypatch.setenv(la.CACHE_ENV, str(tmp_path))
    la.enumerate_sphere(2, 65)
    assert len(list(tmp_path.iterdir())) == 1


@pytest.mark.parametrize("zeta,m,zhat", [((2, 4), 2, (1, 2)), ((3, 5, 7), 1, (3, 5, 7)),
                                         ((-6, 0, 0, 0), 6, (-1, 0, 0, 0))])
def test_primitive_part(zeta, m, zhat):
    dec = la.primitive_part(zeta)
    assert dec.m == m and tuple(dec.zhat) == zhat


def test_primitive_part_zero():
    with pytest.raises(PreconditionError):
        la.primitive_part((0, 0))


def test_shift_count_examples():
    assert la.equal_norm_shift_count(2, 25, (1, 1)) == 8
    assert la.equal_norm_shift_count(2, 25, (11, 0)) == 0
    assert la.equal_norm_shift_count(3, 10, (1, 0, 0)) == 0
    assert la.equal_norm_shift_count_exact(2, 25, (1, -1)) == 2
    assert la.equal_norm_shift_count_exact(2, 25, (1, 1)) == 2
    assert la.equal_norm_shift_count_exact(4, 5, (10, 0, 0, 0)) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 3), st.integers(1, 60), st.lists(st.integers(-4, 4), min_size=3, max_size=3))
def test_shift_count_matches_naive(d, X, z):
    zeta = tuple(z[:d])
    if not any(zeta):
        return
    s = math.isqrt(X)
    naive = sum(1 for mu in itertools.product(range(-s, s + 1), repeat=d)
                if sum(a * a for a in mu) <= X
                and sum(a * a for a in mu) == sum((a + b) ** 2 for a, b in zip(mu, zeta)))
    assert la.equal_norm_shift_count(d, X, zeta) == naive


def test_shift_table_identity():
    for d, lam in ((2, 325), (3, 54), (4, 21)):
        T = math.sqrt(2 * lam)
        zetas, counts = la.shift_count_table(la.enumerate_sphere(d, lam), ar.max_shift_sq(T), min_sq=2)
        assert counts.sum() == ar.s_d(d, lam, T)
        for z, c in zip(zetas[:20], counts[:20]):
            assert la.equal_norm_shift_count_exact(d, lam, z) == c


def test_equal_norm_shift_count_scales_like_sqrt():
    ratios = []
    for X in (10, 100, 1000, 10000):
        worst = 0.0
        for zeta in ((1, 1), (2, 0), (1, 3), (4, 2), (5, 5)):
            c = la.equal_norm_shift_count(2, X, zeta)
            worst = max(worst, c * np.linalg.norm(la.primitive_part(zeta).zhat) / X ** 0.5)
        ratios.append(worst)
    assert max(ratios) <= 4 * ratios[0]


def test_cap_examples():
    E = la.enumerate_sphere(2, 25)
    assert la.cap_count(E, (3, 4), 2) == 1
    assert la.cap_count(E, (3, 4), 1) == 0
    assert la.cap_count(E, (3, 4), 10) == 11
    with pytest.raises(PreconditionError):
        la.cap_count(E, (1, 1), 2)


def test_cap_count_symmetry():
    E = la.enumerate_sphere(3, 101)
    nu = tuple(E.points[5])
    base = la.cap_count(E, nu, 6.0)
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            image = tuple(s * nu[p] for s, p in zip(signs, perm))
            assert la.cap_count(E, image, 6.0) == base


def test_cap_dense_set_examples():
    E = la.enumerate_sphere(2, 25)
    V = la.cap_dense_set(E, 2)
    assert sorted(map(tuple, V.points)) == sorted(
        [(a, b) for a in (-4, -3, 3, 4) for b in (-4, -3, 3, 4) if abs(a) != abs(b)])
    assert V.density == pytest.approx(8 / 12)
    assert la.cap_dense_set(la.enumerate_sphere(2, 0), 5).density == 0.0
    lam = 101
    dense = la.cap_dense_set(la.enumerate_sphere(3, lam), lam ** 0.25 * math.log(lam))
    assert dense.density > 0.9


def test_arc_max_examples():
    assert la.arc_max(25, 0.1) == 1
    assert la.arc_max(25, 1.5) == 2
    # plain double loop over E_325 (24 points)
    assert la.arc_max(325, math.sqrt(18)) == 2
    with pytest.raises(PreconditionError):
        la.arc_max(5, 1.0, la.enumerate_sphere(3, 5))


def test_arc_max_bounded_over_squarefree():
    groups = la.circle_points_by_norm(20000)
    worst = 0
    for lam, pts in groups.items():
        if any(lam % (p * p) == 0 for p in range(2, math.isqrt(lam) + 1)):
            continue
        worst = max(worst, la.arc_max(lam, lam ** 0.15, la.Eigenspace(2, lam, pts)))
    assert worst <= 4


@pytest.mark.parametrize("d,L,expected", [(2, 1, 5), (2, 2, 9), (3, 1, 7)])
def test_weyl_examples(d, L, expected):
    assert la.weyl_count(d, L) == expected


def test_weyl_matches_table():
    for d in (2, 3, 4):
        assert la.weyl_count(d, 300) == int(ar.r_d_table(d, 300).sum())


def test_circle_groups_match_enumeration():
    groups = la.circle_points_by_norm(500)
    for lam in (1, 2, 25, 325, 500):
        assert np.array_equal(groups[lam], la.enumerate_sphere(2, lam).points)
    assert 3 not in groups


def test_isqrt_exact_near_squares():
    big = np.array([(2**31 - 1) ** 2, (2**31 - 1) ** 2 - 1, 10**12, 10**12 - 1], dtype=np.int64)
    assert la.isqrt_array(big).tolist() == [math.isqrt(int(v)) for v in big]
