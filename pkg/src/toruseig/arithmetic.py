"""Representation numbers R_d(n), pair counts A_d(n, t) and the sums S_d(lam, T).

All counts are exact Python integers; results are checked against the
unsigned 64-bit range the rest of the tooling assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import lattice
from .errors import MAX_NORM, OverflowGuardError, PreconditionError, check_u64

# A_d by brute force is the oracle only while the eigenspace stays this small.
BRUTE_FORCE_MAX_POINTS = 20000
# rows of the 2-d prefix disc handled per numpy pass
PREFIX_CHUNK = 1 << 20


def _check_dim(d: int) -> None:
    if d not in (2, 3, 4):
        raise PreconditionError(f"dimension must be 2, 3 or 4, got {d}")


def _check_n(n: int) -> None:
    if n < 0:
        raise PreconditionError(f"n must be non-negative, got {n}")
    if n > MAX_NORM:
        raise OverflowGuardError(f"n = {n} exceeds the 2^40 guard")


def r_d_bruteforce(d: int, n: int) -> int:
    """#{mu in Z^d : |mu|^2 = n}, counted by nested enumeration of coordinates."""
    _check_dim(d)
    _check_n(n)
    if n == 0:
        return 1
    total = 0
    for prefix in lattice.iter_ball_blocks(d - 1, n):
        rem = n - np.einsum("ij,ij->i", prefix, prefix)
        root = lattice.isqrt_array(rem)
        hit = root * root == rem
        total += int(np.count_nonzero(hit)) + int(np.count_nonzero(hit & (root > 0)))
    return check_u64(total)


def r_d_table(d: int, nmax: int) -> np.ndarray:
    """R_d(n) for 0 <= n <= nmax, built by convolving the squares indicator d times."""
    _check_dim(d)
    one = np.zeros(nmax + 1, dtype=np.int64)
    s = math.isqrt(nmax)
    one[np.arange(s + 1) ** 2] = 2
    one[0] = 1
    table = one.copy()
    for _ in range(d - 1):
        nxt = np.zeros_like(table)
        for a in range(s + 1):
            w = 1 if a == 0 else 2
            nxt[a * a:] += w * table[: nmax + 1 - a * a]
        table = nxt
    return table


def divisors(n: int) -> list[int]:
    """Positive divisors of n by trial division up to sqrt(n)."""
    if n <= 0:
        raise PreconditionError(f"divisors of non-positive {n}")
    small, large = [], []
    for k in range(1, math.isqrt(n) + 1):
        if n % k == 0:
            small.append(k)
            if k != n // k:
                large.append(n // k)
    return small + large[::-1]


@lru_cache(maxsize=4096)
def r4_jacobi(n: int) -> int:
    """R_4(n) = 8 * sum of the divisors of n not divisible by 4."""
    if n < 1:
        raise PreconditionError(f"r4_jacobi needs n >= 1, got {n}")
    return check_u64(8 * sum(k for k in divisors(n) if k % 4))


@dataclass(frozen=True)
class RepProfile:
    """A_d(n, t) over a range of t, sorted by t."""

    d: int
    n: int
    entries: tuple[tuple[int, int], ...]

    def count(self, t: int) -> int:
        for tt, c in self.entries:
            if tt == t:
                return c
        raise KeyError(t)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)

    def s_sum(self, t_min: int, t_max: int) -> int:
        return sum(c for t, c in self.entries if t_min <= t <= t_max)


def _gram_counts(points: np.ndarray, n: int, t_min: int = -(2**62)) -> np.ndarray:
    """Histogram over t in [-n, n] of the inner products of all ordered pairs."""
    hist = np.zeros(2 * n + 1, dtype=np.int64)
    N = len(points)
    step = max(1, 2_000_000 // max(N, 1))
    for i in range(0, N, step):
        g = lattice.int_gram(points[i:i + step], points)
        g = g[g >= t_min] if t_min > -n else g.ravel()
        hist += np.bincount(g + n, minlength=2 * n + 1)
    return hist


def rep_profile(d: int, n: int, space: lattice.Eigenspace | None = None) -> RepProfile:
    """A_d(n, t) for every t in [-n, n] by testing all ordered pairs of E_n."""
    _check_dim(d)
    if n < 1:
        raise PreconditionError(f"rep_profile needs n >= 1, got {n}")
    E = space if space is not None else lattice.enumerate_sphere(d, n)
    hist = _gram_counts(E.points, n)
    return RepProfile(d, n, tuple((t, int(hist[t + n])) for t in range(-n, n + 1)))


def a_d_bruteforce(d: int, n: int, t: int, space: lattice.Eigenspace | None = None) -> int:
    """#{(mu, nu) : |mu|^2 = |nu|^2 = n, <mu, nu> = t}."""
    _check_dim(d)
    if abs(t) > n:
        raise PreconditionError(f"|t| = {abs(t)} exceeds n = {n}")
    E = space if space is not None else lattice.enumerate_sphere(d, n)
    P = E.points
    total = 0
    step = max(1, 2_000_000 // max(len(P), 1))
    for i in range(0, len(P), step):
        total += int(np.count_nonzero(lattice.int_gram(P[i:i + step], P) == t))
    return check_u64(total)


def _check_odd_pair(n: int, t: int) -> None:
    if n < 1 or n % 2 == 0:
        raise PreconditionError(f"n must be a positive odd integer, got {n}")
    if abs(t) >= n:
        raise PreconditionError(f"need |t| < n, got t = {t}, n = {n}")
    if n > 2**20:
        raise OverflowGuardError(f"n = {n}: n^2 - t^2 exceeds the sphere enumeration guard")


def a4_pall_taussky(n: int, t: int) -> int:
    """A_4(n, t) for odd n by the Pall-Taussky formula.

    sum over h | e of R_4(h) * #{nu in Z^3 : |nu|^2 = n^2 - t^2, gcd(nu, e) = h},
    with e = gcd(n, t).  Each nu contributes R_4 of its own gcd with e.
    """
    _check_odd_pair(n, t)
    e = math.gcd(n, t)
    total = 0
    disc = lattice._ball_disc(n * n - t * t)
    for i in range(0, len(disc), PREFIX_CHUNK):
        nu = lattice._sphere_from_prefixes(disc[i:i + PREFIX_CHUNK], n * n - t * t)
        if len(nu) == 0:
            continue
        if e == 1:
            total += 8 * len(nu)
            continue
        g = np.gcd.reduce(np.hstack([nu, np.full((len(nu), 1), e, np.int64)]), axis=1)
        hs, cnt = np.unique(g, return_counts=True)
        total += sum(r4_jacobi(int(h)) * int(c) for h, c in zip(hs, cnt))
    return check_u64(total)


def a4_lower_bound(n: int, t: int) -> int:
    """8 * R_3(n^2 - t^2), a lower bound for A_4(n, t) (equality when gcd(n, t) = 1)."""
    _check_odd_pair(n, t)
    return check_u64(8 * r_d_bruteforce(3, n * n - t * t))


def max_shift_sq(T: float) -> int:
    """The largest integer L with L <= T^2 (float noise in T^2 absorbed)."""
    return math.floor(T * T * (1 + 1e-12) + 1e-9)


def _check_T(lam: int, T: float) -> int:
    if lam < 1:
        raise PreconditionError(f"lambda must be positive, got {lam}")
    if T <= 0:
        raise PreconditionError(f"T must be positive, got {T}")
    L = max_shift_sq(T)
    if L > 2 * lam:
        raise PreconditionError(f"T = {T} exceeds sqrt(2 lambda) = {math.sqrt(2 * lam)}")
    return L


def s_t_range(lam: int, T: float) -> range:
    """Integers t with lam - T^2/2 <= t <= lam - 1."""
    L = _check_T(lam, T)
    return range(lam - L // 2, lam)


def s_d(d: int, lam: int, T: float, route: str = "auto") -> int:
    """S_d(lam, T) = sum of A_d(lam, t) over integer t in [lam - T^2/2, lam - 1].

    ``route`` is ``"auto"``, ``"bruteforce"`` or ``"pall_taussky"`` (d = 4, odd lam).
    """
    _check_dim(d)
    trange = s_t_range(lam, T)
    if len(trange) == 0:
        return 0
    if route == "auto":
        use_pt = d == 4 and lam % 2 == 1 and lam > 200
        route = "pall_taussky" if use_pt else "bruteforce"
    if route == "pall_taussky":
        if d != 4:
            raise PreconditionError("the Pall-Taussky route needs d = 4")
        return check_u64(sum(a4_pall_taussky(lam, t) for t in trange))
    if route != "bruteforce":
        raise PreconditionError(f"unknown route {route!r}")
    E = lattice.enumerate_sphere(d, lam)
    if E.size > BRUTE_FORCE_MAX_POINTS:
        raise PreconditionError(f"|E_{lam}| = {E.size} exceeds the brute-force budget")
    hist = _gram_counts(E.points, lam, t_min=trange.start)
    return check_u64(int(hist[trange.start + lam: trange.stop + lam].sum()))


def s_d_via_pairs(d: int, lam: int, T: float) -> int:
    """S_d(lam, T) as the sum over 2 <= |zeta|^2 <= T^2 of the shifted equal-norm counts."""
    _check_dim(d)
    L = _check_T(lam, T)
    if L < 2:
        return 0
    E = lattice.enumerate_sphere(d, lam)
    _, counts = lattice.shift_count_table(E, L, min_sq=2)
    return check_u64(int(counts.sum()))


def a3_ratio(n: int, t: int) -> float:
    """A_3(n, t) / gcd(n, t)^(1/2): the empirical n^{o(1)} factor."""
    if n < 1 or abs(t) >= n:
        raise PreconditionError(f"need |t| < n, got t = {t}, n = {n}")
    return a_d_bruteforce(3, n, t) / math.sqrt(math.gcd(n, t))


def siegel_floor(lam_max: int, exponent: float = 0.5 - 0.1) -> tuple[int, float]:
    """Over lam <= lam_max with lam != 0, 4, 7 mod 8: (min R_3, min R_3(lam)/lam^exponent)."""
    table = r_d_table(3, lam_max)
    lams = np.array([n for n in range(1, lam_max + 1) if n % 8 not in (0, 4, 7)])
    vals = table[lams]
    return int(vals.min()), float((vals / lams.astype(float) ** exponent).min())
