"""Trigonometric sandwiches for ball indicators built from a smooth bump.

With g(x) = f(|x|), f(u) = exp(-1/(1/4 - u^2)) on |u| < 1/2, the periodised
autocorrelation F_r(x) = sum_n (g*g)((x + 2 pi n)/r) is supported in the ball
of radius r, bounded by (g*g)(0) < 1 and has Fourier coefficients

    F_r^(zeta) = r^d (2 pi)^{-d} G(r |zeta|)^2,   G(xi) = int g(x) e^{-i xi x1} dx,

all non-negative.  Truncating at |zeta| <= T_cut and shifting the constant
term by a rigorous bound on the discarded tail keeps the ordering exact:
the minorant is F_r - tail, the majorant (F_{r'} + tail)/m with r' = r/(1 - delta)
and m the minimum of g*g on the ball of radius 1 - delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special

from . import arithmetic, lattice
from .errors import PreconditionError, TailToleranceError
from .spectral import Eigenfunction, TrigPolynomial, radial_pair_sum, unit_ball_volume

# Frequencies a materialised polynomial may hold, and the largest cut-off.
MAX_TERMS = 4_000_000
MAX_CUT = 4000
QUAD_NODES = 400
# r|zeta| beyond which the coefficient profile is below double-precision noise
FAR_FREQUENCY = 200.0
_ENVELOPE_STEP = 0.02
_SPHERE_AREA = {2: 2 * math.pi, 3: 4 * math.pi, 4: 2 * math.pi**2}


def bump(u) -> np.ndarray:
    """f(u) = exp(-1/(1/4 - u^2)) for |u| < 1/2, else 0."""
    u = np.asarray(u, dtype=np.float64)
    q = 0.25 - u * u
    out = np.zeros_like(u)
    inside = q > 0
    out[inside] = np.exp(-1.0 / q[inside])
    return out


@lru_cache(maxsize=None)
def _radial_nodes(n: int = QUAD_NODES) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.25 * (x + 1.0), 0.25 * w


def _sphere_average(d: int, s: np.ndarray) -> np.ndarray:
    """Average of e^{i s <omega, e1>} over the unit sphere S^{d-1}."""
    if d == 2:
        return special.j0(s)
    if d == 3:
        return np.sinc(s / math.pi)
    safe = np.where(s == 0, 1.0, s)
    return np.where(s == 0, 1.0, 2.0 * special.j1(safe) / safe)


def bump_transform(d: int, xi) -> np.ndarray:
    """G(xi) = int_{R^d} g(x) e^{-i xi x1} dx, a real even function of xi."""
    u, w = _radial_nodes()
    xi = np.asarray(xi, dtype=np.float64)
    flat = xi.ravel()
    weights = w * bump(u) * u ** (d - 1) * _SPHERE_AREA[d]
    out = np.empty_like(flat)
    step = 20000
    for i in range(0, len(flat), step):
        out[i:i + step] = _sphere_average(d, np.outer(flat[i:i + step], u)) @ weights
    return out.reshape(xi.shape)


def bump_self_energy(d: int) -> float:
    """(g*g)(0) = int g^2 dx."""
    u, w = _radial_nodes()
    return float(np.sum(w * bump(u) ** 2 * u ** (d - 1)) * _SPHERE_AREA[d])


def bump_autocorrelation(d: int, s, nodes: int = 200) -> np.ndarray:
    """(g*g)(s e1) by direct integration over the lens |x| < 1/2, |s e1 - x| < 1/2.

    Polar coordinates around the origin: for each radius rho the admissible
    polar angles form [0, theta_max(rho)], and the integrand vanishes to all
    orders at both ends, so Gauss-Legendre converges quickly.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.float64))
    out = np.zeros_like(s_arr)
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    lower_area = {2: 2.0, 3: 2 * math.pi, 4: 4 * math.pi}[d]
    for k, sv in enumerate(np.abs(s_arr)):
        if sv >= 1.0:
            continue
        lo = max(0.0, sv - 0.5)
        rho = lo + (0.5 - lo) * (xg + 1) / 2
        wr = (0.5 - lo) / 2 * wg
        if sv == 0.0:
            out[k] = np.sum(wr * rho ** (d - 1) * bump(rho) ** 2) * _SPHERE_AREA[d]
            continue
        cmin = np.clip((sv * sv + rho * rho - 0.25) / (2 * sv * rho), -1.0, 1.0)
        tmax = np.arccos(cmin)
        theta = tmax[:, None] * (xg[None, :] + 1) / 2
        wt = tmax[:, None] / 2 * wg[None, :]
        q = sv * sv + rho[:, None] ** 2 - 2 * sv * rho[:, None] * np.cos(theta)
        inner = bump(np.sqrt(np.maximum(q, 0.0))) * np.sin(theta) ** (d - 2) * wt
        out[k] = lower_area * np.sum(wr * rho ** (d - 1) * bump(rho) * inner.sum(axis=1))
    return out if np.ndim(s) else float(out[0])


def _shell_count_bound(d: int, k: np.ndarray) -> np.ndarray:
    """Upper bound for #{zeta in Z^d : k <= |zeta| < k + 1} by volume comparison."""
    h = math.sqrt(d) / 2
    outer = (k + 1 + h) ** d
    inner = np.maximum(k - h, 0.0) ** d
    return unit_ball_volume(d) * (outer - inner)


@dataclass(frozen=True)
class _Profile:
    """Coefficient profile on a grid of |zeta| and its monotone envelope."""

    norms: np.ndarray
    envelope: np.ndarray


def _profile(d: int, r: float, kmax: int) -> _Profile:
    rho = np.arange(0.0, kmax + 2.0, _ENVELOPE_STEP / r)
    vals = r**d * (2 * math.pi) ** (-d) * bump_transform(d, r * rho) ** 2
    # running max from the right, padded by 1% for the sampling gaps
    env = np.maximum.accumulate(vals[::-1])[::-1] * 1.01
    return _Profile(rho, env)


def _tail_bounds(d: int, r: float, kmax: int) -> np.ndarray:
    """tail[T] >= sum over |zeta| > T of the coefficients, for T = 0..kmax."""
    prof = _profile(d, r, kmax + 1)
    k = np.arange(kmax + 2, dtype=np.float64)
    # coefficient at |zeta| >= k is at most the envelope at k
    idx = np.searchsorted(prof.norms, k, side="right") - 1
    env_at_k = prof.envelope[np.clip(idx, 0, len(prof.norms) - 1)]
    shell = _shell_count_bound(d, k) * env_at_k
    tail = np.cumsum(shell[::-1])[::-1]
    return tail[:kmax + 1] + _far_tail(d, kmax + 1, float(env_at_k[-1]))


def _far_tail(d: int, k0: int, level: float) -> float:
    """Shells beyond k0, with coefficients bounded by level * (k0/k)^(2d + 4).

    The transform of a smooth compactly supported bump decays faster than any
    power, and by k0 it has already sunk to the quadrature noise floor, so the
    power-law envelope is conservative there.
    """
    k = np.arange(k0, 1000 * k0, dtype=np.float64)
    p = 2 * d + 4
    return float(np.sum(_shell_count_bound(d, k) * level * (k0 / k) ** p))


@dataclass(frozen=True, eq=False)
class BallApproximant:
    """A radial trigonometric polynomial sandwiching the indicator of B(0, r).

    ``radial[n]`` is the Fourier coefficient at every zeta with |zeta|^2 = n,
    for n <= T_cut^2; the constant-term shift by the tail bound is already
    folded into ``radial[0]``.
    """

    kind: str
    d: int
    r: float
    T_cut: int
    tail_bound: float
    radial: np.ndarray = field(repr=False)
    scale: float = 1.0
    support_radius: float = 0.0

    def coefficient(self, zeta: Sequence[int]) -> float:
        z = np.asarray(zeta, dtype=np.int64)
        n = int(z @ z)
        return float(self.radial[n]) if n < len(self.radial) else 0.0

    @property
    def zero_coefficient(self) -> float:
        return float(self.radial[0])

    @property
    def volume_ratio(self) -> float:
        """a^(0) / vol B(0, r): the constant-factor gap to the ball volume."""
        return self.zero_coefficient / (unit_ball_volume(self.d) * (self.r / (2 * math.pi)) ** self.d)

    @property
    def coefficient_constant(self) -> float:
        """C with |a^(zeta)| <= C r^d; the maximum sits at zeta = 0."""
        return float(np.max(np.abs(self.radial))) / self.r**self.d

    def frequencies(self) -> np.ndarray:
        if self.term_count() > MAX_TERMS:
            raise TailToleranceError(f"{self.term_count()} frequencies exceed the budget {MAX_TERMS}")
        blocks = [b[np.einsum("ij,ij->i", b, b) < len(self.radial)]
                  for b in lattice.iter_ball_blocks(self.d, self.T_cut**2)]
        return np.concatenate(blocks)

    def term_count(self) -> int:
        """Number of frequencies |zeta| <= T_cut."""
        return int(arithmetic.r_d_table(self.d, self.T_cut**2).sum())

    def trig_polynomial(self) -> TrigPolynomial:
        freqs = self.frequencies()
        norms = np.einsum("ij,ij->i", freqs, freqs)
        return TrigPolynomial(self.d, freqs, self.radial[norms].astype(np.complex128), real=True)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate sum_zeta a^(zeta) cos(<zeta, x>) at the rows of x."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.d >= 3:
            return self._call_by_norm(x)
        out = np.zeros(len(x))
        for block in lattice.iter_ball_blocks(self.d, self.T_cut**2):
            n2 = np.einsum("ij,ij->i", block, block)
            keep = n2 < len(self.radial)
            block, c = block[keep], self.radial[n2[keep]]
            step = max(1, 2_000_000 // max(len(block), 1))
            for i in range(0, len(x), step):
                out[i:i + step] += np.cos(x[i:i + step] @ block.T.astype(np.float64)) @ c
        return out

    def _call_by_norm(self, x: np.ndarray) -> np.ndarray:
        """Same sum, one coordinate at a time: V_k[n] collects e^{i<zeta, x>} over
        (zeta_1..zeta_k) with squared norm n, so each step is a convolution in n.
        Costs O(d T^3) per point instead of about T^d for the direct sum."""
        T, L = self.T_cut, len(self.radial)
        z = np.arange(-T, T + 1)
        z2 = z * z
        out = np.empty(len(x))
        step = max(1, 2_000_000 // L)
        for i in range(0, len(x), step):
            X = x[i:i + step]
            phases = [np.exp(1j * X[:, k:k + 1] * z) for k in range(self.d)]
            V = np.zeros((len(X), L), dtype=np.complex128)
            # z2 repeats each square twice, so add the two halves separately
            V[:, z2[T:]] += phases[0][:, T:]
            V[:, z2[:T]] += phases[0][:, :T]
            for ph in phases[1:-1]:
                W = np.zeros_like(V)
                for j, q in enumerate(z2):
                    W[:, q:] += ph[:, j:j + 1] * V[:, :L - q]
                V = W
            acc = np.zeros(len(X), dtype=np.complex128)
            for j, q in enumerate(z2):
                acc += phases[-1][:, j] * (V[:, :L - q] @ self.radial[q:])
            out[i:i + step] = acc.real
        return out

    def exact(self, x: np.ndarray) -> np.ndarray:
        """The untruncated function, evaluated spatially from the autocorrelation profile."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        x = (x + math.pi) % (2 * math.pi) - math.pi
        dist = np.linalg.norm(x, axis=1) / self.support_radius
        out = np.zeros(len(x))
        inside = dist < 1
        if inside.any():
            out[inside] = bump_autocorrelation(self.d, dist[inside])
        return out / self.scale

    def pair(self, psi: Eigenfunction, center: Sequence[float] | None = None) -> float:
        """int a(x - y) |psi(x)|^2 dvol(x), via the coefficient pairing."""
        if psi.d != self.d:
            raise PreconditionError("dimension mismatch")
        y = np.zeros(self.d) if center is None else np.asarray(center, dtype=np.float64)
        table = np.zeros(4 * psi.lam + 1)
        n = min(len(self.radial), len(table))
        table[:n] = self.radial[:n]
        return float(radial_pair_sum(psi, y, table).real)

    def to_json(self) -> str:
        return self.trig_polynomial().to_json()


def _choose_cut(d: int, r: float, tail_tol: float, total: float) -> tuple[int, float]:
    kmax = min(MAX_CUT, int(math.ceil(FAR_FREQUENCY / r)) + 2)
    tails = _tail_bounds(d, r, kmax)
    ok = np.nonzero(tails <= tail_tol * total)[0]
    if len(ok) == 0:
        raise TailToleranceError(f"relative tail {tails[-1] / total:.3e} at T_cut = {kmax} "
                                 f"exceeds tail_tol = {tail_tol}")
    T = int(ok[0])
    return T, float(tails[T])


def _radial_coefficients(d: int, r: float, T: int) -> np.ndarray:
    n = np.arange(T * T + 1, dtype=np.float64)
    return r**d * (2 * math.pi) ** (-d) * bump_transform(d, r * np.sqrt(n)) ** 2


def _check_dim(d: int) -> None:
    if d not in (2, 3, 4):
        raise PreconditionError(f"dimension must be 2, 3 or 4, got {d}")


def _check_tol(tail_tol: float) -> None:
    if not 0 < tail_tol < 1:
        raise PreconditionError(f"tail_tol must lie in (0, 1), got {tail_tol}")


def smooth_minorant(d: int, r: float, tail_tol: float = 1e-10) -> BallApproximant:
    """F_r minus its tail bound: non-negative coefficients and F_r <= 1_{B(0, r)}."""
    _check_dim(d)
    _check_tol(tail_tol)
    if not 0 < r < math.pi / 2:
        raise PreconditionError(f"minorant radius must lie in (0, pi/2), got {r}")
    total = r**d * (2 * math.pi) ** (-d) * bump_self_energy(d)
    T, tail = _choose_cut(d, r, tail_tol, total)
    radial = _radial_coefficients(d, r, T)
    if tail >= radial[0]:
        raise TailToleranceError(f"tail bound {tail:.3e} exceeds the zero coefficient {radial[0]:.3e}; "
                                 "lower tail_tol")
    radial[0] -= tail
    return BallApproximant("minorant", d, r, T, tail, radial, 1.0, r)


def majorant_floor(d: int, delta: float) -> float:
    """m = min of (g*g) over |u| <= 1 - delta, attained on the boundary sphere."""
    s = np.linspace(0.0, 1.0 - delta, 41)
    return float(np.min(bump_autocorrelation(d, s)))


def scaled_majorant(d: int, r: float, delta: float = 0.25, tail_tol: float = 1e-10) -> BallApproximant:
    """(F_{r'} + tail)/m with r' = r/(1 - delta): at least 1 on B(0, r), non-negative everywhere."""
    _check_dim(d)
    _check_tol(tail_tol)
    if not 0 < delta <= 0.25:
        raise PreconditionError(f"delta must lie in (0, 1/4], got {delta}")
    if r <= 0:
        raise PreconditionError(f"radius must be positive, got {r}")
    rp = r / (1 - delta)
    if rp >= math.pi / 2:
        raise PreconditionError(f"r/(1 - delta) = {rp} must stay below pi/2")
    m = majorant_floor(d, delta)
    total = rp**d * (2 * math.pi) ** (-d) * bump_self_energy(d)
    T, tail = _choose_cut(d, rp, tail_tol, total)
    radial = _radial_coefficients(d, rp, T)
    radial[0] += tail
    return BallApproximant("majorant", d, r, T, tail / m, radial / m, m, rp)
