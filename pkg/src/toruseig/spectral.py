"""Eigenfunctions on the flat torus R^d / 2 pi Z^d and their localized L^2 mass.

An eigenfunction is a finite sum psi = sum_mu c(mu) e_mu over lattice points on
one sphere |mu|^2 = lam.  Ball averages of |psi|^2 are evaluated exactly in
frequency space through the normalised Fourier transform of the unit ball,

    K_d(xi) = Gamma(d/2 + 1) (2/xi)^{d/2} J_{d/2}(xi),

so that the average of e^{i<zeta, x>} over B(y, r) is e^{i<zeta, y>} K_d(r|zeta|).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import lattice
from .arithmetic import max_shift_sq
from .bessel import jn
from .errors import PairBudgetExceeded, PreconditionError

PAIR_BUDGET = 300_000_000
NORM_TOL = 1e-12
SCHEMA_VERSION = 1


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def ball_volume(d: int, r: float) -> float:
    """vol(B(0, r)) for the normalised measure dx / (2 pi)^d."""
    return unit_ball_volume(d) * r**d / (2 * math.pi) ** d


# --------------------------------------------------------------------------
# ball kernel


def _kernel_series(d: int, xi: np.ndarray) -> np.ndarray:
    # Gamma(d/2+1) * sum_k (-1)^k (xi/2)^{2k} / (k! Gamma(k + d/2 + 1))
    q = -(xi / 2.0) ** 2
    term = np.ones_like(xi)
    total = term.copy()
    for k in range(1, 200):
        term = term * q / (k * (k + d / 2.0))
        total += term
        if k > 8 and np.all(np.abs(term) < 1e-17):
            break
    return total


def ball_kernel(d: int, xi) -> np.ndarray | float:
    """Average of cos(<x, xi e>) over the unit ball of R^d (rotation invariant)."""
    if d not in (2, 3, 4):
        raise PreconditionError(f"dimension must be 2, 3 or 4, got {d}")
    arr = np.asarray(xi, dtype=np.float64)
    if np.any(arr < 0):
        raise PreconditionError("ball_kernel needs xi >= 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat < 0.5
    out[small] = _kernel_series(d, flat[small])
    big = flat[~small]
    if d == 3:
        out[~small] = 3.0 * (np.sin(big) - big * np.cos(big)) / big**3
    elif d == 2:
        out[~small] = 2.0 * jn(1, big) / big
    else:
        out[~small] = 8.0 * jn(2, big) / big**2
    out = out.reshape(arr.shape)
    return float(out) if np.ndim(xi) == 0 else out


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not 0 < self.radius < math.pi:
            raise PreconditionError(f"ball radius must lie in (0, pi), got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def d(self) -> int:
        return len(self.center)

    def volume(self) -> float:
        return ball_volume(self.d, self.radius)


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """psi = sum c(mu) e_mu with every mu on |mu|^2 = lam; points sorted lexicographically."""

    d: int
    lam: int
    points: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, self.d)
        c = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        if len(pts) != len(c) or len(pts) == 0:
            raise PreconditionError("eigenfunction needs one coefficient per support point")
        if np.any(np.einsum("ij,ij->i", pts, pts) != self.lam):
            raise PreconditionError(f"support points must satisfy |mu|^2 = {self.lam}")
        order = np.lexsort(pts.T[::-1])
        pts, c = pts[order], c[order]
        if len(pts) > 1 and np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise PreconditionError("duplicate support points")
        if abs(np.vdot(c, c).real - 1.0) > NORM_TOL:
            raise PreconditionError(f"eigenfunction not normalised: sum |c|^2 = {np.vdot(c, c).real}")
        pts.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_mapping(cls, d: int, coeffs: Mapping[Sequence[int], complex],
                     normalize: bool = False) -> "Eigenfunction":
        pts = np.array([tuple(k) for k in coeffs], dtype=np.int64).reshape(-1, d)
        c = np.array(list(coeffs.values()), dtype=np.complex128)
        if normalize:
            c = c / np.sqrt(np.vdot(c, c).real)
        lam = int(pts[0] @ pts[0])
        return cls(d, lam, pts, c)

    @property
    def support_size(self) -> int:
        return len(self.points)

    @property
    def index(self) -> lattice.Eigenspace:
        idx = self.__dict__.get("_index")
        if idx is None:
            idx = lattice.Eigenspace(self.d, self.lam, self.points)
            object.__setattr__(self, "_index", idx)
        return idx

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in p): complex(c) for p, c in zip(self.points, self.coeffs)}

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Evaluate psi at points x of shape (M, d) (or a single point)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        out = np.empty(len(x), dtype=np.complex128)
        step = max(1, 2_000_000 // len(self.points))
        for i in range(0, len(x), step):
            out[i:i + step] = np.exp(1j * (x[i:i + step] @ self.points.T)) @ self.coeffs
        return out[0] if single else out

    def intensity(self, x: np.ndarray) -> np.ndarray:
        v = self(x)
        return (v * np.conj(v)).real

    # -- serialization

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "lambda": self.lam,
            "coeffs": [[[int(v) for v in p], float(c.real), float(c.imag)]
                       for p, c in zip(self.points, self.coeffs)],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Eigenfunction":
        obj = json.loads(text)
        d = int(obj["d"])
        pts = np.array([row[0] for row in obj["coeffs"]], dtype=np.int64).reshape(-1, d)
        c = np.array([complex(row[1], row[2]) for row in obj["coeffs"]])
        return cls(d, int(obj["lambda"]), pts, c)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Eigenfunction":
        return cls.from_json(Path(path).read_text())


def exponential(mu: Sequence[int]) -> Eigenfunction:
    """The pure mode e_mu."""
    mu = np.asarray(mu, dtype=np.int64)
    return Eigenfunction(len(mu), int(mu @ mu), mu[None, :], np.ones(1))


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """A finite sum sum_zeta a(zeta) e_zeta on T^d."""

    d: int
    freqs: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    real: bool = False

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=np.int64).reshape(-1, self.d)
        c = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        if len(f) != len(c):
            raise PreconditionError("one coefficient per frequency")
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "coeffs", c)
        if self.real and not self.is_conjugate_symmetric():
            raise PreconditionError("real-valued polynomial must be conjugate symmetric")

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in z): complex(c) for z, c in zip(self.freqs, self.coeffs)}

    def is_conjugate_symmetric(self, tol: float = 1e-14) -> bool:
        table = self.as_dict()
        for z, c in table.items():
            other = table.get(tuple(-v for v in z), 0.0)
            if abs(other - np.conj(c)) > tol * max(1.0, abs(c)):
                return False
        return True

    def coefficient(self, zeta: Sequence[int]) -> complex:
        return self.as_dict().get(tuple(int(v) for v in zeta), 0.0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.zeros(len(x), dtype=np.complex128)
        step = max(1, 4_000_000 // max(len(self.freqs), 1))
        for i in range(0, len(x), step):
            out[i:i + step] = np.exp(1j * (x[i:i + step] @ self.freqs.T)) @ self.coeffs
        return out.real if self.real else out

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "real": self.real,
            "coeffs": [[[int(v) for v in z], float(c.real), float(c.imag)]
                       for z, c in zip(self.freqs, self.coeffs)],
        })


# --------------------------------------------------------------------------
# matrix elements and ball averages


def matrix_element(psi: Eigenfunction, zeta: Sequence[int]) -> complex:
    """<e_zeta psi, psi> = sum_mu c(mu) conj(c(mu + zeta))."""
    z = np.asarray(zeta, dtype=np.int64)
    if int(z @ z) > 4 * psi.lam:
        return 0j
    j = psi.index.index_of(psi.points + z)
    hit = j >= 0
    if not hit.any():
        return 0j
    return complex(np.sum(psi.coeffs[hit] * np.conj(psi.coeffs[j[hit]])))


def _kernel_table(d: int, r: float, max_norm: int) -> np.ndarray:
    """K_d(r sqrt(n)) for integer n in [0, max_norm]."""
    return ball_kernel(d, r * np.sqrt(np.arange(max_norm + 1, dtype=np.float64)))


def radial_pair_sum(psi: Eigenfunction, center: Sequence[float], table: np.ndarray,
                    pair_budget: int = PAIR_BUDGET) -> complex:
    """sum over support pairs of c(mu) conj(c(nu)) e^{i<mu - nu, y>} w(|mu - nu|^2).

    ``table[n]`` holds the radial weight w at |zeta|^2 = n for n <= 4 lam.
    This is the integral of a(x - y) |psi(x)|^2 for the radial multiplier a with
    Fourier coefficients w.
    """
    N = psi.support_size
    if N * N > pair_budget:
        raise PairBudgetExceeded(
            f"{N * N} support pairs exceed the budget {pair_budget}; use the arithmetic lower bound")
    P, c = psi.points, psi.coeffs
    y = np.asarray(center, dtype=np.float64)
    # e^{i<mu - nu, y>} = phase(mu) * conj(phase(nu))
    a = c * np.exp(1j * (P @ y)) if np.any(y) else c
    total = 0j
    step = max(1, 2_000_000 // N)
    for i in range(0, N, step):
        diff = P[i:i + step, None, :] - P[None, :, :]
        n2 = np.einsum("ijk,ijk->ij", diff, diff)
        total += np.sum(a[i:i + step, None] * np.conj(a)[None, :] * table[n2])
    return complex(total)


def mass_average(psi: Eigenfunction, ball: Ball, pair_budget: int = PAIR_BUDGET) -> float:
    """(1/vol B) * integral over B of |psi|^2, evaluated exactly in frequency space.

    |psi|^2 = sum_{mu, nu} c(mu) conj(c(nu)) e_{mu - nu}; the ball average of
    e_zeta is e^{i<zeta, y>} K_d(r |zeta|), with kernels tabulated by |zeta|^2.
    """
    if ball.d != psi.d:
        raise PreconditionError("ball and eigenfunction dimensions differ")
    table = _kernel_table(psi.d, ball.radius, 4 * psi.lam)
    total = radial_pair_sum(psi, ball.center, table, pair_budget)
    if abs(total.imag) > 1e-10:
        raise ArithmeticError(f"ball average has imaginary residue {total.imag}")
    value = total.real
    if value < -1e-8:
        raise ArithmeticError(f"ball average negative: {value}")
    return float(value)


def _close_pairs(P: np.ndarray, max_sq: int, positive: bool = False
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ordered pairs (i, j), i != j, with |P[j] - P[i]|^2 <= max_sq.

    Returns ``(zetas, i, j)`` with ``zetas = P[j] - P[i]`` aligned with i and j.
    With ``positive`` only lexicographically positive zeta are kept.
    """
    N, d = P.shape
    ii, jj = [], []
    step = max(1, 4_000_000 // max(N, 1))
    for s in range(0, N, step):
        diff = P[None, :, :] - P[s:s + step, None, :]
        n2 = np.einsum("ijk,ijk->ij", diff, diff)
        mask = (n2 > 0) & (n2 <= max_sq)
        if positive:
            mask &= _lex_positive(diff)
        a, b = np.nonzero(mask)
        ii.append(a + s)
        jj.append(b)
    i = np.concatenate(ii) if ii else np.zeros(0, np.int64)
    j = np.concatenate(jj) if jj else np.zeros(0, np.int64)
    return P[j] - P[i], i, j


def _lex_positive(diff: np.ndarray) -> np.ndarray:
    """True where the first nonzero coordinate along the last axis is positive."""
    out = np.zeros(diff.shape[:-1], dtype=bool)
    undecided = np.ones_like(out)
    for k in range(diff.shape[-1]):
        c = diff[..., k]
        out |= undecided & (c > 0)
        undecided &= c == 0
    return out


def _zeta_keys(zetas: np.ndarray, lam: int) -> np.ndarray:
    """Integer keys ordering difference vectors lexicographically (|coords| <= 2 sqrt(lam))."""
    half = 2 * math.isqrt(lam) + 2
    base = 2 * half + 1
    keys = np.zeros(len(zetas), dtype=np.int64)
    for k in range(zetas.shape[1]):
        keys = keys * base + (zetas[:, k] + half)
    return keys


def _group_sum(values: np.ndarray, zetas: np.ndarray) -> np.ndarray:
    """Sum complex ``values`` over pairs sharing the same zeta."""
    _, inv = np.unique(zetas, axis=0, return_inverse=True)
    inv = inv.ravel()
    n = inv.max() + 1
    return np.bincount(inv, values.real, n) + 1j * np.bincount(inv, values.imag, n)


def discrepancy_bound(psi: Eigenfunction, T: float) -> float:
    """sum over 1 <= |zeta| <= T of |<e_zeta psi, psi>|, a centre-free bound on ball discrepancies."""
    L = max_shift_sq(T)
    if L < 1:
        return 0.0
    zetas, i, j = _close_pairs(psi.points, L)
    if len(i) == 0:
        return 0.0
    vals = _group_sum(psi.coeffs[i] * np.conj(psi.coeffs[j]), zetas)
    return float(np.abs(vals).sum())


# --------------------------------------------------------------------------
# orthonormal bases of one eigenspace


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Rows of ``coeffs`` are the eigenfunctions; columns follow ``space.points``."""

    space: lattice.Eigenspace
    coeffs: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    def member(self, n: int) -> Eigenfunction:
        return Eigenfunction(self.space.d, self.space.lam, self.space.points, self.coeffs[n])

    @property
    def members(self) -> list[Eigenfunction]:
        return [self.member(n) for n in range(self.size)]

    def gram(self) -> np.ndarray:
        return self.coeffs @ self.coeffs.conj().T

    def parseval_sums(self) -> np.ndarray:
        """For each mu in E, sum over basis members of |c_n(mu)|^2."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=0)

    def _positive_blocks(self, max_sq: int):
        """Yield (zetas, block) over lexicographically positive zeta with
        1 <= |zeta|^2 <= max_sq, block[k, n] = <e_zeta psi_n, psi_n>.

        The negative half follows from M_n(-zeta) = conj(M_n(zeta)).  Blocks
        are sized so one never holds more than about 2^23 complex entries.
        """
        P = self.space.points
        zetas, i, j = _close_pairs(P, max_sq, positive=True)
        if len(i) == 0:
            return
        keys = _zeta_keys(zetas, self.space.lam)
        order = np.argsort(keys, kind="stable")
        keys, i, j, zetas = keys[order], i[order], j[order], zetas[order]
        new = np.r_[True, keys[1:] != keys[:-1]]
        starts = np.flatnonzero(new)
        group = np.cumsum(new) - 1
        rank = np.arange(len(keys)) - starts[group]
        CT = np.ascontiguousarray(self.coeffs.T)
        CTc = CT.conj()
        per_block = max(1, (1 << 23) // max(self.size, 1))
        for g0 in range(0, len(starts), per_block):
            g1 = min(g0 + per_block, len(starts))
            p0 = starts[g0]
            p1 = starts[g1] if g1 < len(starts) else len(keys)
            block = np.zeros((g1 - g0, self.size), dtype=np.complex128)
            gi, ri = group[p0:p1] - g0, rank[p0:p1]
            ii, jj = i[p0:p1], j[p0:p1]
            # within one rank every group appears at most once, so += is safe
            for r in range(int(ri.max()) + 1):
                sel = np.flatnonzero(ri == r)
                block[gi[sel]] += CT[ii[sel]] * CTc[jj[sel]]
            yield zetas[starts[g0:g1]], block

    def matrix_elements(self, max_sq: int) -> tuple[np.ndarray, np.ndarray]:
        """All nonzero zeta with |zeta|^2 <= max_sq in E - E (lexicographic order)
        and the matrix elements <e_zeta psi_n, psi_n>, shape (basis size, #zeta)."""
        parts = list(self._positive_blocks(max_sq))
        if not parts:
            return np.zeros((0, self.space.d), np.int64), np.zeros((self.size, 0), np.complex128)
        pz = np.concatenate([z for z, _ in parts])
        pm = np.concatenate([b for _, b in parts])
        zetas = np.concatenate([-pz[::-1], pz])
        M = np.concatenate([pm[::-1].conj(), pm])
        return zetas, M.T

    def matrix_element_sums(self, max_sq: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Like ``matrix_elements`` but only the absolute sums: returns
        (zetas, sum over n of |M_n(zeta)|, sum over zeta of |M_n(zeta)|).

        Streams over zeta, so memory stays bounded for large eigenspaces.
        """
        zs, col = [], []
        row = np.zeros(self.size)
        for z, block in self._positive_blocks(max_sq):
            a = np.abs(block)
            zs.append(z)
            col.append(a.sum(axis=1))
            row += a.sum(axis=0)
        if not zs:
            return np.zeros((0, self.space.d), np.int64), np.zeros(0), row
        pz, pc = np.concatenate(zs), np.concatenate(col)
        return np.concatenate([-pz[::-1], pz]), np.concatenate([pc[::-1], pc]), 2 * row

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "d": self.space.d,
            "lambda": self.space.lam,
            "points": self.space.points.tolist(),
            "re": self.coeffs.real.tolist(),
            "im": self.coeffs.imag.tolist(),
        })


def exponential_basis(E: lattice.Eigenspace) -> OrthonormalBasis:
    return OrthonormalBasis(E, np.eye(E.size, dtype=np.complex128))


def gram_schmidt(A: np.ndarray, block: int = 64) -> np.ndarray:
    """Orthonormalise the columns of A by block Gram-Schmidt.

    Each block is projected off the earlier ones twice (classical, with one
    re-orthogonalisation pass) and then swept by modified Gram-Schmidt, also
    twice.  Column k of the result spans the same flag as columns 0..k of A.
    """
    Q = np.array(A, dtype=np.complex128, copy=True)
    n = Q.shape[1]
    for b0 in range(0, n, block):
        b1 = min(b0 + block, n)
        V = Q[:, b0:b1]
        for _ in range(2):
            if b0:
                V -= Q[:, :b0] @ (Q[:, :b0].conj().T @ V)
        for k in range(b1 - b0):
            v = V[:, k]
            for _ in range(2):
                if k:
                    v -= V[:, :k] @ (V[:, :k].conj().T @ v)
            nv = np.linalg.norm(v)
            if nv < 1e-12:
                raise ArithmeticError("Gram-Schmidt met a numerically dependent column")
            v /= nv
    return Q


def random_onb(E: lattice.Eigenspace, seed: int) -> OrthonormalBasis:
    """A random unitary mix of the exponential basis, deterministic in ``seed``."""
    if E.size == 0:
        raise PreconditionError(f"E_{E.lam} is empty in d = {E.d}")
    rng = np.random.default_rng(seed)
    N = E.size
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Q = gram_schmidt(G)
    # column n of Q holds c_n(mu) over mu
    return OrthonormalBasis(E, np.ascontiguousarray(Q.T))


def v1_localized(basis: OrthonormalBasis, zeta: Sequence[int]) -> float:
    """sum over basis members of |<e_zeta psi_n, psi_n>| for zeta != 0."""
    z = np.asarray(zeta, dtype=np.int64)
    if not z.any():
        raise PreconditionError("v1_localized needs zeta != 0")
    E = basis.space
    if int(z @ z) > 4 * E.lam:
        return 0.0
    j = E.index_of(E.points + z)
    hit = np.flatnonzero(j >= 0)
    if len(hit) == 0:
        return 0.0
    C = basis.coeffs
    vals = np.sum(C[:, hit] * np.conj(C[:, j[hit]]), axis=1)
    return float(np.abs(vals).sum())


# --------------------------------------------------------------------------
# quadrature oracle


def _gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _sphere_rule(d: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on S^{d-1} and weights summing to the sphere's area."""
    m = 2 * n
    phi = 2 * math.pi * np.arange(m) / m
    wphi = np.full(m, 2 * math.pi / m)
    if d == 2:
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), wphi
    ct, wt = _gauss_legendre(n, -1.0, 1.0)
    st = np.sqrt(1 - ct * ct)
    if d == 3:
        C, P = np.meshgrid(ct, phi, indexing="ij")
        S = np.sqrt(1 - C * C)
        nodes = np.stack([C, S * np.cos(P), S * np.sin(P)], axis=-1).reshape(-1, 3)
        return nodes, np.outer(wt, wphi).ravel()
    # d = 4: chi in [0, pi] with weight sin^2 chi, then S^2
    chi, wchi = _gauss_legendre(n, 0.0, math.pi)
    wchi = wchi * np.sin(chi) ** 2
    s2, w2 = _sphere_rule(3, n)
    nodes = np.concatenate([
        np.cos(chi)[:, None, None].repeat(len(s2), 1),
        np.sin(chi)[:, None, None] * s2[None, :, :],
    ], axis=2).reshape(-1, 4)
    return nodes, np.outer(wchi, w2).ravel()


def _quadrature_once(psi: Eigenfunction, ball: Ball, n: int) -> float:
    d, r = psi.d, ball.radius
    rho, wrho = _gauss_legendre(n, 0.0, r)
    wrho = wrho * rho ** (d - 1)
    omega, womega = _sphere_rule(d, n)
    y = np.asarray(ball.center)
    total = 0.0
    for k in range(len(rho)):
        vals = psi.intensity(y + rho[k] * omega)
        total += wrho[k] * float(vals @ womega)
    euclid_volume = unit_ball_volume(d) * r**d
    return total / euclid_volume


def mass_average_quadrature(psi: Eigenfunction, ball: Ball, tol: float = 1e-6,
                            max_nodes: int = 512) -> float:
    """Ball average of |psi|^2 by product Gauss rules in polar coordinates.

    The order grows until two successive estimates agree within ``tol``.
    """
    if ball.d != psi.d:
        raise PreconditionError("ball and eigenfunction dimensions differ")
    oscillations = 2 * math.sqrt(psi.lam) * ball.radius
    n = max(8, int(oscillations) + 8)
    prev = _quadrature_once(psi, ball, n)
    while True:
        n = int(n * 1.5) + 1
        if n > max_nodes:
            raise ArithmeticError(f"quadrature did not reach tol={tol}")
        cur = _quadrature_once(psi, ball, n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
