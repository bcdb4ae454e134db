"""Explicit eigenfunction families.

* ``theorem31_family``: two cosines whose mass concentrates to 2 on balls
  shrinking towards the origin.
* ``bourgain_pairs`` / ``pair_eigenfunction``: a basis built from close pairs
  on the sphere, each member nearly vanishing near the origin.
* ``blowup_family``: the equal-amplitude sum over a full eigenspace, with the
  arithmetic lower bound for its mass on small balls.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import arithmetic, lattice
from .errors import PreconditionError
from .spectral import SCHEMA_VERSION, Eigenfunction, ball_kernel


def theorem31_family(m: int, d: int = 2) -> Eigenfunction:
    """cos(m x1 + (m+1) x2) + cos((m+1) x1 + m x2), as a normalised eigenfunction."""
    if m < 1:
        raise PreconditionError(f"m must be a positive integer, got {m}")
    if d < 2:
        raise PreconditionError(f"need d >= 2, got {d}")
    pad = (0,) * (d - 2)
    coeffs = {}
    for a, b in ((m, m + 1), (m + 1, m)):
        coeffs[(a, b) + pad] = 0.5
        coeffs[(-a, -b) + pad] = 0.5
    return Eigenfunction.from_mapping(d, coeffs)


def blowup_family(lam: int, d: int, cache_dir=None) -> Eigenfunction:
    """N^{-1/2} sum over the whole eigenspace E_lam of e_mu."""
    E = lattice.enumerate_sphere(d, lam, cache_dir)
    if E.size == 0:
        raise PreconditionError(f"E_{lam} is empty in dimension {d}")
    return Eigenfunction(d, lam, E.points, np.full(E.size, 1.0 / math.sqrt(E.size)))


def blowup_mass_average(lam: int, d: int, r: float) -> float:
    """Ball average of |psi_lam|^2 over B(0, r) for the equal-amplitude family.

    With equal amplitudes the pair sum collapses onto the inner-product
    histogram: (1/N) sum_t A_d(lam, t) K_d(r sqrt(2 lam - 2 t)).  Exact, and
    cheaper in memory than the generic pair sum for large eigenspaces.
    """
    if not 0 < r < math.pi:
        raise PreconditionError(f"radius must lie in (0, pi), got {r}")
    hist = _inner_product_histogram(d, lam)
    t = np.arange(-lam, lam + 1)
    kern = ball_kernel(d, r * np.sqrt(2.0 * (lam - t)))
    return float(np.dot(hist, kern) / hist[-1])


@lru_cache(maxsize=8)
def _inner_product_histogram(d: int, lam: int) -> np.ndarray:
    """A_d(lam, t) for t = -lam..lam as floats; the last entry is N_lam."""
    E = lattice.enumerate_sphere(d, lam)
    if E.size == 0:
        raise PreconditionError(f"E_{lam} is empty in dimension {d}")
    hist = arithmetic._gram_counts(E.points, lam).astype(np.float64)
    hist.flags.writeable = False
    return hist


def blowup_radius_cut(lam: int, r: float) -> float:
    """T = 1/(r log(3 + lam)): the frequency range visible at scale r, up to a log."""
    return 1.0 / (r * math.log(3 + lam))


def blowup_lower_bound(lam: int, r: float) -> float:
    """(1 + S_4(lam, T)) / N_lam with T = 1/(r log(3 + lam)), for odd lam in d = 4.

    S_4 is summed through the Pall-Taussky formula, so the cost is a sphere
    enumeration in Z^3 per t rather than a pair count over E_lam.
    """
    if lam < 1 or lam % 2 == 0:
        raise PreconditionError(f"lambda must be a positive odd integer, got {lam}")
    if not r > lam ** -0.5:
        raise PreconditionError(f"radius {r} must exceed lambda^(-1/2) = {lam ** -0.5}")
    T = blowup_radius_cut(lam, r)
    s = arithmetic.s_d(4, lam, T, route="pall_taussky") if T * T >= 2 else 0
    return (1 + s) / arithmetic.r4_jacobi(lam)


@dataclass(frozen=True, eq=False)
class PairList:
    """Disjoint pairs {mu, mu'} of one eigenspace with 0 < |mu - mu'| <= Y."""

    d: int
    lam: int
    Y: float
    size: int
    pairs: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return len(self.pairs)

    @property
    def density(self) -> float:
        return 2 * self.count / self.size if self.size else 0.0

    def separations(self) -> np.ndarray:
        diff = self.pairs[:, 0] - self.pairs[:, 1]
        return np.sqrt(np.einsum("ij,ij->i", diff, diff).astype(np.float64))

    def validate(self) -> None:
        """Raise AssertionError unless every pair invariant holds."""
        if self.count == 0:
            return
        flat = self.pairs.reshape(-1, self.d)
        assert np.all(np.einsum("ij,ij->i", flat, flat) == self.lam), "point off the sphere"
        assert len(np.unique(flat, axis=0)) == len(flat), "pairs overlap"
        sep = self.separations()
        assert np.all(sep > 0), "degenerate pair"
        assert np.all(sep * sep <= lattice._radius_sq_bound(self.Y)), "pair wider than Y"

    def eigenfunctions(self) -> list[Eigenfunction]:
        return [pair_eigenfunction(p) for p in self.pairs]

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "d": self.d,
            "lambda": self.lam,
            "Y": self.Y,
            "size": self.size,
            "density": self.density,
            "pairs": [[[int(v) for v in mu] for mu in p] for p in self.pairs],
        })

    @classmethod
    def from_json(cls, text: str) -> "PairList":
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise PreconditionError("unsupported pair list schema")
        pairs = np.asarray(data["pairs"], dtype=np.int64).reshape(-1, 2, data["d"])
        out = cls(data["d"], data["lambda"], data["Y"], data["size"], pairs)
        out.validate()
        return out


def _neighbour_lists(P: np.ndarray, Y: float) -> list[np.ndarray]:
    """For each point, the indices within distance Y ordered by (distance, index)."""
    bound = lattice._radius_sq_bound(Y)
    out = []
    step = max(1, 2_000_000 // max(len(P), 1))
    for i in range(0, len(P), step):
        d2 = lattice._pair_sq_distances(P[i:i + step], P)
        for row, k in zip(d2, range(i, i + step)):
            idx = np.flatnonzero((row <= bound) & (row > 0))
            # indices are already in lexicographic order, so a stable sort on
            # distance breaks ties lexicographically
            out.append(idx[np.argsort(row[idx], kind="stable")])
    return out


def bourgain_pairs(E: lattice.Eigenspace, Y: float) -> PairList:
    """Greedy pairing: repeatedly take the lexicographically smallest point that
    still has a live neighbour within Y, pair it with its nearest live neighbour,
    and remove both.

    Removals only lower neighbour counts, so a point that is isolated once stays
    isolated; a single pass in lexicographic order is therefore the same greedy.
    """
    if Y <= 0:
        raise PreconditionError(f"Y must be positive, got {Y}")
    P = E.points
    N = len(P)
    if N < 2:
        return PairList(E.d, E.lam, float(Y), N, np.zeros((0, 2, E.d), np.int64))
    nbrs = _neighbour_lists(P, Y)
    alive = np.ones(N, dtype=bool)
    live_count = np.array([len(n) for n in nbrs], dtype=np.int64)
    chosen = []
    for i in range(N):
        if not alive[i] or live_count[i] == 0:
            continue
        cand = nbrs[i][alive[nbrs[i]]]
        j = int(cand[0])
        chosen.append((i, j))
        for k in (i, j):
            alive[k] = False
            live_count[nbrs[k]] -= 1
    pairs = np.stack([P[[i for i, _ in chosen]], P[[j for _, j in chosen]]], axis=1) if chosen \
        else np.zeros((0, 2, E.d), np.int64)
    return PairList(E.d, E.lam, float(Y), N, pairs)


def pair_eigenfunction(pair: Sequence[Sequence[int]]) -> Eigenfunction:
    """(e_mu - e_mu') / sqrt(2)."""
    mu, nu = (tuple(int(v) for v in p) for p in pair)
    if mu == nu:
        raise PreconditionError("a pair needs two distinct points")
    h = 1.0 / math.sqrt(2.0)
    return Eigenfunction.from_mapping(len(mu), {mu: h, nu: -h})


def bourgain_radius(lam: int, d: int = 3) -> float:
    """Y = lam^{1/(2(d-1))} log lam: the pairing radius used in the scans."""
    return lam ** (1.0 / (2 * (d - 1))) * math.log(lam)
