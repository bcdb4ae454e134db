"""Lattice points on spheres, shifted equal-norm counts, caps and planar arcs.

Points are stored as ``int64`` numpy arrays of shape ``(N, d)`` sorted
lexicographically.  Everything on the hot path (sphere enumeration, membership
tests) stays in integer arithmetic.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import MAX_NORM, PreconditionError, OverflowGuardError

COORD_GUARD = 2**20
CACHE_ENV = "TORUSEIG_CACHE_DIR"

_CACHE_MAGIC = b"TSPH"
_CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sHHQQ")


def _check_dim(d: int) -> None:
    if d not in (2, 3, 4):
        raise PreconditionError(f"dimension must be 2, 3 or 4, got {d}")


def _check_norm(lam: int) -> None:
    if lam < 0:
        raise PreconditionError(f"norm must be non-negative, got {lam}")
    if lam > MAX_NORM:
        raise OverflowGuardError(f"norm {lam} exceeds the 2^40 enumeration guard")


def isqrt_array(values: np.ndarray) -> np.ndarray:
    """Exact floor square root of a non-negative int64 array (values <= 2^52)."""
    root = np.sqrt(values.astype(np.float64)).astype(np.int64)
    root -= (root * root > values).astype(np.int64)
    root += ((root + 1) * (root + 1) <= values).astype(np.int64)
    return root


def _lex_sort(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    order = np.lexsort(points.T[::-1])
    return points[order]


def _ball_line(radius_sq: int) -> np.ndarray:
    s = math.isqrt(radius_sq)
    return np.arange(-s, s + 1, dtype=np.int64)


def _ball_disc(radius_sq: int) -> np.ndarray:
    """All (a, b) with a^2 + b^2 <= radius_sq, as an (M, 2) array."""
    a = _ball_line(radius_sq)
    half = isqrt_array(radius_sq - a * a)
    counts = 2 * half + 1
    first = np.repeat(a, counts)
    starts = np.repeat(-half - np.cumsum(counts) + counts, counts)
    second = np.arange(counts.sum(), dtype=np.int64) + starts
    return np.stack([first, second], axis=1)


def iter_ball_blocks(k: int, radius_sq: int) -> Iterator[np.ndarray]:
    """Yield blocks of the k-dimensional integer ball |v|^2 <= radius_sq.

    Blocks are split on the first coordinate so memory stays bounded by one
    (k-1)-dimensional slice.
    """
    if radius_sq < 0:
        return
    if k == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    if k == 1:
        yield _ball_line(radius_sq)[:, None]
        return
    s = math.isqrt(radius_sq)
    for a in range(-s, s + 1):
        rest = radius_sq - a * a
        if k == 2:
            tail = _ball_line(rest)[:, None]
        elif k == 3:
            tail = _ball_disc(rest)
        else:
            tail = np.concatenate(list(iter_ball_blocks(k - 1, rest)))
        head = np.full((len(tail), 1), a, dtype=np.int64)
        yield np.hstack([head, tail])


def _sphere_from_prefixes(prefix: np.ndarray, lam: int) -> np.ndarray:
    rem = lam - np.einsum("ij,ij->i", prefix, prefix)
    last = isqrt_array(rem)
    hit = last * last == rem
    prefix, last = prefix[hit], last[hit]
    pos = np.hstack([prefix, last[:, None]])
    nonzero = last > 0
    neg = np.hstack([prefix[nonzero], -last[nonzero][:, None]])
    return np.concatenate([pos, neg])


@dataclass(frozen=True)
class Eigenspace:
    """The lattice points E_lam = {mu in Z^d : |mu|^2 = lam}, sorted lexicographically."""

    d: int
    lam: int
    points: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def size(self) -> int:
        return len(self.points)

    def _keys(self, pts: np.ndarray) -> np.ndarray:
        s = math.isqrt(self.lam)
        base = 2 * s + 1
        if base**self.d >= 2**63:
            raise OverflowGuardError(f"membership keys for E_{self.lam} in d={self.d} overflow int64")
        key = np.zeros(len(pts), dtype=np.int64)
        for j in range(self.d):
            key = key * base + (pts[:, j] + s)
        return key

    @property
    def keys(self) -> np.ndarray:
        k = self.__dict__.get("_key_cache")
        if k is None:
            k = self._keys(self.points)
            object.__setattr__(self, "_key_cache", k)
        return k

    def contains(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership test by binary search on the sorted keys."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.int64))
        s = math.isqrt(self.lam)
        inside = np.all(np.abs(pts) <= s, axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if not inside.any() or self.size == 0:
            return out
        k = self._keys(pts[inside])
        idx = np.searchsorted(self.keys, k)
        idx = np.minimum(idx, self.size - 1)
        out[inside] = self.keys[idx] == k
        return out

    def index_of(self, pts: np.ndarray) -> np.ndarray:
        """Row indices of ``pts`` in ``points``; -1 where absent."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.int64))
        res = np.full(len(pts), -1, dtype=np.int64)
        s = math.isqrt(self.lam)
        inside = np.all(np.abs(pts) <= s, axis=1)
        if not inside.any() or self.size == 0:
            return res
        k = self._keys(pts[inside])
        idx = np.minimum(np.searchsorted(self.keys, k), self.size - 1)
        found = self.keys[idx] == k
        sub = np.where(found, idx, -1)
        res[inside] = sub
        return res


# --------------------------------------------------------------------------
# disk cache


def default_cache_dir() -> Path | None:
    env = os.environ.get(CACHE_ENV)
    return Path(env) if env else None


def _cache_path(directory: Path, d: int, lam: int) -> Path:
    return Path(directory) / f"sphere_d{d}_{lam}.bin"


def write_cache_file(path: Path, d: int, lam: int, points: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = _CACHE_HEADER.pack(_CACHE_MAGIC, _CACHE_VERSION, d, lam, len(points))
    payload += np.ascontiguousarray(points, dtype="<i8").tobytes()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_cache_file(path: Path) -> tuple[int, int, np.ndarray]:
    data = Path(path).read_bytes()
    magic, version, d, lam, count = _CACHE_HEADER.unpack_from(data)
    if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
        raise ValueError(f"{path}: not a sphere cache file (magic={magic!r}, version={version})")
    body = np.frombuffer(data, dtype="<i8", offset=_CACHE_HEADER.size)
    if body.size != count * d:
        raise ValueError(f"{path}: truncated payload")
    return d, lam, body.reshape(count, d).astype(np.int64)


# --------------------------------------------------------------------------
# operations


def enumerate_sphere(d: int, lam: int, cache_dir: str | Path | None = None) -> Eigenspace:
    """All mu in Z^d with |mu|^2 = lam, sorted lexicographically.

    With ``cache_dir`` (or the ``TORUSEIG_CACHE_DIR`` environment variable) the
    result is read from / written to a binary cache keyed by (d, lam).
    """
    _check_dim(d)
    _check_norm(lam)
    directory = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    if directory is not None:
        path = _cache_path(directory, d, lam)
        if path.exists():
            cd, clam, pts = read_cache_file(path)
            if (cd, clam) == (d, lam):
                return Eigenspace(d, lam, pts)
    if math.isqrt(lam) > COORD_GUARD:
        raise OverflowGuardError(f"coordinates of E_{lam} exceed the 2^20 guard")
    if lam == 0:
        pts = np.zeros((1, d), dtype=np.int64)
    else:
        blocks = [_sphere_from_prefixes(p, lam) for p in iter_ball_blocks(d - 1, lam)]
        pts = _lex_sort(np.concatenate(blocks)) if blocks else np.zeros((0, d), np.int64)
    if directory is not None:
        write_cache_file(_cache_path(directory, d, lam), d, lam, pts)
    return Eigenspace(d, lam, pts)


@dataclass(frozen=True)
class PrimitiveDecomposition:
    m: int
    zhat: tuple[int, ...]


def primitive_part(zeta: Sequence[int]) -> PrimitiveDecomposition:
    """Write zeta = m * zhat with m >= 1 and zhat primitive (sign stays on zhat)."""
    z = tuple(int(c) for c in zeta)
    m = math.gcd(*z) if len(z) > 1 else abs(z[0])
    if m == 0:
        raise PreconditionError("primitive_part of the zero vector")
    return PrimitiveDecomposition(m, tuple(c // m for c in z))


def equal_norm_shift_count(d: int, X: int, zeta: Sequence[int]) -> int:
    """#{mu in Z^d : |mu|^2 <= X, |mu|^2 = |mu + zeta|^2}.

    Solves the hyperplane equation 2<mu, zeta> = -|zeta|^2 by running the
    coordinates other than the pivot over a ball and solving for the pivot.
    """
    _check_dim(d)
    z = np.asarray(zeta, dtype=np.int64)
    if z.shape != (d,) or not z.any():
        raise PreconditionError("zeta must be a nonzero vector of length d")
    zz = int(z @ z)
    if zz % 2 or zz > 4 * X:
        return 0
    h = -zz // 2
    pivot = int(np.argmax(np.abs(z)))
    others = [j for j in range(d) if j != pivot]
    zp = int(z[pivot])
    zo = z[others]
    total = 0
    for block in iter_ball_blocks(d - 1, X):
        num = h - block @ zo
        ok = num % zp == 0
        mp = num[ok] // zp
        norm = np.einsum("ij,ij->i", block[ok], block[ok]) + mp * mp
        total += int(np.count_nonzero(norm <= X))
    return total


def equal_norm_shift_count_exact(d: int, lam: int, zeta: Sequence[int],
                                 space: Eigenspace | None = None) -> int:
    """#{mu : |mu|^2 = lam = |mu + zeta|^2}, by membership lookup of mu + zeta."""
    z = np.asarray(zeta, dtype=np.int64)
    zz = int(z @ z)
    if zz > 4 * lam:
        return 0
    E = space if space is not None else enumerate_sphere(d, lam)
    if E.size == 0:
        return 0
    return int(np.count_nonzero(E.contains(E.points + z)))


def shift_count_table(E: Eigenspace, max_sq: int, min_sq: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Every zeta = nu - mu (mu, nu in E) with min_sq <= |zeta|^2 <= max_sq, with multiplicity.

    Returns ``(zetas, counts)`` where ``counts[i]`` equals
    ``equal_norm_shift_count_exact(E.d, E.lam, zetas[i])``.
    """
    P = E.points
    if len(P) == 0:
        return np.zeros((0, E.d), np.int64), np.zeros(0, np.int64)
    # coordinates of a difference lie in [-2 sqrt(lam), 2 sqrt(lam)]; encode each
    # zeta as one integer in base 2*half+1, which sorts lexicographically
    half = 2 * math.isqrt(E.lam) + 1
    base = 2 * half + 1
    weights = base ** np.arange(E.d - 1, -1, -1, dtype=np.int64)
    pkeys = P @ weights
    offset = int(half * weights.sum())
    chunks = []
    step = max(1, 4_000_000 // len(P))
    for i in range(0, len(P), step):
        # on the sphere |nu - mu|^2 = 2 lam - 2 <mu, nu>
        n2 = 2 * E.lam - 2 * int_gram(P[i:i + step], P)
        keys = pkeys[None, :] - pkeys[i:i + step, None]
        chunks.append(keys[(n2 >= min_sq) & (n2 <= max_sq)])
    keys, counts = np.unique(np.concatenate(chunks), return_counts=True)
    digits = keys + offset
    zetas = np.empty((len(keys), E.d), dtype=np.int64)
    for k in range(E.d - 1, -1, -1):
        zetas[:, k] = digits % base - half
        digits //= base
    return zetas, counts.astype(np.int64)


def int_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A @ B.T for integer arrays, through float64 BLAS.

    Exact while every partial sum stays below 2^53, which the coordinate guard
    (|entries| <= 2^20, d <= 4) ensures.
    """
    return np.rint(A.astype(np.float64) @ B.astype(np.float64).T).astype(np.int64)


def _pair_sq_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _radius_sq_bound(Y: float) -> float:
    # distances are integers under a sqrt; absorb float rounding of Y**2
    return Y * Y * (1 + 1e-12) + 1e-12


def cap_count(E: Eigenspace, nu: Sequence[int], Y: float) -> int:
    """n(nu, Y) = #{mu in E : 0 < |mu - nu| <= Y} (chordal distance)."""
    v = np.asarray(nu, dtype=np.int64)
    if int(v @ v) != E.lam or not E.contains(v[None, :])[0]:
        raise PreconditionError(f"{tuple(v)} is not on the sphere |mu|^2 = {E.lam}")
    d2 = np.einsum("ij,ij->i", E.points - v, E.points - v)
    return int(np.count_nonzero((d2 > 0) & (d2 <= _radius_sq_bound(Y))))


def neighbour_counts(E: Eigenspace, Y: float, include_self: bool = False) -> np.ndarray:
    """Per point of E, the number of points of E within chordal distance Y."""
    P = E.points
    bound = _radius_sq_bound(Y)
    out = np.empty(len(P), dtype=np.int64)
    step = max(1, 4_000_000 // max(len(P), 1))
    for i in range(0, len(P), step):
        d2 = _pair_sq_distances(P[i:i + step], P)
        out[i:i + step] = np.count_nonzero(d2 <= bound, axis=1)
    return out if include_self else out - 1


@dataclass(frozen=True)
class CapDenseSet:
    points: np.ndarray
    density: float


def cap_dense_set(E: Eigenspace, Y: float) -> CapDenseSet:
    """Points of E with at least one other point of E within distance Y."""
    if E.size == 0:
        return CapDenseSet(np.zeros((0, E.d), np.int64), 0.0)
    mask = neighbour_counts(E, Y) >= 1
    return CapDenseSet(E.points[mask], float(mask.sum()) / E.size)


def arc_max(lam: int, rho: float, space: Eigenspace | None = None) -> int:
    """M(sqrt(lam), rho): the largest number of points of E_lam (d = 2) within
    distance rho of a point of E_lam, the centre included."""
    E = space if space is not None else enumerate_sphere(2, lam)
    if E.d != 2:
        raise PreconditionError("arc_max is defined for d = 2 only")
    if E.size == 0:
        return 0
    return int(neighbour_counts(E, rho, include_self=True).max())


def weyl_count(d: int, Lam: int) -> int:
    """#{mu in Z^d : |mu|^2 <= Lam}."""
    _check_dim(d)
    if Lam < 0:
        return 0
    total = 0
    for block in iter_ball_blocks(d - 1, Lam):
        rem = Lam - np.einsum("ij,ij->i", block, block)
        total += int((2 * isqrt_array(rem) + 1).sum())
    return total


def circle_points_by_norm(max_norm: int) -> dict[int, np.ndarray]:
    """Group every point of Z^2 with 0 < |mu|^2 <= max_norm by its norm.

    Used by the d = 2 sweeps to avoid one enumeration per lambda.  Each group
    is sorted lexicographically, matching ``enumerate_sphere(2, n).points``.
    """
    pts = _ball_disc(max_norm)
    n2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    keep = n2 > 0
    pts, n2 = pts[keep], n2[keep]
    order = np.lexsort((pts[:, 1], pts[:, 0], n2))
    pts, n2 = pts[order], n2[order]
    bounds = np.flatnonzero(np.diff(n2)) + 1
    groups = np.split(pts, bounds)
    norms = n2[np.concatenate([[0], bounds])] if len(n2) else []
    return {int(n): g for n, g in zip(norms, groups)}
