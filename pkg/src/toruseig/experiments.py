"""Statistical scans over eigenvalues: exceptional densities, per-eigenspace
discrepancies, blowup growth in d = 4 and cap counts in d = 2.

Every scan returns a ``ScanReport``: a table of rows plus a summary.  Rows are
always ordered by lambda (then basis index) whatever the thread count, and
floats are written with ``repr`` so equal inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import arithmetic, constructions, lattice, spectral
from .errors import PreconditionError

SCHEMA_VERSION = 1
# d = 2 sweeps enumerate every circle up to this norm at most
MAX_SCAN_NORM = {2: 100_000, 3: 5_000, 4: 2_001}


@dataclass
class ScanReport:
    kind: str
    d: int
    params: dict
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, name: str) -> list:
        k = self.columns.index(name)
        return [row[k] for row in self.rows]

    @property
    def exceptional_density(self) -> float:
        flags = self.column("exceptional")
        return sum(flags) / len(flags) if flags else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "d": self.d,
            "params": self.params,
            "columns": list(self.columns),
            "row_count": len(self.rows),
            "summary": self.summary,
        }, sort_keys=True, indent=2, default=_json_default) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    raise TypeError(type(v))


def _ordered_map(fn: Callable, items: Sequence, threads: int) -> list:
    """map preserving input order, optionally across a thread pool."""
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_dim(d: int) -> None:
    if d not in (2, 3, 4):
        raise PreconditionError(f"dimension must be 2, 3 or 4, got {d}")


def member_seed(seed: int, lam: int) -> int:
    """The per-eigenspace seed: seed XOR lambda."""
    return int(seed) ^ int(lam)


def _basis_discrepancies(basis: spectral.OrthonormalBasis, T: float) -> tuple[np.ndarray, float]:
    """Per member, sum over 1 <= |zeta| <= T of |<e_zeta psi_n, psi_n>|; and the total."""
    L = arithmetic.max_shift_sq(T)
    if L < 1:
        return np.zeros(basis.size), 0.0
    _, _, per = basis.matrix_element_sums(L)
    return per, float(per.sum())


def _pair_count_bound(d: int, lam: int, T: float) -> int:
    """S_d(lam, T): the number of ordered pairs on E_lam at distance <= T."""
    return arithmetic.s_d(d, lam, min(T, math.sqrt(2 * lam)))


# --------------------------------------------------------------------------
# density-one scan over all eigenvalues up to Lambda


def density_one_scan(d: int, Lam: int, theta2: float, delta: float, seed: int = 0,
                     threads: int = 1, basis: str = "random") -> ScanReport:
    """Flag eigenfunctions of random bases with discrepancy_bound >= lam^{-delta}.

    Also reports the Chebyshev aggregate (1/W) sum_lam sum_n D(psi_n, lam^theta2)
    and the lattice-count bound (1/W) sum_lam S_d(lam, lam^theta2), W the
    Weyl count; the first never exceeds the second.
    """
    _check_dim(d)
    if not theta2 < 1 / (2 * (d - 1)) - delta:
        raise PreconditionError(f"need theta2 < 1/(2(d-1)) - delta, got theta2 = {theta2}, delta = {delta}")
    if theta2 <= 0 or delta <= 0:
        raise PreconditionError("theta2 and delta must be positive")
    if Lam < 1 or Lam > MAX_SCAN_NORM[d]:
        raise PreconditionError(f"Lambda = {Lam} outside the enumeration budget {MAX_SCAN_NORM[d]}")
    if basis not in ("random", "exponential"):
        raise PreconditionError(f"unknown basis kind {basis!r}")
    if d == 2:
        groups = lattice.circle_points_by_norm(Lam)
        lams = sorted(groups)
        space = lambda lam: lattice.Eigenspace(2, lam, groups[lam])  # noqa: E731
    else:
        lams = [n for n in range(1, Lam + 1) if arithmetic.r_d_table(d, Lam)[n] > 0] if Lam else []
        space = lambda lam: lattice.enumerate_sphere(d, lam)  # noqa: E731

    def work(lam: int):
        E = space(lam)
        B = (spectral.random_onb(E, member_seed(seed, lam)) if basis == "random"
             else spectral.exponential_basis(E))
        T = lam ** theta2
        per, total = _basis_discrepancies(B, T)
        bound = _pair_count_bound(d, lam, T)
        thresh = lam ** (-delta)
        rows = [(lam, n, float(per[n]), bool(per[n] >= thresh)) for n in range(B.size)]
        return rows, total, bound

    results = _ordered_map(work, lams, threads)
    W = lattice.weyl_count(d, Lam) - 1  # nonzero frequencies only
    rows = [row for res in results for row in res[0]]
    aggregate = sum(res[1] for res in results) / W
    bound_sum = sum(res[2] for res in results)
    rep = ScanReport("density_one", d, {"Lambda": Lam, "theta2": theta2, "delta": delta,
                                        "seed": seed, "basis": basis},
                     ("lambda", "member", "discrepancy", "exceptional"), rows)
    rep.summary = {
        "eigenfunctions": len(rows),
        "exceptional": sum(r[3] for r in rows),
        "exceptional_density": rep.exceptional_density,
        "chebyshev_aggregate": aggregate,
        "lattice_count_bound": bound_sum / W,
        "lattice_count_total": bound_sum,
        "aggregate_within_bound": bool(aggregate * W <= bound_sum + 1e-9 * max(1, bound_sum)),
    }
    return rep


# --------------------------------------------------------------------------
# one eigenspace


def _check_eigenspace(d: int, lam: int) -> None:
    if d == 3:
        if lam < 1 or lam % 8 in (0, 4, 7):
            raise PreconditionError(f"d = 3 needs lambda != 0, 4, 7 mod 8, got {lam}")
    elif d == 4:
        if lam < 1 or lam % 2 == 0:
            raise PreconditionError(f"d = 4 needs odd lambda, got {lam}")
    else:
        raise PreconditionError(f"eigenspace scans run in d = 3 or 4, got {d}")


def eigenspace_scan(d: int, lam: int, theta2: float, delta: float, seed: int = 0) -> ScanReport:
    """Random basis of E_lam; flags discrepancy_bound(., lam^theta2) >= lam^{-delta}.

    Records V = sum over 1 <= |zeta| <= lam^theta2 of v1_localized and its
    arithmetic bound sum_{lam - lam^{2 theta2}/2 <= t < lam} A_d(lam, t).
    """
    _check_eigenspace(d, lam)
    if theta2 <= 0 or delta <= 0:
        raise PreconditionError("theta2 and delta must be positive")
    E = lattice.enumerate_sphere(d, lam)
    B = spectral.random_onb(E, member_seed(seed, lam))
    T = min(lam ** theta2, math.sqrt(2 * lam))
    per, total = _basis_discrepancies(B, T)
    bound = arithmetic.s_d(d, lam, T)
    thresh = lam ** (-delta)
    rows = [(lam, n, float(per[n]), bool(per[n] >= thresh)) for n in range(B.size)]
    rep = ScanReport("eigenspace", d, {"lambda": lam, "theta2": theta2, "delta": delta, "seed": seed},
                     ("lambda", "member", "discrepancy", "exceptional"), rows)
    rep.summary = {
        "N": E.size,
        "exceptional": sum(r[3] for r in rows),
        "exceptional_density": rep.exceptional_density,
        "v1_total": total,
        "arithmetic_bound": bound,
        "within_bound": bool(total <= bound + 1e-9 * max(1, bound)),
        "predicted_exponent": theta2 * (d - 1) - 0.5 + 3 * delta,
    }
    return rep


# --------------------------------------------------------------------------
# blowup in d = 4


BLOWUP_EXPONENTS = (1 / 8, 1 / 6, 1 / 5)
# a = 0 is the sanity row: a macroscopic radius that does not shrink with lambda
FIXED_RADIUS = 1.0


def blowup_radius(lam: int, a: float) -> float:
    """r = lam^{-a} / log lam for a > 0; FIXED_RADIUS for a = 0."""
    if a == 0:
        return FIXED_RADIUS
    return lam ** (-a) / math.log(lam)


def blowup_growth_scan(lams: Iterable[int], exponents: Sequence[float] = BLOWUP_EXPONENTS,
                       exact_max: int = 2001, threads: int = 1) -> ScanReport:
    """Lower bound (1 + S_4)/N and, for lam <= exact_max, the exact ball mass of
    the equal-amplitude eigenfunction, at r = lam^{-a}/log lam."""
    lams = sorted(set(int(x) for x in lams))
    for lam in lams:
        if lam < 3 or lam % 2 == 0:
            raise PreconditionError(f"blowup scans need odd lambda >= 3, got {lam}")

    def work(lam: int):
        out = []
        for a in exponents:
            r = blowup_radius(lam, a)
            if r >= math.pi:
                raise PreconditionError(f"radius {r} too large at lambda = {lam}, a = {a}")
            lb = constructions.blowup_lower_bound(lam, r)
            mass = constructions.blowup_mass_average(lam, 4, r) if lam <= exact_max else None
            out.append((lam, float(a), r, constructions.blowup_radius_cut(lam, r), lb, mass,
                        None if mass is None else mass / lb))
        return out

    rows = [row for res in _ordered_map(work, lams, threads) for row in res]
    rep = ScanReport("blowup_growth", 4, {"lambdas": lams, "exponents": list(exponents),
                                          "exact_max": exact_max},
                     ("lambda", "a", "r", "T", "lower_bound", "mass", "mass_over_bound"), rows)
    summary = {}
    for a in exponents:
        col = [row[4] for row in rows if row[1] == float(a)]
        summary[f"monotone_a={a:.6f}"] = bool(all(x <= y for x, y in zip(col, col[1:])))
    ratios = [row[6] for row in rows if row[6] is not None]
    summary["min_mass_over_bound"] = min(ratios) if ratios else None
    rep.summary = summary
    return rep


def s4_growth_ratios(lams: Iterable[int], exponent: float = 1 / 6) -> list[tuple[int, int, int, float]]:
    """(lam, S_4(lam, lam^exponent), R_4(lam), ratio) along odd lam."""
    out = []
    for lam in lams:
        s = arithmetic.s_d(4, lam, lam ** exponent, route="pall_taussky")
        n = arithmetic.r4_jacobi(lam)
        out.append((lam, s, n, s / n))
    return out


def odd_geometric_sample(lo: int, hi: int, count: int) -> list[int]:
    """``count`` odd integers spaced geometrically from lo to hi."""
    vals = np.geomspace(lo, hi, count)
    out = []
    for v in vals:
        n = int(round(v))
        n += 1 - n % 2
        out.append(n)
    return sorted(set(out))


# --------------------------------------------------------------------------
# d = 2 boundedness


def grid_sup_mass(psi: spectral.Eigenfunction, r: float, grid: int = 32) -> float:
    """max over a grid x grid lattice of centres in [0, 2 pi)^2 of the ball average."""
    if psi.d != 2:
        raise PreconditionError("grid scans are two-dimensional")
    ticks = 2 * math.pi * np.arange(grid) / grid
    table = spectral._kernel_table(2, r, 4 * psi.lam)
    P, c = psi.points, psi.coeffs
    diff = P[:, None, :] - P[None, :, :]
    w = (c[:, None] * np.conj(c)[None, :]) * table[np.einsum("ijk,ijk->ij", diff, diff)]
    Y = np.stack(np.meshgrid(ticks, ticks, indexing="ij"), axis=-1).reshape(-1, 2)
    phase = np.exp(1j * (Y @ P.T))  # (centres, N)
    vals = np.einsum("ki,ij,kj->k", phase, w, np.conj(phase)).real
    return float(vals.max())


def d2_bounded_scan(lams: Iterable[int], b: float, seed: int = 0, grid: int = 32,
                    threads: int = 1) -> ScanReport:
    """arc_max(lam, 2/r) and the grid sup of the ball mass of a random unit
    vector of E_lam at r = lam^{-b}."""
    if not 0 < b < 0.25:
        raise PreconditionError(f"radius exponent b must lie in (0, 1/4), got {b}")
    lams = sorted(set(int(x) for x in lams))

    def work(lam: int):
        E = lattice.enumerate_sphere(2, lam)
        if E.size == 0:
            return None
        r = lam ** (-b)
        arc = lattice.arc_max(lam, 2 / r, E)
        psi = spectral.random_onb(E, member_seed(seed, lam)).member(0)
        sup = grid_sup_mass(psi, r, grid)
        return (lam, E.size, r, arc, sup, sup / arc)

    rows = [row for row in _ordered_map(work, lams, threads) if row is not None]
    rep = ScanReport("d2_bounded", 2, {"lambdas": lams, "b": b, "seed": seed, "grid": grid},
                     ("lambda", "N", "r", "arc_max", "grid_sup", "ratio"), rows)
    rep.summary = {
        "max_arc": max((row[3] for row in rows), default=0),
        "max_ratio": max((row[5] for row in rows), default=0.0),
    }
    return rep


def arc_max_sweep(lam_max: int, b: float) -> tuple[int, int]:
    """max over lam <= lam_max (E_lam nonempty) of arc_max(lam, 2 lam^b), and the argmax."""
    if lam_max > MAX_SCAN_NORM[2]:
        raise PreconditionError(f"lam_max = {lam_max} beyond the d = 2 budget")
    groups = lattice.circle_points_by_norm(lam_max)
    best, arg = 0, 0
    for lam in sorted(groups):
        E = lattice.Eigenspace(2, lam, groups[lam])
        m = lattice.arc_max(lam, 2 * lam ** b, E)
        if m > best:
            best, arg = m, lam
    return best, arg


def exceptional_slope(values: Sequence[float], scales: Sequence[float]) -> float:
    """Least-squares slope of values against log(scales)."""
    x = np.log(np.asarray(scales, dtype=np.float64))
    y = np.asarray(values, dtype=np.float64)
    return float(np.polyfit(x, y, 1)[0])
