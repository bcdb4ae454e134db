"""Command-line front end.

    python3 -m toruseig enumerate --d 2 --lambda 25
    python3 -m toruseig repcount --d 4 --n 1 --t 0
    python3 -m toruseig mass --family thm31 --m 10 --radius 0.3
    python3 -m toruseig pairs --d 3 --lambda 1009 --out pairs.json
    python3 -m toruseig scan density --d 2 --Lambda 1000 --theta2 0.3 --delta 0.05
    python3 -m toruseig blowup --lambdas 1001 1501 2001
    python3 -m toruseig render --family thm31 --m 10 --grid 512 --out thm31.ppm

Exit status: 0 on success, 1 on a usage error, 2 when a --check cross-check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import arithmetic, constructions, experiments, lattice, spectral
from .errors import PairBudgetExceeded, PreconditionError

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --------------------------------------------------------------------------
# output helpers


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _write_bytes(data: bytes, path: str) -> None:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(data)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def _check(ok: bool, message: str) -> None:
    if not ok:
        raise CheckFailed(message)
    print(f"check ok: {message}", file=sys.stderr)


def _cache_dir(args) -> str | None:
    return args.cache_dir or os.environ.get(lattice.CACHE_ENV)


# --------------------------------------------------------------------------
# eigenfunction selection shared by mass and render


def _family(args) -> spectral.Eigenfunction:
    fam = args.family
    if fam == "thm31":
        if args.m is None:
            raise UsageError("--family thm31 needs --m")
        return constructions.theorem31_family(args.m, args.d)
    if fam == "blowup":
        if args.lam is None:
            raise UsageError("--family blowup needs --lambda")
        return constructions.blowup_family(args.lam, args.d, _cache_dir(args))
    if fam == "pair":
        if args.input is None:
            raise UsageError("--family pair needs --input pairs.json")
        pl = constructions.PairList.from_json(Path(args.input).read_text())
        if not 0 <= args.index < pl.count:
            raise UsageError(f"--index {args.index} outside 0..{pl.count - 1}")
        return constructions.pair_eigenfunction(pl.pairs[args.index])
    if fam == "json":
        if args.input is None:
            raise UsageError("--family json needs --input psi.json")
        return spectral.Eigenfunction.load(args.input)
    if fam == "random":
        if args.lam is None:
            raise UsageError("--family random needs --lambda")
        E = lattice.enumerate_sphere(args.d, args.lam, _cache_dir(args))
        return spectral.random_onb(E, experiments.member_seed(args.seed, args.lam)).member(args.index)
    raise UsageError(f"unknown family {fam}")


def _add_family_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=["thm31", "blowup", "pair", "json", "random"], required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--input", help="pair list or eigenfunction JSON")
    p.add_argument("--index", type=int, default=0, help="pair or basis member index")


# --------------------------------------------------------------------------
# subcommands


def cmd_enumerate(args) -> int:
    E = lattice.enumerate_sphere(args.d, args.lam, _cache_dir(args))
    header = ",".join(f"x{k + 1}" for k in range(args.d))
    lines = [header] + [",".join(str(int(v)) for v in row) for row in E.points]
    _emit("\n".join(lines) + "\n", args.out)
    if args.check:
        brute = arithmetic.r_d_bruteforce(args.d, args.lam)
        _check(E.size == brute, f"|E_{args.lam}| = {E.size} matches the representation count {brute}")
        norms = np.einsum("ij,ij->i", E.points, E.points) if E.size else np.zeros(0)
        _check(bool(np.all(norms == args.lam)), "every point lies on the sphere")
    return EXIT_OK


def cmd_repcount(args) -> int:
    d, n = args.d, args.n
    out = {"d": d, "n": n, "R_d": arithmetic.r_d_bruteforce(d, n)}
    if d == 4 and n >= 1:
        out["R_4_jacobi"] = arithmetic.r4_jacobi(n)
    if args.t is not None:
        out["A_d_bruteforce"] = arithmetic.a_d_bruteforce(d, n, args.t)
        if d == 4 and n % 2 == 1 and abs(args.t) < n:
            out["A_4_pall_taussky"] = arithmetic.a4_pall_taussky(n, args.t)
    for key, val in out.items():
        print(f"{key}: {val}")
    if args.check:
        if "R_4_jacobi" in out:
            _check(out["R_4_jacobi"] == out["R_d"], "Jacobi formula agrees with enumeration")
        if "A_4_pall_taussky" in out:
            _check(out["A_4_pall_taussky"] == out["A_d_bruteforce"], "Pall-Taussky agrees with brute force")
        table = arithmetic.r_d_table(d, n)
        _check(int(table[n]) == out["R_d"], "convolution table agrees with enumeration")
    return EXIT_OK


def cmd_mass(args) -> int:
    psi = _family(args)
    center = args.center if args.center is not None else [0.0] * psi.d
    if len(center) != psi.d:
        raise UsageError(f"--center needs {psi.d} coordinates")
    ball = spectral.Ball(tuple(center), args.radius)
    try:
        value = spectral.mass_average(psi, ball)
        route = "pairs"
    except PairBudgetExceeded:
        if args.family != "blowup" or any(center):
            raise
        value = constructions.blowup_mass_average(psi.lam, psi.d, args.radius)
        route = "histogram"
    record = {"schema_version": experiments.SCHEMA_VERSION, "d": psi.d, "lambda": psi.lam,
              "support": psi.support_size, "center": list(map(float, center)),
              "radius": args.radius, "mass_average": value, "route": route}
    _emit(json.dumps(record, sort_keys=True) + "\n", args.out)
    if args.check:
        q = spectral.mass_average_quadrature(psi, ball, tol=1e-6)
        _check(abs(q - value) <= 1e-3, f"frequency-space value {value:.9g} vs quadrature {q:.9g}")
    return EXIT_OK


def cmd_pairs(args) -> int:
    E = lattice.enumerate_sphere(args.d, args.lam, _cache_dir(args))
    Y = args.Y if args.Y is not None else constructions.bourgain_radius(args.lam, args.d)
    pl = constructions.bourgain_pairs(E, Y)
    _emit(pl.to_json() + "\n", args.out)
    print(f"pairs: {pl.count}  density: {pl.density!r}", file=sys.stderr)
    if args.check:
        try:
            pl.validate()
        except AssertionError as exc:
            raise CheckFailed(str(exc)) from exc
        _check(True, "pairs are disjoint, on the sphere and within Y")
        dense = lattice.cap_dense_set(E, Y)
        _check(pl.count == 0 or dense.density > 0, "pairing draws from a non-empty cap-dense set")
    return EXIT_OK


def _write_report(rep: experiments.ScanReport, args) -> None:
    if args.out:
        _emit(rep.to_csv(), args.out)
    if args.summary:
        _emit(rep.to_json(), args.summary)
    if not args.out and not args.summary:
        sys.stdout.write(rep.to_json())


def cmd_scan(args) -> int:
    kind = args.kind
    if kind == "density":
        if args.Lambda is None:
            raise UsageError("scan density needs --Lambda")
        rep = experiments.density_one_scan(args.d, args.Lambda, args.theta2, args.delta,
                                           args.seed, args.threads)
        ok = rep.summary["aggregate_within_bound"]
    elif kind == "eigenspace":
        if args.lam is None:
            raise UsageError("scan eigenspace needs --lambda")
        rep = experiments.eigenspace_scan(args.d, args.lam, args.theta2, args.delta, args.seed)
        ok = rep.summary["within_bound"]
    else:
        lams = args.lambdas or []
        if not lams:
            raise UsageError("scan d2 needs --lambdas")
        rep = experiments.d2_bounded_scan(lams, args.b, args.seed, args.grid, args.threads)
        ok = True
    _write_report(rep, args)
    if args.check:
        _check(bool(ok), f"{kind} scan respects its exact counting bound")
        if kind == "density":
            flags = rep.column("exceptional")
            lam = rep.column("lambda")
            disc = rep.column("discrepancy")
            _check(all(f == (v >= l ** -args.delta) for f, v, l in zip(flags, disc, lam)),
                   "exceptional flags match discrepancy >= lambda^-delta")
    return EXIT_OK


def cmd_blowup(args) -> int:
    if args.sample:
        lo, hi, count = args.sample
        lams = experiments.odd_geometric_sample(int(lo), int(hi), int(count))
    else:
        lams = args.lambdas or []
    if not lams:
        raise UsageError("blowup needs --lambdas or --sample")
    rep = experiments.blowup_growth_scan(lams, tuple(args.exponents), args.exact_max, args.threads)
    _write_report(rep, args)
    if args.check:
        ratios = [row[6] for row in rep.rows if row[6] is not None]
        _check(all(r > 0 for r in ratios), "exact masses are positive multiples of the lower bound")
        for lam in rep.params["lambdas"]:
            if arithmetic.r4_jacobi(lam) <= arithmetic.BRUTE_FORCE_MAX_POINTS:
                T = lam ** (1 / 6)
                a = arithmetic.s_d(4, lam, T, route="pall_taussky")
                b = arithmetic.s_d(4, lam, T, route="bruteforce")
                _check(a == b, f"S_4({lam}, lam^(1/6)) agrees across routes ({a})")
    return EXIT_OK


# --------------------------------------------------------------------------
# rendering


_CMAP = np.array([  # anchors of a perceptually ordered dark-to-bright ramp
    [68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37],
], dtype=np.float64)


def colormap(t: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to RGB bytes by piecewise-linear interpolation."""
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    pos = t * (len(_CMAP) - 1)
    lo = np.minimum(pos.astype(int), len(_CMAP) - 2)
    frac = (pos - lo)[..., None]
    rgb = _CMAP[lo] * (1 - frac) + _CMAP[lo + 1] * frac
    return np.round(rgb).astype(np.uint8)


def intensity_grid(psi: spectral.Eigenfunction, n: int) -> np.ndarray:
    """|psi|^2 on an n x n grid over [0, 2 pi)^2, other coordinates 0; [i, j] = (x1_j, x2_i)."""
    ticks = 2 * math.pi * np.arange(n) / n
    # separable evaluation: e^{i(mu1 x1 + mu2 x2)} = e^{i mu1 x1} e^{i mu2 x2}
    A = np.exp(1j * np.outer(ticks, psi.points[:, 0]))  # (n, N) along x1
    B = np.exp(1j * np.outer(ticks, psi.points[:, 1]))  # (n, N) along x2
    vals = (B * psi.coeffs) @ A.T  # [i, j] -> x2_i, x1_j
    return np.abs(vals) ** 2


def ppm_bytes(grid: np.ndarray, vmax: float) -> bytes:
    h, w = grid.shape
    rgb = colormap(grid[::-1] / vmax if vmax > 0 else np.zeros_like(grid))
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def colorbar_svg(vmax: float, label: str = "|psi|^2") -> str:
    stops = "".join(
        f'<stop offset="{k / (len(_CMAP) - 1):.3f}" stop-color="rgb({int(c[0])},{int(c[1])},{int(c[2])})"/>'
        for k, c in enumerate(_CMAP))
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="120" height="320">'
        f'<defs><linearGradient id="g" x1="0" y1="1" x2="0" y2="0">{stops}</linearGradient></defs>'
        '<rect x="10" y="10" width="30" height="300" fill="url(#g)" stroke="black"/>'
        f'<text x="46" y="18" font-size="12">{vmax:.4g}</text>'
        '<text x="46" y="310" font-size="12">0</text>'
        f'<text x="46" y="164" font-size="12">{label}</text>'
        "</svg>\n")


def cmd_render(args) -> int:
    psi = _family(args)
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    grid = intensity_grid(psi, args.grid)
    vmax = float(grid.max())
    out = args.out or "intensity.ppm"
    _write_bytes(ppm_bytes(grid, vmax), out)
    svg = args.svg or str(Path(out).with_suffix(".svg"))
    _emit(colorbar_svg(vmax), svg)
    print(f"max intensity: {vmax!r}", file=sys.stderr)
    if args.check:
        direct = psi.intensity(np.zeros((1, psi.d)))[0]
        _check(abs(grid[0, 0] - direct) <= 1e-9 * max(1.0, direct),
               f"grid value at the origin {grid[0, 0]:.12g} equals direct evaluation {direct:.12g}")
        bound = float(np.sum(np.abs(psi.coeffs))) ** 2
        _check(vmax <= bound + 1e-9, f"max intensity {vmax:.6g} within (sum |c|)^2 = {bound:.6g}")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--cache-dir", default=None, help=f"sphere cache (default ${lattice.CACHE_ENV})")
    common.add_argument("--check", action="store_true", help="run the oracle cross-check")

    parser = _Parser(prog="toruseig", description="Lattice-point and eigenfunction experiments on flat tori.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", parents=[common], help="list E_lambda as CSV")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("repcount", parents=[common], help="R_d(n) and A_d(n, t)")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=int)
    p.set_defaults(func=cmd_repcount)

    p = sub.add_parser("mass", parents=[common], help="ball average of |psi|^2")
    _add_family_flags(p)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--center", type=float, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mass)

    p = sub.add_parser("pairs", parents=[common], help="greedy close-pair basis")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=int, required=True)
    p.add_argument("--Y", type=float, help="pairing radius (default lambda^(1/(2(d-1))) log lambda)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("scan", parents=[common], help="exceptional-set and boundedness scans")
    p.add_argument("kind", choices=["density", "eigenspace", "d2"])
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--Lambda", type=int)
    p.add_argument("--lambda", dest="lam", type=int)
    p.add_argument("--lambdas", type=int, nargs="+")
    p.add_argument("--theta2", type=float, default=0.3)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--b", type=float, default=0.15)
    p.add_argument("--grid", type=int, default=32)
    p.add_argument("--out", help="CSV rows")
    p.add_argument("--summary", help="JSON summary")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("blowup", parents=[common], help="blowup growth table in d = 4")
    p.add_argument("--lambdas", type=int, nargs="+")
    p.add_argument("--sample", type=float, nargs=3, metavar=("LO", "HI", "COUNT"))
    p.add_argument("--exponents", type=float, nargs="+", default=list(experiments.BLOWUP_EXPONENTS))
    p.add_argument("--exact-max", type=int, default=2001)
    p.add_argument("--out")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_blowup)

    p = sub.add_parser("render", parents=[common], help="|psi|^2 heat map as PPM + SVG colour bar")
    _add_family_flags(p)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (UsageError, PreconditionError, PairBudgetExceeded, OverflowError, OSError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
