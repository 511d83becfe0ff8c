"""Command-line entry point: ``sfion {basis,sweep,vibav,analyze,predict,spectrum}``.

Exit codes: 0 success, 1 failed sweep points or bad input, 2 incomplete
input data (missing R rows, degenerate fit), 3 sweep stopped before
completion.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import warnings
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import cache as cachemod
from . import vibronic as vib
from .config import SweepConfig, load_config
from .laser import PARALLEL, PERPENDICULAR, make_pulse, omega_from_wavelength
from .model_atom import h2_vertical_ip, read_two_column
from .propagator import ionization_yield, photoelectron_spectrum, propagate
from .sweep import BasisProvider, build_bases, read_csv, run_sweep

log = logging.getLogger("sfion")


def _fmt(x) -> str:
    return repr(float(x))


def _config(args) -> SweepConfig:
    return load_config(args.config) if args.config else SweepConfig()


def _cache_dir(args) -> Path:
    return cachemod.cache_root(Path(args.out) / "cache")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


# --- basis / sweep ------------------------------------------------------------------------------------------


def cmd_basis(args) -> int:
    cfg = _config(args)
    solves = build_bases(cfg, _cache_dir(args))
    print(f"eigen-solves performed: {solves}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    res = run_sweep(cfg, args.out, _cache_dir(args), resume=args.resume, workers=args.workers,
                    stop_after=args.stop_after)
    print(f"computed {res.computed}, reused {res.skipped}, failed {res.failed}, "
          f"{'complete' if res.complete else 'incomplete'}")
    if not res.complete:
        return 3
    return 1 if res.failed else 0


# --- vibrational averaging ----------------------------------------------------------------------------------


def cmd_vibav(args) -> int:
    rows = read_csv(args.yields)
    pot = vib.load_potential(args.potential)
    state = vib.isotope_state(args.isotope, pot)
    all_r = sorted({r.r for r in rows})
    groups = defaultdict(dict)
    for r in rows:
        groups[(r.orientation, r.intensity, r.n_cycles)][r.r] = r.yield_ion
    code = 0
    out_rows = []
    out = Path(args.out)
    for key in sorted(groups, key=lambda k: (k[0] != "parallel", k[1], k[2])):
        samples = {r: y for r, y in groups[key].items() if math.isfinite(y)}
        missing = [r for r in all_r if r not in samples]
        if missing:
            print(f"warning: {key} lacks R = {', '.join(map(_fmt, missing))}", file=sys.stderr)
            code = 2
        if len(samples) < 4:
            print(f"warning: {key} has fewer than 4 R samples, skipped", file=sys.stderr)
            code = 2
            continue
        r = np.array(sorted(samples))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            curve = vib.weight_yield(r, [samples[x] for x in r], state, key[0], key[1])
        for w in caught:
            print(f"warning: {key}: {w.message}", file=sys.stderr)
        value = vib.integrate_yield(curve)
        out_rows.append([key[0], _fmt(key[1]), str(key[2]), _fmt(value)])
        if args.curves:
            name = f"weighted_{args.isotope}_{key[0]}_{key[1]:.6e}_{key[2]}.csv"
            _write_csv(out / "curves" / name, ("R_bohr", "weighted_yield"),
                       [[_fmt(a), _fmt(b)] for a, b in zip(curve.grid, curve.values)])
    _write_csv(out / f"vibav_{args.isotope}.csv", ("orientation", "intensity_Wcm2", "n_cycles", "integrated_yield"),
               out_rows)
    print(f"wrote {len(out_rows)} integrated yields")
    return code


# --- analysis -----------------------------------------------------------------------------------------------


def _read_yield_table(path, orientation=None):
    """Rows ``(R, orientation, I, N, Y)`` from a sweep CSV (R column) or a vibav CSV (R = NaN)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.DictReader(fh)
        out = []
        for row in rd:
            y = float(row.get("yield", row.get("integrated_yield", "nan")))
            r = float(row["R_bohr"]) if "R_bohr" in row else math.nan
            out.append((r, orientation or row["orientation"], float(row["intensity_Wcm2"]), int(row["n_cycles"]), y))
    return out


def cmd_analyze(args) -> int:
    records = []
    for p in args.inputs:
        records += _read_yield_table(p)
    if args.parallel:
        records += _read_yield_table(args.parallel, "parallel")
    if args.perpendicular:
        records += _read_yield_table(args.perpendicular, "perpendicular")
    if not records:
        print("no input records", file=sys.stderr)
        return 1
    omega = omega_from_wavelength(args.wavelength)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    groups = defaultdict(list)
    for r, o, i, n, y in records:
        groups[(r, o, n)].append((i, y))
    code = 0
    report = [f"# power-law fit Y = Omega T (I/I0)^k_s, T = intensity FWHM in a.u., wavelength {args.wavelength} nm"]
    scaled = []
    for key in sorted(groups, key=lambda k: (np.nan_to_num(k[0], nan=-1.0), k[1], k[2])):
        r, o, n = key
        pts = sorted(groups[key])
        i = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        t_au = make_pulse(args.wavelength, 0.0, n).fwhm if omega > 0 else math.nan
        label = f"R={_fmt(r)} orientation={o} n_cycles={n}"
        try:
            fit = an.fit_power_law(i, t_au, y)
        except an.AnalysisError as exc:
            report.append(f"{label}: fit error: {exc}")
            code = 2
            continue
        report.append(f"{label}: Omega = {fit.omega!r} k_s = {fit.k_s!r} residual_norm = {fit.residual_norm!r}")
        for ii, yy, ss in zip(i, y, an.scaled_yields(i, t_au, y, fit)):
            scaled.append([_fmt(r), o, _fmt(ii), str(n), _fmt(yy), _fmt(ss)])
    (out / "fit_report.txt").write_text("\n".join(report) + "\n", encoding="utf-8")
    _write_csv(out / "scaled.csv", ("R_bohr", "orientation", "intensity_Wcm2", "n_cycles", "yield", "scaled_yield"),
               scaled)
    ratios = []
    for (r, o, n), pts in sorted(groups.items(), key=lambda kv: (np.nan_to_num(kv[0][0], nan=-1.0), kv[0][2])):
        if o != "parallel" or (r, "perpendicular", n) not in groups:
            continue
        par = dict(pts)
        perp = dict(groups[(r, "perpendicular", n)])
        common = sorted(set(par) & set(perp))
        ratio, bad = an.orientation_ratio([par[i] for i in common], [perp[i] for i in common])
        for i, q, b in zip(common, ratio, bad):
            ratios.append([_fmt(r), _fmt(i), str(n), _fmt(q), "zero_denominator" if b else ""])
    _write_csv(out / "ratio.csv", ("R_bohr", "intensity_Wcm2", "n_cycles", "ratio", "flag"), ratios)
    print("\n".join(report))
    return code


# --- prediction ---------------------------------------------------------------------------------------------


def _shift(text: str) -> an.ShiftModel:
    if text == "ponderomotive":
        return an.PONDEROMOTIVE
    if text.startswith("affine:"):
        a, b = text.split(":", 1)[1].split(",")
        return an.affine_shift(float(a), float(b))
    raise argparse.ArgumentTypeError(f"bad shift model {text!r}; use ponderomotive or affine:a,b")


def cmd_predict(args) -> int:
    out = Path(args.out)
    omega = omega_from_wavelength(args.wavelength)
    ip = read_two_column(args.ip_table) if args.ip_table else h2_vertical_ip()
    n_lo = args.n_min if args.n_min else an.minimal_photons(float(ip[:, 1].min()), omega)
    thresholds = an.channel_thresholds(ip, omega, range(n_lo, n_lo + args.n_count))
    rows = [["threshold", str(n), _fmt(r), _fmt(i)] for n, tab in thresholds.items() for r, i in tab]
    for spec in args.excitation or []:
        label, path = spec.split("=", 1)
        pred = an.rempi_locus(read_two_column(path), args.photons, args.shift, omega=omega, label=label)
        rows += [[label, str(args.photons), _fmt(r), _fmt(i)] for r, i in pred.locus]
    _write_csv(out / "predict_R.csv", ("state", "n_photons", "R_bohr", "intensity_Wcm2"), rows)
    if args.calibrate:
        lam, ical = (float(x) for x in args.calibrate.split("@"))
        de = an.calibrate_excitation(lam, args.photons, ical, args.shift)
        intens = [float(x) for x in args.intensities.split(",")] if args.intensities else [ical]
        pred = an.rempi_locus(de, args.photons, args.shift, intensities=intens, label="calibrated")
        _write_csv(out / "predict_wavelength.csv", ("state", "n_photons", "wavelength_nm", "intensity_Wcm2"),
                   [["calibrated", str(args.photons), _fmt(w), _fmt(i)] for w, i in pred.locus])
        for w, i in pred.locus:
            print(f"{args.photons}-photon resonance at {i:.3e} W/cm^2: {w:.3f} nm")
    print(f"wrote {len(rows)} R-resolved prediction rows")
    return 0


# --- spectrum -----------------------------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    r = args.r if args.r is not None else cfg.r_grid[0]
    intensity = args.intensity if args.intensity is not None else cfg.intensities[0]
    n = args.n_cycles if args.n_cycles is not None else cfg.n_cycles[0]
    orientation = args.orientation or cfg.orientations[0]
    prov = BasisProvider(cfg, _cache_dir(args))
    ffb = prov.field_free(r, orientation)
    pulse = make_pulse(cfg.wavelength, intensity, n, PARALLEL if orientation == "parallel" else PERPENDICULAR)
    final = propagate(ffb, pulse, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
    rec = ionization_yield(final, ffb, r, orientation, intensity, n)
    bin_width = args.bin if args.bin else pulse.omega / 10.0
    edges, dens = photoelectron_spectrum(final, ffb, bin_width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    name = f"spectrum_R{r:.4f}_{orientation}_I{intensity:.4e}_N{n}.csv"
    _write_csv(Path(args.out) / name, ("energy_hartree", "density"), [[_fmt(e), _fmt(d)] for e, d in zip(centers, dens)])
    print(f"yield {rec.yield_ion:.6e}, norm defect {rec.norm_defect:.2e}, wrote {name}")
    return 0


# --- parser -------------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfion", description="Strong-field single ionization toolkit")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("basis", help="build and cache field-free eigenbases")
    common(sp)
    sp.set_defaults(func=cmd_basis)

    sp = sub.add_parser("sweep", help="propagate every (R, orientation, I, N) point")
    common(sp)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--resume", action="store_true", help="skip points recorded in the manifest")
    sp.add_argument("--stop-after", type=int, default=None, help="stop after this many new points")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("vibav", help="average yields over the vibrational ground state")
    common(sp, config=False)
    sp.add_argument("yields")
    sp.add_argument("--potential", help="'R_bohr, V_hartree' file (default: shipped H2 curve)")
    sp.add_argument("--isotope", choices=sorted(vib.REDUCED_MASS), default="H2")
    sp.add_argument("--curves", action="store_true", help="also write the weighted curves")
    sp.set_defaults(func=cmd_vibav)

    sp = sub.add_parser("analyze", help="power-law fits, scaled yields and orientation ratios")
    common(sp, config=False)
    sp.add_argument("inputs", nargs="*")
    sp.add_argument("--parallel", help="file whose yields are taken as parallel")
    sp.add_argument("--perpendicular", help="file whose yields are taken as perpendicular")
    sp.add_argument("--wavelength", type=float, default=400.0)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("predict", help="N-photon thresholds and REMPI loci")
    common(sp, config=False)
    sp.add_argument("--wavelength", type=float, default=400.0)
    sp.add_argument("--ip-table")
    sp.add_argument("--n-min", type=int, default=0)
    sp.add_argument("--n-count", type=int, default=3)
    sp.add_argument("--excitation", action="append", metavar="LABEL=PATH", help="'R_bohr, dE_hartree' table")
    sp.add_argument("--photons", type=int, default=5)
    sp.add_argument("--shift", type=_shift, default=an.PONDEROMOTIVE, help="ponderomotive or affine:a,b")
    sp.add_argument("--calibrate", metavar="NM@WCM2", help="resonance observed at this wavelength and intensity")
    sp.add_argument("--intensities", help="comma-separated intensities for the wavelength locus")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("spectrum", help="photoelectron spectrum of one run")
    common(sp)
    sp.add_argument("--r", type=float)
    sp.add_argument("--intensity", type=float)
    sp.add_argument("--n-cycles", type=int)
    sp.add_argument("--orientation", choices=("parallel", "perpendicular"))
    sp.add_argument("--bin", type=float, help="bin width in hartree (default omega/10)")
    sp.set_defaults(func=cmd_spectrum)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return int(args.func(args))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
