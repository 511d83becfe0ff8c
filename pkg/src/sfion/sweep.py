"""Parameter sweeps over (R, orientation, I, N) with cached bases and a resumable manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import cache as cachemod
from . import model_atom as ma
from . import two_center as tc
from .bspline import BSplineBasis
from .config import ORIENTATIONS, SweepConfig
from .laser import PARALLEL, PERPENDICULAR, make_pulse
from .propagator import FieldFreeBasis, atom_basis_from_waves, ionization_yield, molecular_field_free_basis, propagate

log = logging.getLogger(__name__)

CSV_HEADER = ("R_bohr", "orientation", "intensity_Wcm2", "n_cycles", "yield", "norm_defect")
MANIFEST = "manifest.json"


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Row:
    r: float
    orientation: str
    intensity: float
    n_cycles: int
    yield_ion: float
    norm_defect: float
    failure: str | None = None

    @property
    def key(self) -> str:
        return point_key((self.r, self.orientation, self.intensity, self.n_cycles))

    @property
    def failed(self) -> bool:
        return self.failure is not None

    def cells(self) -> list[str]:
        return [_fmt(self.r), self.orientation, _fmt(self.intensity), str(self.n_cycles),
                _fmt(self.yield_ion), _fmt(self.norm_defect)]


def point_key(p) -> str:
    r, o, i, n = p
    return f"{_fmt(r)}|{o}|{_fmt(i)}|{int(n)}"


def format_csv(rows) -> str:
    """Rows sorted by (R, orientation, I, N); floats in shortest round-trip form."""
    rows = sorted(rows, key=lambda w: (w.r, ORIENTATIONS.index(w.orientation), w.intensity, w.n_cycles))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    for row in rows:
        wr.writerow(row.cells())
    return buf.getvalue()


def read_csv(path) -> list[Row]:
    with open(path, newline="", encoding="utf-8") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [Row(float(r), o, float(i), int(n), float(y), float(d)) for r, o, i, n, y, d in rd]


# --- bases --------------------------------------------------------------------------------------------------


class BasisProvider:
    """Builds or loads field-free bases; counts eigen-solves actually performed."""

    def __init__(self, cfg: SweepConfig, cache_dir: Path | None):
        self.cfg = cfg
        self.cache_dir = None if cache_dir is None else Path(cache_dir)
        self.solves = 0
        self._alpha: dict[float, float] = {}
        self._ip_curve = None

    # model atom ---------------------------------------------------------------------------------------------
    def ip_at(self, r: float) -> float:
        if self.cfg.ip is not None:
            return float(self.cfg.ip)
        if self._ip_curve is None:
            self._ip_curve = (ma.read_two_column(self.cfg.ip_table) if self.cfg.ip_table else ma.h2_vertical_ip())
        tab = self._ip_curve
        if not tab[0, 0] - 1e-9 <= r <= tab[-1, 0] + 1e-9:
            raise ma.ModelAtomError(f"R={r} outside the Ip table range [{tab[0, 0]}, {tab[-1, 0]}]")
        return float(np.interp(r, tab[:, 0], tab[:, 1]))

    def alpha_at(self, r: float) -> float:
        if r not in self._alpha:
            self._alpha[r] = ma.alpha_from_ip(self.ip_at(r), self._radial_basis())
        return self._alpha[r]

    def _radial_basis(self) -> BSplineBasis:
        return ma.radial_basis(self.cfg.basis.radial)

    def _atom_path(self, alpha: float, ell: int) -> Path | None:
        if self.cache_dir is None:
            return None
        rc = self.cfg.basis.radial
        tag = f"{rc.box!r}_{rc.n_splines}_{rc.order}_{rc.geometric_count}_{rc.progression!r}"
        return self.cache_dir / f"atom_a{alpha!r}_l{ell}_{_digest(tag)}.bin"

    def atom_wave(self, alpha: float, ell: int) -> ma.RadialEigenbasis:
        basis = self._radial_basis()
        path = self._atom_path(alpha, ell)
        if path is not None:
            entry = cachemod.load(path)
            if entry is not None and np.array_equal(entry.xi_knots, basis.knots.knots):
                return ma.RadialEigenbasis(ell, alpha, entry.energies, entry.coefficients, basis)
        wave = ma.solve_radial(ma.ModelPotentialSpec(alpha), ell, basis)
        self.solves += 1
        if path is not None:
            cachemod.save(path, cachemod.CachedBasis(
                cachemod.ATOM, ell, 0, basis.order, 0, basis.x_max, math.nan, float(alpha), 1.0,
                basis.knots.knots, np.zeros(0), wave.energies, np.zeros(wave.energies.size, int),
                wave.coefficients))
        return wave

    # two-center ---------------------------------------------------------------------------------------------
    def _tc_path(self, r: float, lam: int, gerade: bool) -> Path | None:
        if self.cache_dir is None:
            return None
        c = self.cfg.basis.two_center
        tag = repr((c.box, c.n_xi, c.order_xi, c.geometric_count, c.progression, c.n_eta, c.order_eta))
        return self.cache_dir / f"tc_R{r!r}_L{lam}{'g' if gerade else 'u'}_{_digest(tag)}.bin"

    def orbitals(self, r: float, lam: int, gerade: bool) -> tc.OrbitalSet:
        c = self.cfg.basis.two_center
        basis = tc.build_two_center_basis(r, lam, gerade, c)
        path = self._tc_path(r, lam, gerade)
        if path is not None:
            entry = cachemod.load(path)
            if (entry is not None and np.array_equal(entry.xi_knots, basis.xi_basis.knots.knots)
                    and np.array_equal(entry.eta_knots, basis.eta_basis.knots.knots)):
                return tc.OrbitalSet(basis, entry.energies, entry.coefficients, entry.eta_nodes, entry.charge)
        orb = tc.solve_orbitals(basis)
        self.solves += 1
        if path is not None:
            cachemod.save(path, cachemod.CachedBasis(
                cachemod.TWO_CENTER, lam, 1 if gerade else -1, c.order_xi, c.order_eta, c.box, float(r), math.nan,
                orb.charge, basis.xi_basis.knots.knots, basis.eta_basis.knots.knots, orb.energies, orb.eta_nodes,
                orb.coefficients))
        return orb

    # field-free bases ---------------------------------------------------------------------------------------
    def blocks(self, orientation: str) -> list[tuple[int, bool]]:
        return tc.symmetry_blocks(orientation, self.cfg.basis.two_center.lambda_max)

    def prepare(self, r: float, orientation: str) -> None:
        """Make sure every eigenbasis needed at (R, orientation) exists in the cache."""
        if self.cfg.system == "model_atom":
            a = self.alpha_at(r)
            for ell in range(self.cfg.basis.ell_max + 1):
                self.atom_wave(a, ell)
        else:
            for lam, g in self.blocks(orientation):
                self.orbitals(r, lam, g)

    def field_free(self, r: float, orientation: str) -> FieldFreeBasis:
        b = self.cfg.basis
        if self.cfg.system == "model_atom":
            a = self.alpha_at(r)
            waves = [self.atom_wave(a, ell) for ell in range(b.ell_max + 1)]
            return atom_basis_from_waves(waves, b.cutoff)
        sets = [tc.filter_by_eta_nodes(self.orbitals(r, lam, g), b.two_center.max_eta_nodes)
                for lam, g in self.blocks(orientation)]
        return molecular_field_free_basis(sets, orientation, b.cutoff)


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:12]


# --- workers ------------------------------------------------------------------------------------------------

_WORKER: dict = {}


def _provider(cfg: SweepConfig, cache_dir) -> BasisProvider:
    key = (cfg.hash(), str(cache_dir))
    prov = _WORKER.get("provider")
    if prov is None or _WORKER.get("key") != key:
        prov = BasisProvider(cfg, cache_dir)
        _WORKER.update(provider=prov, key=key, bases={})
    return prov


def run_point(cfg: SweepConfig, cache_dir, point) -> Row:
    """Propagate one (R, orientation, I, N) point; failures become marked rows."""
    r, orientation, intensity, n = point
    try:
        prov = _provider(cfg, cache_dir)
        bases = _WORKER["bases"]
        if (r, orientation) not in bases:
            bases.clear()
            bases[(r, orientation)] = prov.field_free(r, orientation)
        ffb = bases[(r, orientation)]
        theta = PARALLEL if orientation == "parallel" else PERPENDICULAR
        pulse = make_pulse(cfg.wavelength, intensity, n, theta)
        final = propagate(ffb, pulse, rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)
        rec = ionization_yield(final, ffb, r, orientation, intensity, n)
        return Row(r, orientation, intensity, n, rec.yield_ion, rec.norm_defect)
    except Exception as exc:  # noqa: BLE001 - one bad point must not end the sweep
        log.warning("point %s failed: %s", point, exc)
        return Row(r, orientation, intensity, n, math.nan, math.nan, f"{type(exc).__name__}: {exc}")


def _run_chunk(cfg, cache_dir, points) -> list[Row]:
    from threadpoolctl import threadpool_limits

    with threadpool_limits(1):
        return [run_point(cfg, cache_dir, p) for p in points]


# --- manifest -----------------------------------------------------------------------------------------------


@dataclass
class Manifest:
    config_hash: str
    version: str
    completed: dict  # point key -> [row cells..., failure or None]
    cache_files: list

    def save(self, path: Path) -> None:
        data = json.dumps({"config_hash": self.config_hash, "version": self.version,
                           "completed": self.completed, "cache_files": self.cache_files},
                          indent=1, sort_keys=True)
        cachemod.write_atomic(path, data.encode("utf-8"))

    @classmethod
    def load(cls, path: Path) -> "Manifest | None":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
            return cls(d["config_hash"], d["version"], d["completed"], d["cache_files"])
        except (FileNotFoundError, ValueError, KeyError):
            return None

    def rows(self) -> list[Row]:
        out = []
        for cells in self.completed.values():
            r, o, i, n, y, d, fail = cells
            out.append(Row(float(r), o, float(i), int(n), float(y), float(d), fail))
        return out


@dataclass
class SweepResult:
    rows: list
    computed: int
    skipped: int
    failed: int
    complete: bool
    csv_path: Path


def run_sweep(cfg: SweepConfig, out_dir, cache_dir=None, resume: bool = False, workers: int | None = None,
              stop_after: int | None = None) -> SweepResult:
    """Run (or resume) a sweep; writes ``yields.csv``, ``failures.csv`` and the manifest into ``out_dir``.

    ``stop_after`` ends the run after that many new points, leaving a
    resumable manifest; the CSV is then written only once all points exist.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache_dir = cachemod.cache_root(out / "cache") if cache_dir is None else Path(cache_dir)
    workers = cfg.workers if workers is None else workers
    mpath = out / MANIFEST
    h = cfg.hash()
    man = Manifest.load(mpath) if resume else None
    if man is not None and man.config_hash != h:
        raise ValueError("manifest belongs to a different configuration; rerun without --resume")
    if man is None:
        man = Manifest(h, __version__, {}, [])
    points = cfg.points()
    todo = [p for p in points if point_key(p) not in man.completed]
    skipped = len(points) - len(todo)
    if stop_after is not None:
        todo = todo[:max(0, stop_after)]

    def record(rows):
        for row in rows:
            man.completed[row.key] = row.cells() + [row.failure]
        man.save(mpath)

    computed = 0
    if workers <= 1 or len(todo) <= 1:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(1):
            for p in todo:
                record([run_point(cfg, cache_dir, p)])
                computed += 1
    else:
        # bases are built once per (R, orientation) in the parent so workers only read the cache
        prov = BasisProvider(cfg, cache_dir)
        for key in dict.fromkeys((p[0], p[1]) for p in todo):
            prov.prepare(*key)
        chunks: dict = {}
        for p in todo:
            chunks.setdefault((p[0], p[1]), []).append(p)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(_run_chunk, cfg, cache_dir, c) for c in chunks.values()]
            for f in futures:
                rows = f.result()
                record(rows)
                computed += len(rows)
    man.cache_files = sorted(p.name for p in Path(cache_dir).glob("*.bin")) if Path(cache_dir).is_dir() else []
    man.save(mpath)
    rows = man.rows()
    complete = len(rows) == len(points) and all(point_key(p) in man.completed for p in points)
    csv_path = out / "yields.csv"
    if complete:
        cachemod.write_atomic(csv_path, format_csv(rows).encode("utf-8"))
        fails = [r for r in rows if r.failed]
        text = "R_bohr,orientation,intensity_Wcm2,n_cycles,reason\n" + "".join(
            f"{_fmt(r.r)},{r.orientation},{_fmt(r.intensity)},{r.n_cycles},\"{r.failure}\"\n" for r in
            sorted(fails, key=lambda w: (w.r, w.orientation, w.intensity, w.n_cycles)))
        cachemod.write_atomic(out / "failures.csv", text.encode("utf-8"))
    return SweepResult(rows, computed, skipped, sum(r.failed for r in rows), complete, csv_path)


def build_bases(cfg: SweepConfig, cache_dir) -> int:
    """Populate the cache for every (R, orientation); returns the number of eigen-solves performed."""
    prov = BasisProvider(cfg, cache_dir)
    for r in cfg.r_grid:
        for o in cfg.orientations:
            prov.prepare(r, o)
    return prov.solves
