"""Sweep configuration read from an INI file.

Example (every key is optional; values shown are the desk defaults)::

    [system]
    kind = model_atom          # model_atom | two_center
    ip =                       # fixed ionization potential (model atom); empty: shipped H2 Ip(R) table
    ip_table =                 # path to an alternative "R_bohr, Ip_hartree" table

    [grid]
    r = 1.4                    # list "1.0, 1.4" or inclusive range "1.0:2.2:0.05"
    intensity = 1e13           # W/cm^2, list or range
    orientation = parallel     # parallel, perpendicular
    n_cycles = 20
    wavelength = 400           # nm

    [basis]
    preset = desk              # desk | full; explicit keys below override the preset
    cutoff = 10                # hartree above threshold
    ell_max = 12
    radial_box = 200
    radial_splines = 300
    radial_order = 8
    radial_geometric_count = 40
    box = 150                  # two-center linear box size (bohr)
    n_xi = 120
    order_xi = 10
    n_eta = 20
    order_eta = 8
    geometric_count = 40
    progression = 1.05
    lambda_max = 3
    max_eta_nodes = 19

    [propagation]
    rel_tol = 1e-8
    abs_tol = 1e-12

    [run]
    workers = 1

The full preset sets box 350, 350 xi splines, 30 eta splines,
Lambda <= 7; the other values coincide with the desk defaults.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .model_atom import RadialBasisConfig
from .two_center import FULL_SCALE, TwoCenterConfig


class ConfigError(ValueError):
    pass


SYSTEMS = ("model_atom", "two_center")
ORIENTATIONS = ("parallel", "perpendicular")


@dataclass(frozen=True)
class BasisSettings:
    cutoff: float = 10.0
    ell_max: int = 12
    radial: RadialBasisConfig = field(default_factory=RadialBasisConfig)
    two_center: TwoCenterConfig = field(default_factory=TwoCenterConfig)


PRESETS = {
    "desk": BasisSettings(),
    "full": BasisSettings(two_center=FULL_SCALE),
}


@dataclass(frozen=True)
class SweepConfig:
    system: str = "model_atom"
    ip: float | None = None
    ip_table: str | None = None
    r_grid: tuple[float, ...] = (1.4,)
    intensities: tuple[float, ...] = (1e13,)
    orientations: tuple[str, ...] = ("parallel",)
    n_cycles: tuple[int, ...] = (20,)
    wavelength: float = 400.0
    basis: BasisSettings = field(default_factory=BasisSettings)
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    workers: int = 1

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}")
        for name in ("r_grid", "intensities", "orientations", "n_cycles"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must not be empty")
        bad = set(self.orientations) - set(ORIENTATIONS)
        if bad:
            raise ConfigError(f"unknown orientations {sorted(bad)}")
        if any(r <= 0 for r in self.r_grid):
            raise ConfigError("R values must be positive")
        if any(i < 0 for i in self.intensities):
            raise ConfigError("intensities must be nonnegative")
        if any(n < 2 for n in self.n_cycles):
            raise ConfigError("n_cycles must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def points(self) -> list[tuple[float, str, float, int]]:
        """All (R, orientation, I, N) tuples in output order."""
        pts = [(r, o, i, n) for r in self.r_grid for o in self.orientations
               for i in self.intensities for n in self.n_cycles]
        return sorted(set(pts), key=lambda p: (p[0], ORIENTATIONS.index(p[1]), p[2], p[3]))

    def physics_dict(self) -> dict:
        """Everything that affects results (the worker count does not)."""
        d = asdict(self)
        d.pop("workers")
        return d

    def hash(self) -> str:
        blob = json.dumps(self.physics_dict(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_values(text: str, kind=float) -> tuple:
    """Comma/whitespace list or an inclusive ``start:stop:step`` range."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"bad range {text!r}; use start:stop:step")
        a, b, h = map(float, parts)
        if h <= 0 or b < a:
            raise ConfigError(f"bad range {text!r}")
        n = int(math.floor((b - a) / h + 1e-9))
        vals = np.round(a + h * np.arange(n + 1), 12)
        return tuple(kind(v) for v in vals)
    return tuple(kind(float(v)) if kind is int else kind(v) for v in text.replace(",", " ").split())


def _get(sec, key, conv, default):
    if sec is None or key not in sec or sec[key].strip() == "":
        return default
    try:
        return conv(sec[key].strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {sec[key]!r}") from exc


def load_config(path) -> SweepConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    known = {"system", "grid", "basis", "propagation", "run"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    sec = {name: (cp[name] if cp.has_section(name) else None) for name in known}

    bsec = sec["basis"]
    preset = _get(bsec, "preset", str, "desk")
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    base = PRESETS[preset]
    rad, tc = base.radial, base.two_center
    rad = RadialBasisConfig(
        box=_get(bsec, "radial_box", float, rad.box),
        n_splines=_get(bsec, "radial_splines", int, rad.n_splines),
        order=_get(bsec, "radial_order", int, rad.order),
        geometric_count=_get(bsec, "radial_geometric_count", int, rad.geometric_count),
        progression=_get(bsec, "progression", float, rad.progression))
    tc = replace(tc, **{k: _get(bsec, k, type(getattr(tc, k)), getattr(tc, k)) for k in
                        ("box", "n_xi", "order_xi", "geometric_count", "progression", "n_eta", "order_eta",
                         "lambda_max", "max_eta_nodes")})
    basis = BasisSettings(_get(bsec, "cutoff", float, base.cutoff), _get(bsec, "ell_max", int, base.ell_max), rad, tc)

    g = sec["grid"]
    return SweepConfig(
        system=_get(sec["system"], "kind", str, "model_atom"),
        ip=_get(sec["system"], "ip", float, None),
        ip_table=_get(sec["system"], "ip_table", str, None),
        r_grid=_get(g, "r", parse_values, (1.4,)),
        intensities=_get(g, "intensity", parse_values, (1e13,)),
        orientations=_get(g, "orientation", lambda s: parse_values(s, str), ("parallel",)),
        n_cycles=_get(g, "n_cycles", lambda s: parse_values(s, int), (20,)),
        wavelength=_get(g, "wavelength", float, 400.0),
        basis=basis,
        rel_tol=_get(sec["propagation"], "rel_tol", float, 1e-8),
        abs_tol=_get(sec["propagation"], "abs_tol", float, 1e-12),
        workers=_get(sec["run"], "workers", int, 1),
    )


def write_config(cfg: SweepConfig, path) -> None:
    """Write ``cfg`` as an INI file that :func:`load_config` reads back unchanged."""
    fmt = lambda vals: ", ".join(repr(v) if isinstance(v, float) else str(v) for v in vals)  # noqa: E731
    b, rad, tc = cfg.basis, cfg.basis.radial, cfg.basis.two_center
    cp = configparser.ConfigParser()
    cp["system"] = {"kind": cfg.system, "ip": "" if cfg.ip is None else repr(cfg.ip),
                    "ip_table": cfg.ip_table or ""}
    cp["grid"] = {"r": fmt(cfg.r_grid), "intensity": fmt(cfg.intensities), "orientation": fmt(cfg.orientations),
                  "n_cycles": fmt(cfg.n_cycles), "wavelength": repr(cfg.wavelength)}
    cp["basis"] = {"cutoff": repr(b.cutoff), "ell_max": str(b.ell_max), "radial_box": repr(rad.box),
                   "radial_splines": str(rad.n_splines), "radial_order": str(rad.order),
                   "radial_geometric_count": str(rad.geometric_count), "progression": repr(tc.progression),
                   **{k: repr(getattr(tc, k)) if isinstance(getattr(tc, k), float) else str(getattr(tc, k))
                      for k in ("box", "n_xi", "order_xi", "geometric_count", "n_eta", "order_eta",
                                "lambda_max", "max_eta_nodes")}}
    cp["propagation"] = {"rel_tol": repr(cfg.rel_tol), "abs_tol": repr(cfg.abs_tol)}
    cp["run"] = {"workers": str(cfg.workers)}
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)
