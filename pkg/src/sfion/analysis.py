"""Resonance and threshold prediction, power-law fits, orientation ratios.

Energies are in hartree, intensities in W/cm^2, wavelengths in nm.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .laser import INTENSITY_AU, omega_from_wavelength, ponderomotive_energy, wavelength_from_omega


class AnalysisError(ValueError):
    pass


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ShiftModel:
    """Field-induced shift ``dE(I) = slope * Up(I) + offset`` of an excited level."""

    kind: str = "ponderomotive"
    slope: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind == "ponderomotive" and (self.slope != 1.0 or self.offset != 0.0):
            raise AnalysisError("the ponderomotive model has slope 1 and offset 0")
        if self.kind not in ("ponderomotive", "affine"):
            raise AnalysisError(f"unknown shift model {self.kind!r}")

    def shift(self, intensity, omega):
        return self.slope * ponderomotive_energy(intensity, omega) + self.offset


PONDEROMOTIVE = ShiftModel()


def affine_shift(slope: float, offset: float) -> ShiftModel:
    return ShiftModel("affine", float(slope), float(offset))


def minimal_photons(ip: float, omega: float, up: float = 0.0) -> int:
    return int(math.ceil((ip + up) / omega))


def threshold_intensity(ip, omega: float, n: int):
    """Intensity at which ``n omega = Ip + Up``; NaN where ``n omega < Ip``."""
    ip = np.asarray(ip, dtype=float)
    i = INTENSITY_AU * 4.0 * omega**2 * (n * omega - ip)
    return np.where(i >= 0, i, np.nan)


def channel_thresholds(ip_table, omega: float, n_range) -> dict[int, np.ndarray]:
    """Per photon number, rows ``(R, I_threshold)`` where a threshold exists."""
    table = np.asarray(ip_table, dtype=float).reshape(-1, 2)
    out = {}
    for n in n_range:
        i = threshold_intensity(table[:, 1], omega, int(n))
        ok = np.isfinite(i)
        if np.any(ok):
            out[int(n)] = np.column_stack([table[ok, 0], i[ok]])
    return out


@dataclass(frozen=True)
class RempiPrediction:
    label: str
    n_photons: int
    variable: str  # "R_bohr" or "wavelength_nm"
    locus: np.ndarray = field(repr=False)  # rows (variable, intensity)

    def residuals(self, excitation=None, shift: ShiftModel = PONDEROMOTIVE, omega: float | None = None):
        """``n omega - dE - shift`` at each locus point."""
        x, i = self.locus[:, 0], self.locus[:, 1]
        if self.variable == "wavelength_nm":
            w = np.array([omega_from_wavelength(v) for v in x])
            return self.n_photons * w - excitation - shift.shift(i, w)
        de = np.interp(x, excitation[:, 0], excitation[:, 1])
        return self.n_photons * omega - de - shift.shift(i, omega)


def resonance_wavelength(delta_e: float, n: int, intensity: float, shift: ShiftModel = PONDEROMOTIVE,
                         bracket=(50.0, 5000.0)) -> float:
    """Wavelength where ``n omega = dE + shift(I, omega)``, or NaN when none exists in ``bracket``."""
    def g(lam):
        w = omega_from_wavelength(lam)
        return n * w - delta_e - float(shift.shift(intensity, w))

    lo, hi = bracket
    if g(lo) * g(hi) > 0:
        return math.nan
    return float(optimize.brentq(g, lo, hi, xtol=1e-13, rtol=1e-15, maxiter=200))


def rempi_locus(excitation, n: int, shift: ShiftModel = PONDEROMOTIVE, omega: float | None = None,
                intensities=None, label: str = "") -> RempiPrediction:
    """Points where an n-photon resonance with an excited level is met.

    With ``omega`` given, ``excitation`` is a table ``(R, dE)`` and the
    locus is ``(R, I)``, solving for I.  Without it, ``excitation`` is a
    single energy and the locus is ``(wavelength, I)`` over ``intensities``.
    Points needing a negative intensity or without a root are omitted.
    """
    if omega is None:
        if intensities is None:
            raise AnalysisError("a wavelength sweep needs an intensity list")
        rows = [(resonance_wavelength(float(excitation), n, i, shift), float(i)) for i in intensities]
        rows = [r for r in rows if math.isfinite(r[0])]
        return RempiPrediction(label, n, "wavelength_nm", np.array(rows, dtype=float).reshape(-1, 2))
    table = np.asarray(excitation, dtype=float).reshape(-1, 2)
    up_per_wcm2 = float(ponderomotive_energy(1.0, omega))
    if shift.slope == 0:
        raise AnalysisError("a zero-slope shift leaves the intensity undetermined")
    i = (n * omega - table[:, 1] - shift.offset) / (shift.slope * up_per_wcm2)
    ok = i >= 0
    return RempiPrediction(label, n, "R_bohr", np.column_stack([table[ok, 0], i[ok]]))


def calibrate_excitation(wavelength_nm: float, n: int, intensity: float, shift: ShiftModel) -> float:
    """Excitation energy placing the n-photon resonance at ``wavelength_nm`` for ``intensity``."""
    w = omega_from_wavelength(wavelength_nm)
    return n * w - float(shift.shift(intensity, w))


def ponderomotive_wavelength_shift(wavelength_nm: float, intensity: float, n: int) -> float:
    """Blue shift of an n-photon resonance if the level follows Up exactly."""
    w = omega_from_wavelength(wavelength_nm)
    de = n * w  # resonant at zero intensity
    return wavelength_nm - resonance_wavelength(de, n, intensity, PONDEROMOTIVE)


@dataclass(frozen=True)
class FitResult:
    omega: float
    k_s: float
    residual_norm: float

    def predict(self, intensity, t_au):
        return fit_function(intensity, t_au, self.omega, self.k_s)


def fit_function(intensity, t_au, omega: float, k_s: float):
    """``Omega T (I/I0)^k``, T in atomic time units, I0 the atomic intensity unit."""
    return omega * np.asarray(t_au, dtype=float) * (np.asarray(intensity, dtype=float) / INTENSITY_AU) ** k_s


def fit_power_law(intensity, t_au, yields) -> FitResult:
    """Equal-weight least squares of log Y on log I with log T as a fixed offset."""
    i = np.asarray(intensity, dtype=float)
    t = np.broadcast_to(np.asarray(t_au, dtype=float), i.shape)
    y = np.asarray(yields, dtype=float)
    if i.size < 3:
        raise AnalysisError("at least 3 records are needed")
    if np.any(y <= 0) or np.any(i <= 0) or np.any(t <= 0):
        raise AnalysisError("intensities, durations and yields must be positive")
    x = np.log(i / INTENSITY_AU)
    if np.ptp(x) < 1e-12 * max(1.0, np.abs(x).max()):
        raise AnalysisError("all records share one intensity; the exponent is undetermined")
    a = np.column_stack([np.ones_like(x), x])
    b = np.log(y) - np.log(t)
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    resid = b - a @ coef
    return FitResult(float(math.exp(coef[0])), float(coef[1]), float(np.linalg.norm(resid)))


def scaled_yields(intensity, t_au, yields, fit: FitResult) -> np.ndarray:
    """Yields divided by the fitted power law."""
    return np.asarray(yields, dtype=float) / fit.predict(intensity, t_au)


def loglog_slope(intensity, yields) -> float:
    x, y = np.log(np.asarray(intensity, float)), np.log(np.asarray(yields, float))
    return float(np.polyfit(x, y, 1)[0])


def orientation_ratio(parallel, perpendicular) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise ``parallel / perpendicular`` and a mask of points with a zero denominator."""
    p = np.asarray(parallel, dtype=float)
    q = np.asarray(perpendicular, dtype=float)
    if p.shape != q.shape:
        raise AnalysisError("yield curves must share one intensity grid")
    bad = q == 0
    ratio = np.divide(p, q, out=np.full(p.shape, np.nan), where=~bad)
    return ratio, bad


def atomic_comparison(yields, limit: float = 0.1) -> np.ndarray:
    """Doubled one-electron yields for a two-electron target; warns above ``limit``."""
    y = np.asarray(yields, dtype=float)
    if np.any(y > limit):
        warnings.warn(f"yield {y.max():.3g} exceeds {limit}; doubling one-electron yields is unreliable here",
                      ValidityWarning, stacklevel=2)
    return 2.0 * y


def find_peaks_log(x, y, prominence_factor: float = 3.0) -> np.ndarray:
    """Indices of local maxima of log y whose prominence exceeds ``factor`` times the median prominence."""
    ly = np.log(np.asarray(y, dtype=float))
    idx, props = signal.find_peaks(ly, prominence=0.0)
    if idx.size == 0:
        return idx
    prom = props["prominences"]
    return idx[prom >= prominence_factor * np.median(prom)] if idx.size > 2 else idx[prom > 0]


def structure_amplitude(intensity, yields, degree: int = 1) -> float:
    """Peak-to-valley of log Y after removing a polynomial trend in log I."""
    x, y = np.log(np.asarray(intensity, float)), np.log(np.asarray(yields, float))
    resid = y - np.polyval(np.polyfit(x, y, degree), x)
    return float(np.ptp(resid))


def excitation_table(r, lower_energies, upper_energies) -> np.ndarray:
    """``(R, E_upper - E_lower)`` rows from two energy curves."""
    r = np.asarray(r, dtype=float)
    return np.column_stack([r, np.asarray(upper_energies, float) - np.asarray(lower_energies, float)])


def wavelength_for(omega: float) -> float:
    return wavelength_from_omega(omega)
