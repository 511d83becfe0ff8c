"""Linearly polarized N-cycle pulses with a cos^2 envelope, in atomic units."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 137.035999  # a.u.
INTENSITY_AU = 3.5094452e16  # W/cm^2 for a peak field of 1 a.u.
BOHR_NM = 0.0529177210903
TIME_AU_FS = 0.02418884326585747
HARTREE_EV = 27.211386245988

PARALLEL = 0.0
PERPENDICULAR = 0.5 * math.pi


class PulseError(ValueError):
    pass


def omega_from_wavelength(wavelength_nm: float) -> float:
    """Photon energy in hartree for a vacuum wavelength in nm."""
    return 2.0 * math.pi * SPEED_OF_LIGHT * BOHR_NM / wavelength_nm


def wavelength_from_omega(omega: float) -> float:
    return 2.0 * math.pi * SPEED_OF_LIGHT * BOHR_NM / omega


def intensity_to_au(intensity_wcm2):
    return np.asarray(intensity_wcm2, dtype=float) / INTENSITY_AU


def ponderomotive_energy(intensity_wcm2, omega):
    """U_p = I/(4 omega^2) with I in atomic units."""
    return intensity_to_au(intensity_wcm2) / (4.0 * np.asarray(omega, dtype=float) ** 2)


@dataclass(frozen=True)
class PulseSpec:
    """cos^2 pulse; by default the envelope multiplies the vector potential.

    ``A(t) = -(E0/w) cos^2(pi t/T) sin(w t + phase)`` for ``|t| <= T/2`` and
    ``E = -dA/dt``.  With ``envelope_on="field"`` the envelope multiplies a
    cosine field carrier instead; that variant is kept only to quantify the
    difference and does not have an exactly vanishing pulse area.
    """

    wavelength_nm: float
    intensity_wcm2: float
    n_cycles: int
    theta: float = PARALLEL
    carrier_phase: float = 0.0
    envelope_on: str = "vector_potential"

    @property
    def omega(self) -> float:
        return omega_from_wavelength(self.wavelength_nm)

    @property
    def peak_field(self) -> float:
        return math.sqrt(self.intensity_wcm2 / INTENSITY_AU)

    @property
    def duration(self) -> float:
        """Total duration T_tot in a.u. of time."""
        return self.n_cycles * 2.0 * math.pi / self.omega

    @property
    def t_start(self) -> float:
        return -0.5 * self.duration

    @property
    def t_end(self) -> float:
        return 0.5 * self.duration

    @property
    def fwhm(self) -> float:
        """FWHM of the cos^4 intensity envelope in a.u. of time."""
        return self.duration * (2.0 / math.pi) * math.acos(2.0 ** -0.25)

    @property
    def fwhm_fs(self) -> float:
        return self.fwhm * TIME_AU_FS

    @property
    def orientation(self) -> str:
        if abs(self.theta - PARALLEL) < 1e-12:
            return "parallel"
        if abs(self.theta - PERPENDICULAR) < 1e-12:
            return "perpendicular"
        raise PulseError("only parallel (0) and perpendicular (pi/2) orientations are supported")

    def vector_potential(self, t):
        t = np.asarray(t, dtype=float)
        T, w = self.duration, self.omega
        inside = np.abs(t) <= 0.5 * T
        env = np.cos(np.pi * t / T) ** 2
        a = -(self.peak_field / w) * env * np.sin(w * t + self.carrier_phase)
        return np.where(inside, a, 0.0)

    def field(self, t):
        t = np.asarray(t, dtype=float)
        T, w, e0 = self.duration, self.omega, self.peak_field
        inside = np.abs(t) <= 0.5 * T
        phase = w * t + self.carrier_phase
        env = np.cos(np.pi * t / T) ** 2
        if self.envelope_on == "field":
            e = e0 * env * np.cos(phase)
        else:
            e = e0 * (env * np.cos(phase) - (np.pi / (w * T)) * np.sin(2 * np.pi * t / T) * np.sin(phase))
        return np.where(inside, e, 0.0)

    def field_scalar(self, t: float) -> float:
        """Same as :meth:`field` for one float, without array overhead."""
        T = self.duration
        if abs(t) > 0.5 * T:
            return 0.0
        w = self.omega
        phase = w * t + self.carrier_phase
        env = math.cos(math.pi * t / T) ** 2
        if self.envelope_on == "field":
            return self.peak_field * env * math.cos(phase)
        return self.peak_field * (env * math.cos(phase)
                                  - (math.pi / (w * T)) * math.sin(2 * math.pi * t / T) * math.sin(phase))

    def __call__(self, t):
        return self.field(t)


@dataclass(frozen=True)
class ConstantField:
    """Static field of fixed amplitude switched on over ``[t_start, t_end]``."""

    amplitude: float
    t_start: float
    t_end: float
    theta: float = PARALLEL

    @property
    def orientation(self) -> str:
        return PulseSpec.orientation.fget(self)  # same validation as pulses

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def field(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.t_start) & (t <= self.t_end), self.amplitude, 0.0)

    def field_scalar(self, t: float) -> float:
        return self.amplitude if self.t_start <= t <= self.t_end else 0.0

    def __call__(self, t):
        return self.field(t)


def make_pulse(wavelength_nm: float, intensity_wcm2: float, n_cycles: int, theta: float = PARALLEL,
               carrier_phase: float = 0.0, envelope_on: str = "vector_potential") -> PulseSpec:
    if not wavelength_nm > 0:
        raise PulseError("wavelength must be positive")
    if intensity_wcm2 < 0 or not math.isfinite(intensity_wcm2):
        raise PulseError("intensity must be finite and nonnegative")
    if int(n_cycles) != n_cycles or n_cycles < 2:
        raise PulseError("n_cycles must be an integer >= 2")
    if envelope_on not in ("vector_potential", "field"):
        raise PulseError(f"unknown envelope target {envelope_on!r}")
    pulse = PulseSpec(float(wavelength_nm), float(intensity_wcm2), int(n_cycles), float(theta),
                      float(carrier_phase), envelope_on)
    pulse.orientation  # validates theta
    return pulse


def field_at(pulse: PulseSpec, t):
    return pulse.field(t)


@dataclass(frozen=True)
class PonderomotiveQuantities:
    up: float
    omega: float
    n_min: int | None = None


def ponderomotive(pulse: PulseSpec, ip: float | None = None) -> PonderomotiveQuantities:
    up = float(ponderomotive_energy(pulse.intensity_wcm2, pulse.omega))
    n_min = None if ip is None else minimal_photon_number(ip, up, pulse.omega)
    return PonderomotiveQuantities(up, pulse.omega, n_min)


def minimal_photon_number(ip: float, up: float, omega: float) -> int:
    return int(math.ceil((ip + up) / omega))


def pulse_area(pulse: PulseSpec, points_per_cycle: int = 64) -> float:
    """Time integral of the field over the pulse (Gauss-Legendre per half cycle)."""
    x, w = np.polynomial.legendre.leggauss(points_per_cycle)
    edges = np.linspace(pulse.t_start, pulse.t_end, 2 * pulse.n_cycles + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = 0.5 * (a + b) + 0.5 * (b - a) * x
    return float(np.sum(0.5 * (b - a) * w * pulse.field(t)))
