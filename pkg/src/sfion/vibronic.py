"""Vibrational ground states and the vibrationally averaged ionization yield.

The averaged yield is ``Y = int Y(R) |phi_0(R)|^2 dR`` with ``phi_0`` the
ground vibrational state of the neutral molecule on its Born-Oppenheimer
curve.  It is meaningful only while ground-state depletion during the pulse
stays small.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import interpolate, linalg

from .model_atom import read_two_column, shipped_table

log = logging.getLogger(__name__)

# nuclear masses in electron masses: proton 1836.15267343, deuteron 3670.48296788
REDUCED_MASS = {"H2": 918.076336715, "D2": 1835.24148394}
DEFAULT_GRID = (0.4, 6.0, 0.005)
DEPLETION_LIMIT = 0.2
COVERAGE_MASS = 1e-2


class VibronicError(ValueError):
    pass


class CoverageWarning(UserWarning):
    pass


class DepletionWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class VibrationalState:
    nu: int
    reduced_mass: float
    grid: np.ndarray
    phi: np.ndarray
    energy: float

    @property
    def density(self) -> np.ndarray:
        return self.phi**2

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.density, self.grid))

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.grid - m) ** 2 * self.density, self.grid))

    def peak(self) -> float:
        """Location of the density maximum, refined by a parabola through the top three points."""
        d = self.density
        i = int(np.argmax(d))
        if 0 < i < d.size - 1:
            y0, y1, y2 = d[i - 1], d[i], d[i + 1]
            h = self.grid[1] - self.grid[0]
            return float(self.grid[i] + 0.5 * h * (y0 - y2) / (y0 - 2 * y1 + y2))
        return float(self.grid[i])


def make_grid(r_min: float = DEFAULT_GRID[0], r_max: float = DEFAULT_GRID[1],
              step: float = DEFAULT_GRID[2]) -> np.ndarray:
    n = int(round((r_max - r_min) / step))
    return r_min + step * np.arange(n + 1)


def solve_vibrational(potential, reduced_mass: float, nu: int = 0, grid: np.ndarray | None = None) -> VibrationalState:
    """Lowest vibrational state by the matrix Numerov method.

    ``potential`` is either a callable ``V(R)`` or a two-column table
    ``(R, V)`` interpolated by a cubic spline.  The wavefunction vanishes at
    both grid ends.  Numerov's recurrence gives ``-K phi/(2 mu) + B V phi =
    E B phi`` with ``K`` the second difference and ``B = tridiag(1, 10, 1)/12``.
    ``K`` and ``B`` commute, so ``H = -B^-1 K/(2 mu) + V`` is symmetric and
    its eigenvector is the wavefunction itself; the error is O(h^4).
    """
    if nu != 0:
        raise VibronicError("only nu = 0 is supported")
    if not reduced_mass > 0:
        raise VibronicError("reduced mass must be positive")
    grid = make_grid() if grid is None else np.asarray(grid, dtype=float)
    h = grid[1] - grid[0]
    if not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0.0):
        raise VibronicError("vibrational grid must be uniform")
    if callable(potential):
        v_full = np.asarray(potential(grid), dtype=float)
    else:
        table = np.asarray(potential, dtype=float)
        if table[0, 0] > grid[0] + 1e-12 or table[-1, 0] < grid[-1] - 1e-12:
            raise VibronicError(f"potential table [{table[0, 0]}, {table[-1, 0]}] does not cover the grid")
        v_full = interpolate.CubicSpline(table[:, 0], table[:, 1])(grid)
    v = v_full[1:-1]
    n = v.size
    k = (np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)) / (h * h)
    b_banded = np.vstack([np.r_[0.0, np.full(n - 1, 1.0 / 12.0)], np.full(n, 10.0 / 12.0)])
    hm = -linalg.solveh_banded(b_banded, k) / (2.0 * reduced_mass)
    hm = 0.5 * (hm + hm.T)
    hm[np.diag_indices(n)] += v
    energies, vecs = linalg.eigh(hm, subset_by_index=(0, 0))
    phi = np.concatenate([[0.0], vecs[:, 0], [0.0]])
    if v_full[0] <= energies[0] or v_full[-1] <= energies[0]:
        raise VibronicError("no bound vibrational state inside the grid")
    phi /= np.sqrt(np.trapezoid(phi**2, grid))
    if phi[np.argmax(np.abs(phi))] < 0:
        phi = -phi
    return VibrationalState(nu, float(reduced_mass), grid, phi, float(energies[0]))


def h2_ground_curve() -> np.ndarray:
    """Shipped H2 ground-state curve ``(R_bohr, V_hartree)``."""
    return shipped_table("h2_ground_curve.dat")


def load_potential(path=None) -> np.ndarray:
    return h2_ground_curve() if path is None else read_two_column(path)


def isotope_state(isotope: str, potential=None) -> VibrationalState:
    try:
        mu = REDUCED_MASS[isotope]
    except KeyError:
        raise VibronicError(f"unknown isotope {isotope!r}; choose from {sorted(REDUCED_MASS)}") from None
    return solve_vibrational(h2_ground_curve() if potential is None else potential, mu)


@dataclass(frozen=True, eq=False)
class WeightedYieldCurve:
    grid: np.ndarray
    values: np.ndarray
    orientation: str = "parallel"
    intensity: float = 0.0


def weight_yield(r_samples, yields, state: VibrationalState, orientation: str = "parallel",
                 intensity: float = 0.0) -> WeightedYieldCurve:
    """``Y(R) |phi(R)|^2`` on the vibrational grid.

    Y is interpolated by a cubic spline through the samples and held at the
    end values outside them.  A :class:`CoverageWarning` is issued when the
    extrapolated region carries more than ``COVERAGE_MASS`` of the
    vibrational probability, a :class:`DepletionWarning` when any sample
    exceeds ``DEPLETION_LIMIT``.
    """
    r = np.asarray(r_samples, dtype=float)
    y = np.asarray(yields, dtype=float)
    if r.shape != y.shape or r.ndim != 1:
        raise VibronicError("R samples and yields must be matching 1-D arrays")
    if r.size < 4:
        raise VibronicError("at least 4 R samples are required")
    order = np.argsort(r)
    r, y = r[order], y[order]
    if np.any(np.diff(r) <= 0):
        raise VibronicError("duplicate R samples")
    if np.any(y < 0):
        raise VibronicError("yields must be nonnegative")
    if np.any(y > DEPLETION_LIMIT):
        warnings.warn(f"yield up to {y.max():.3g} exceeds {DEPLETION_LIMIT}; ground-state depletion is not "
                      "negligible", DepletionWarning, stacklevel=2)
    g = state.grid
    dens = state.density
    outside = (g < r[0]) | (g > r[-1])
    lost = float(np.trapezoid(np.where(outside, dens, 0.0), g))
    if lost > COVERAGE_MASS:
        warnings.warn(f"R samples [{r[0]}, {r[-1]}] miss {lost:.2%} of the vibrational density",
                      CoverageWarning, stacklevel=2)
    yg = interpolate.CubicSpline(r, y)(np.clip(g, r[0], r[-1]))
    # the spline can undershoot between tiny samples
    yg = np.maximum(yg, 0.0)
    return WeightedYieldCurve(g, yg * dens, orientation, float(intensity))


def integrate_yield(curve: WeightedYieldCurve) -> float:
    """Trapezoidal quadrature over R; matches the normalization of ``phi``."""
    return float(np.trapezoid(curve.values, curve.grid))


def averaged_yield(r_samples, yields, state: VibrationalState) -> float:
    return integrate_yield(weight_yield(r_samples, yields, state))
