"""Isotropic one-parameter model atom and its partial-wave B-spline eigenbases.

The potential is

    V(r) = -(1/r) * (1 + sign(alpha) * exp(-2 r / sqrt|alpha|)),

so alpha > 0 deepens the Coulomb well at short range, alpha < 0 screens it,
and alpha = 0 is hydrogen.  The ionization potential of the ground state is
a monotone function of alpha; :func:`alpha_from_ip` inverts it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import linalg, optimize

from .bspline import BSplineBasis, assemble_dense, build_knots, collocate, gauss_rule

log = logging.getLogger(__name__)

ALPHA_BRACKET = (-5.0, 20.0)


class ModelAtomError(ValueError):
    pass


@dataclass(frozen=True)
class ModelPotentialSpec:
    alpha: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ModelAtomError("alpha must be finite")


def potential_value(spec: ModelPotentialSpec, r):
    """Model potential in hartree at radius ``r`` (bohr, > 0)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ModelAtomError("potential defined for r > 0 only")
    a = spec.alpha
    if a == 0.0:
        return -1.0 / r
    return -(1.0 + math.copysign(1.0, a) * np.exp(-2.0 * r / math.sqrt(abs(a)))) / r


@dataclass(frozen=True)
class RadialBasisConfig:
    """Knot layout of the radial spline space (desk-scale defaults)."""

    box: float = 200.0
    n_splines: int = 300
    order: int = 8
    geometric_count: int = 40
    progression: float = 1.05

    def build(self) -> BSplineBasis:
        kn = build_knots(self.n_splines, self.order, 0.0, self.box, self.geometric_count, self.progression)
        return BSplineBasis(kn, drop_first=True, drop_last=True)


@lru_cache(maxsize=8)
def radial_basis(config: RadialBasisConfig = RadialBasisConfig()) -> BSplineBasis:
    return config.build()


class _RadialOperators:
    """alpha-independent matrices of one radial basis, plus quadrature data."""

    def __init__(self, basis: BSplineBasis):
        self.basis = basis
        rule = gauss_rule(basis)
        self.r = rule.points
        self.w = rule.flat_weights
        self.values = collocate(basis, self.r)
        self.overlap = assemble_dense(basis, rule)
        self.kinetic = 0.5 * assemble_dense(basis, rule, deriv=1)
        self.inv_r2 = assemble_dense(basis, rule, lambda r: 1.0 / r**2)
        self.r_matrix = assemble_dense(basis, rule, lambda r: r)

    def weighted(self, f: np.ndarray) -> np.ndarray:
        v = self.values
        return (v * (self.w * f)[:, None]).T @ v

    def hamiltonian(self, spec: ModelPotentialSpec, ell: int) -> np.ndarray:
        h = self.kinetic + 0.5 * ell * (ell + 1) * self.inv_r2 + self.weighted(potential_value(spec, self.r))
        return 0.5 * (h + h.T)


_OPERATORS: dict[int, _RadialOperators] = {}


def _operators(basis: BSplineBasis) -> _RadialOperators:
    ops = _OPERATORS.get(id(basis))
    if ops is None or ops.basis is not basis:
        ops = _RadialOperators(basis)
        _OPERATORS[id(basis)] = ops
    return ops


@dataclass(frozen=True, eq=False)
class RadialEigenbasis:
    """Eigenstates u(r) = sum_i c_i B_i(r) of one partial wave."""

    ell: int
    alpha: float
    energies: np.ndarray
    coefficients: np.ndarray  # columns are states, S-orthonormal
    basis: BSplineBasis = field(repr=False)

    @property
    def box(self) -> float:
        return self.basis.x_max

    def __len__(self):
        return self.energies.size

    def wavefunction(self, state: int, r):
        return collocate(self.basis, r) @ self.coefficients[:, state]


def solve_radial(spec: ModelPotentialSpec, ell: int, basis: BSplineBasis | None = None,
                 n_states: int | None = None) -> RadialEigenbasis:
    """Solve the generalized eigenproblem H c = E S c for one partial wave.

    The whole spectrum is returned unless ``n_states`` restricts it to the
    lowest states; positive energies are the box-discretized continuum.
    """
    if ell < 0:
        raise ModelAtomError("ell must be >= 0")
    if basis is None:
        basis = radial_basis()
    if basis.x_min != 0.0 or not (basis.drop_first and basis.drop_last):
        raise ModelAtomError("radial basis must span [0, r_box] with zero boundary values")
    ops = _operators(basis)
    h = ops.hamiltonian(spec, ell)
    subset = None if n_states is None else (0, min(n_states, basis.size) - 1)
    try:
        energies, vecs = linalg.eigh(h, ops.overlap, subset_by_index=subset)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"radial eigensolve failed (alpha={spec.alpha}, ell={ell}, n={basis.size}): {exc}") from exc
    return RadialEigenbasis(ell, spec.alpha, energies, vecs, basis)


def ground_energy(alpha: float, basis: BSplineBasis | None = None) -> float:
    return float(solve_radial(ModelPotentialSpec(alpha), 0, basis, n_states=1).energies[0])


def alpha_from_ip(ip: float, basis: BSplineBasis | None = None, bracket=ALPHA_BRACKET,
                  tol: float = 1e-13) -> float:
    """Model parameter whose ground state has ionization potential ``ip``.

    Brent's method (bisection safeguarded secant/interpolation) on the
    monotone map alpha -> -E0(alpha).
    """
    if not ip > 0:
        raise ModelAtomError("ionization potential must be positive")
    if ip == 0.5:
        return 0.0
    lo, hi = bracket
    f = lambda a: -ground_energy(a, basis) - ip  # noqa: E731
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise ModelAtomError(
            f"Ip={ip} outside the range [{f_lo + ip:.6f}, {f_hi + ip:.6f}] reachable for alpha in {bracket}")
    return float(optimize.brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200))


@dataclass(frozen=True)
class AlphaCurve:
    r: np.ndarray
    ip: np.ndarray
    alpha: np.ndarray

    def __len__(self):
        return self.r.size

    def alpha_at(self, r: float) -> float:
        """Table lookup, linear between entries."""
        if self.r.size == 0:
            raise ModelAtomError("empty alpha curve")
        for ri, ai in zip(self.r, self.alpha):
            if abs(ri - r) < 1e-9:
                return float(ai)
        if not self.r[0] <= r <= self.r[-1]:
            raise ModelAtomError(f"R={r} outside tabulated range")
        return float(np.interp(r, self.r, self.alpha))


def build_alpha_curve(ip_table, basis: BSplineBasis | None = None) -> AlphaCurve:
    table = np.asarray(list(ip_table), dtype=float).reshape(-1, 2)
    order = np.argsort(table[:, 0], kind="stable")
    table = table[order]
    alphas = np.array([alpha_from_ip(ip, basis) for ip in table[:, 1]])
    return AlphaCurve(table[:, 0].copy(), table[:, 1].copy(), alphas)


def read_two_column(path) -> np.ndarray:
    """Two numeric columns, ``#`` comments, commas or whitespace as separators."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise ValueError(f"malformed line in {path}: {line!r}")
            rows.append((float(parts[0]), float(parts[1])))
    return np.array(rows, dtype=float).reshape(-1, 2)


def shipped_table(name: str) -> np.ndarray:
    with resources.as_file(resources.files("sfion.data") / name) as p:
        return read_two_column(p)


def h2_vertical_ip() -> np.ndarray:
    """Shipped H2 vertical ionization potential table ``(R_bohr, Ip_hartree)``."""
    return shipped_table("h2_vertical_ip.dat")


def dipole_angular(ell: int) -> float:
    """<ell, 0| cos(theta) |ell + 1, 0>."""
    return (ell + 1) / math.sqrt((2 * ell + 1) * (2 * ell + 3))


def radial_dipole(lower: RadialEigenbasis, upper: RadialEigenbasis) -> np.ndarray:
    """<u_i^(ell)| r |u_j^(ell+1)> for all state pairs."""
    if lower.basis is not upper.basis:
        raise ModelAtomError("partial waves must share one radial basis")
    r_mat = _operators(lower.basis).r_matrix
    return lower.coefficients.T @ r_mat @ upper.coefficients
