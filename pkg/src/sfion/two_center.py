"""One-electron homonuclear two-center orbitals in prolate spheroidal coordinates.

Orbitals are written ``w(xi, eta) g(xi, eta) exp(i Lambda phi) / sqrt(2 pi)``
with ``w = [(xi^2 - 1)(1 - eta^2)]^(Lambda/2)`` carrying the exact behaviour
on the axis, and ``g`` expanded in a tensor product of B splines in xi (on
``[1, xi_max]``, zero at ``xi_max``) and inversion-adapted B-spline
combinations in eta (on ``[-1, 1]``).  After integrating the cross terms by
parts the centrifugal pieces cancel and, with ``s = xi^2 - 1`` and
``t = 1 - eta^2``,

    S = (R/2)^3 [<s^L xi^2> (x) <t^L> - <s^L> (x) <t^L eta^2>]
    H = (R/4) [<s^(L+1) d d> (x) <t^L> + <s^L> (x) <t^(L+1) d d>]
        - Z R^2/2 <s^L xi> (x) <t^L>

where ``<f>`` denotes the spline Gram matrix with weight ``f``.  Every
integrand is a polynomial, so Gauss-Legendre quadrature is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import linalg

from .bspline import BSplineBasis, KnotSequence, assemble_dense, build_knots, collocate, gauss_rule, uniform_knots


class TwoCenterError(ValueError):
    pass


@dataclass(frozen=True)
class TwoCenterConfig:
    """Spline parameters; defaults are desk scale (see :data:`FULL_SCALE`)."""

    box: float = 150.0
    n_xi: int = 120
    order_xi: int = 10
    geometric_count: int = 40
    progression: float = 1.05
    n_eta: int = 20
    order_eta: int = 8
    lambda_max: int = 3
    max_eta_nodes: int = 19


FULL_SCALE = TwoCenterConfig(box=350.0, n_xi=350, order_xi=10, geometric_count=40, progression=1.05,
                              n_eta=30, order_eta=8, lambda_max=7, max_eta_nodes=19)


def symmetry_label(lam: int, gerade: bool) -> str:
    greek = "sigma pi delta phi gamma eta iota kappa".split()
    name = greek[lam] if lam < len(greek) else f"L{lam}"
    return f"{name}{'g' if gerade else 'u'}"


def _eta_parity(lam: int, gerade: bool) -> int:
    # inversion: (xi, eta, phi) -> (xi, -eta, phi + pi) multiplies exp(i L phi) by (-1)^L
    return (1 if gerade else -1) * (-1) ** lam


def _symmetric_transform(n: int, parity: int) -> np.ndarray:
    """Columns combine spline i with its mirror n-1-i into even/odd functions."""
    cols = []
    for i in range(n // 2):
        v = np.zeros(n)
        v[i] = 1.0 / math.sqrt(2.0)
        v[n - 1 - i] = parity / math.sqrt(2.0)
        cols.append(v)
    if n % 2 == 1 and parity > 0:
        v = np.zeros(n)
        v[n // 2] = 1.0
        cols.append(v)
    return np.array(cols).T


@dataclass(frozen=True, eq=False)
class TwoCenterBasis:
    r: float
    lam: int
    gerade: bool
    box: float
    xi_basis: BSplineBasis
    eta_basis: BSplineBasis  # all eta splines on [-1, 1]
    eta_transform: np.ndarray = field(repr=False)  # eta splines -> symmetry-adapted functions

    @property
    def xi_max(self) -> float:
        return self.xi_basis.x_max

    @property
    def label(self) -> str:
        return symmetry_label(self.lam, self.gerade)

    @property
    def eta_parity(self) -> int:
        return _eta_parity(self.lam, self.gerade)

    @property
    def shape(self) -> tuple[int, int]:
        return self.xi_basis.size, self.eta_transform.shape[1]

    @property
    def size(self) -> int:
        a, b = self.shape
        return a * b


def xi_max_for(r: float, box: float) -> float:
    return 2.0 * box / r


def build_two_center_basis(r: float, lam: int, gerade: bool,
                           config: TwoCenterConfig = TwoCenterConfig()) -> TwoCenterBasis:
    """Spline space at internuclear distance ``r`` for one (Lambda, g/u) block.

    The linear box size is held fixed by choosing ``xi_max = 2 box / R``.
    """
    if not r > 0:
        raise TwoCenterError("R must be positive")
    if lam < 0:
        raise TwoCenterError("Lambda must be >= 0")
    if config.box <= r:
        raise TwoCenterError(f"box={config.box} must exceed R={r}")
    xi_knots = _xi_knots(float(r), config)
    eta_knots = _eta_knots(config)
    t = _symmetric_transform(eta_knots.n_splines, _eta_parity(lam, gerade))
    t.setflags(write=False)
    return TwoCenterBasis(float(r), int(lam), bool(gerade), float(config.box),
                          BSplineBasis(xi_knots, drop_first=False, drop_last=True), BSplineBasis(eta_knots), t)


_KNOT_CACHE: dict = {}


def _xi_knots(r: float, config: TwoCenterConfig) -> KnotSequence:
    key = ("xi", r, config.box, config.n_xi, config.order_xi, config.geometric_count, config.progression)
    if key not in _KNOT_CACHE:
        _KNOT_CACHE[key] = build_knots(config.n_xi, config.order_xi, 1.0, xi_max_for(r, config.box),
                                       config.geometric_count, config.progression)
    return _KNOT_CACHE[key]


def _eta_knots(config: TwoCenterConfig) -> KnotSequence:
    key = ("eta", config.n_eta, config.order_eta)
    if key not in _KNOT_CACHE:
        _KNOT_CACHE[key] = uniform_knots(config.n_eta, config.order_eta, -1.0, 1.0)
    return _KNOT_CACHE[key]


@dataclass(frozen=True, eq=False)
class OrbitalSet:
    """Eigenpairs of one (Lambda, parity) block.

    ``coefficients[:, j]`` holds orbital ``j`` in Kronecker order (xi index
    major, symmetry-adapted eta index minor); orbitals are orthonormal under
    the spheroidal volume element.  Energies exclude nuclear repulsion.
    """

    basis: TwoCenterBasis
    energies: np.ndarray
    coefficients: np.ndarray
    eta_nodes: np.ndarray
    charge: float = 1.0

    @property
    def r(self) -> float:
        return self.basis.r

    @property
    def lam(self) -> int:
        return self.basis.lam

    @property
    def gerade(self) -> bool:
        return self.basis.gerade

    @property
    def label(self) -> str:
        return self.basis.label

    def __len__(self):
        return self.energies.size

    def subset(self, keep) -> "OrbitalSet":
        keep = np.asarray(keep, dtype=int)
        return replace(self, energies=self.energies[keep], coefficients=self.coefficients[:, keep],
                       eta_nodes=self.eta_nodes[keep])

    def total_energies(self) -> np.ndarray:
        return self.energies + self.charge**2 / self.r


class _Integrals:
    """Weighted one-dimensional Gram matrices on one (xi, eta) knot pair."""

    def __init__(self, xi_knots: KnotSequence, eta_knots: KnotSequence):
        self.xi_knots, self.eta_knots = xi_knots, eta_knots
        # s^L and t^L raise the polynomial degree; add points so the rule stays exact
        self.xi_basis = BSplineBasis(xi_knots, drop_first=False, drop_last=True)
        self.eta_basis = BSplineBasis(eta_knots)
        self._cache: dict = {}

    def _rule(self, knots: KnotSequence, power: int):
        return gauss_rule(knots, knots.order + power + 3)

    def xi(self, kind: str, power: int) -> np.ndarray:
        key = ("xi", kind, power)
        if key not in self._cache:
            rule = self._rule(self.xi_knots, power + 1)
            s = lambda x: (x * x - 1.0) ** power  # noqa: E731
            weights = {
                "O": s,
                "Q": lambda x: s(x) * x * x,
                "X": lambda x: s(x) * x,
                "X3": lambda x: s(x) * x**3,
                "K": lambda x: s(x) * (x * x - 1.0),
            }
            deriv = 1 if kind == "K" else 0
            self._cache[key] = assemble_dense(self.xi_basis, rule, weights[kind], deriv=deriv)
        return self._cache[key]

    def eta(self, kind: str, power: int) -> np.ndarray:
        key = ("eta", kind, power)
        if key not in self._cache:
            rule = self._rule(self.eta_knots, power + 1)
            t = lambda x: (1.0 - x * x) ** power  # noqa: E731
            weights = {
                "O": t,
                "Q": lambda x: t(x) * x * x,
                "E1": lambda x: t(x) * x,
                "E3": lambda x: t(x) * x**3,
                "K": lambda x: t(x) * (1.0 - x * x),
            }
            deriv = 1 if kind == "K" else 0
            self._cache[key] = assemble_dense(self.eta_basis, rule, weights[kind], deriv=deriv)
        return self._cache[key]


_INTEGRALS: dict = {}


def _integrals(basis: TwoCenterBasis) -> _Integrals:
    xk, ek = basis.xi_basis.knots, basis.eta_basis.knots
    key = (id(xk), id(ek))
    entry = _INTEGRALS.get(key)
    if entry is None or entry.xi_knots is not xk or entry.eta_knots is not ek:
        entry = _Integrals(xk, ek)
        _INTEGRALS[key] = entry
    return entry


def _eta(ints: _Integrals, kind: str, power: int, ta: np.ndarray, tb: np.ndarray) -> np.ndarray:
    return ta.T @ ints.eta(kind, power) @ tb


def block_matrices(basis: TwoCenterBasis, charge: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Dense Hamiltonian and overlap of one symmetry block."""
    ints = _integrals(basis)
    t, lam, r = basis.eta_transform, basis.lam, basis.r
    o_xi = ints.xi("O", lam)
    o_eta = _eta(ints, "O", lam, t, t)
    s = (r / 2) ** 3 * (np.kron(ints.xi("Q", lam), o_eta) - np.kron(o_xi, _eta(ints, "Q", lam, t, t)))
    kin = np.kron(ints.xi("K", lam), o_eta) + np.kron(o_xi, _eta(ints, "K", lam, t, t))
    h = (r / 4) * kin - (charge * r * r / 2) * np.kron(ints.xi("X", lam), o_eta)
    return 0.5 * (h + h.T), 0.5 * (s + s.T)


def solve_orbitals(basis: TwoCenterBasis, charges: tuple[float, float] = (1.0, 1.0),
                   n_states: int | None = None) -> OrbitalSet:
    """Eigenpairs of the two-center Coulomb problem in one symmetry block."""
    za, zb = charges
    if za != zb:
        raise TwoCenterError("only homonuclear charges are supported")
    h, s = block_matrices(basis, za)
    subset = None if n_states is None else (0, min(n_states, h.shape[0]) - 1)
    try:
        energies, vecs = linalg.eigh(h, s, subset_by_index=subset)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"two-center eigensolve failed for {basis.label} at R={basis.r}: {exc}") from exc
    return OrbitalSet(basis, energies, vecs, count_eta_nodes(basis, vecs), float(za))


def eta_factor(basis: TwoCenterBasis, coefficients: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Dominant eta-dependent factor of each orbital, sampled on ``eta``.

    The coefficient vector of an orbital is reshaped to (xi, eta) and its
    leading right singular vector is used as the angular factor.  For the
    separable exact problem that is the angular solution itself.
    """
    nxi, neta = basis.shape
    vals = (collocate(basis.eta_basis, eta) @ basis.eta_transform) * ((1.0 - eta**2) ** (0.5 * basis.lam))[:, None]
    c = coefficients.T.reshape(-1, nxi, neta)
    _, _, vt = np.linalg.svd(c, full_matrices=False)
    return vals @ vt[:, 0, :].T


def count_eta_nodes(basis: TwoCenterBasis, coefficients: np.ndarray, n_grid: int = 501) -> np.ndarray:
    """Interior sign changes of the eta factor on a uniform grid."""
    eta = np.linspace(-1.0, 1.0, n_grid)
    y = eta_factor(basis, coefficients, eta)
    counts = np.empty(y.shape[1], dtype=int)
    for j in range(y.shape[1]):
        col = y[:, j]
        signs = np.sign(col[np.abs(col) > 1e-8 * np.max(np.abs(col))])
        counts[j] = int(np.count_nonzero(signs[1:] != signs[:-1]))
    return counts


def filter_by_eta_nodes(orbitals: OrbitalSet, max_nodes: int) -> OrbitalSet:
    return orbitals.subset(np.flatnonzero(orbitals.eta_nodes <= max_nodes))


def orbital_values(orbitals: OrbitalSet, xi, eta) -> np.ndarray:
    """``w g`` (without the phi factor) on the product grid, shape (len(xi), len(eta), n)."""
    b = orbitals.basis
    xi, eta = np.atleast_1d(xi).astype(float), np.atleast_1d(eta).astype(float)
    vx = collocate(b.xi_basis, xi) * ((xi**2 - 1.0) ** (0.5 * b.lam))[:, None]
    ve = (collocate(b.eta_basis, eta) @ b.eta_transform) * ((1.0 - eta**2) ** (0.5 * b.lam))[:, None]
    c = orbitals.coefficients.reshape(b.shape[0], b.shape[1], -1)
    return np.einsum("ai,bj,ijn->abn", vx, ve, c, optimize=True)


@dataclass(frozen=True, eq=False)
class DipoleBlock:
    """Transition dipoles ``<bra_i| d |ket_j>`` between two orbital sets (bohr)."""

    bra: tuple[int, bool]
    ket: tuple[int, bool]
    component: str
    matrix: np.ndarray


def _sandwich(ca: np.ndarray, a_xi: np.ndarray, b_eta: np.ndarray, cb: np.ndarray, shape_a, shape_b) -> np.ndarray:
    """``ca^T (a_xi (x) b_eta) cb`` with orbitals reshaped to (xi, eta, n)."""
    cb3 = cb.reshape(shape_b[0], shape_b[1], -1)
    tmp = np.einsum("ij,jkn->ikn", a_xi, cb3, optimize=True)
    tmp = np.einsum("kl,iln->ikn", b_eta, tmp, optimize=True)
    return ca.T @ tmp.reshape(shape_a[0] * shape_a[1], -1)


def perpendicular_angular_factor(lam_a: int, lam_b: int) -> float:
    """phi integral of cos(phi) between the real functions of Lambda and Lambda +- 1."""
    if abs(lam_a - lam_b) != 1:
        return 0.0
    return 1.0 / math.sqrt(2.0) if min(lam_a, lam_b) == 0 else 0.5


def coupled(lam_a: int, g_a: bool, lam_b: int, g_b: bool, component: str) -> bool:
    if component not in ("parallel", "perpendicular"):
        raise TwoCenterError(f"unknown dipole component {component!r}")
    if g_a == g_b:
        return False
    return lam_a == lam_b if component == "parallel" else abs(lam_a - lam_b) == 1


def dipole_matrix(bra: OrbitalSet, ket: OrbitalSet, component: str) -> np.ndarray:
    """Dipole elements between two orbital sets; exactly zero when symmetry forbids."""
    ba, bb = bra.basis, ket.basis
    if abs(ba.r - bb.r) > 1e-12 or ba.box != bb.box or not np.array_equal(ba.xi_basis.knots.knots,
                                                                          bb.xi_basis.knots.knots):
        raise TwoCenterError("orbital sets must share R and box")
    if not coupled(ba.lam, ba.gerade, bb.lam, bb.gerade, component):
        return np.zeros((len(bra), len(ket)))
    ints = _integrals(ba)
    ta, tb = ba.eta_transform, bb.eta_transform
    pref = (ba.r / 2) ** 4
    if component == "parallel":
        p = ba.lam
        m = _sandwich(bra.coefficients, ints.xi("X3", p), _eta(ints, "E1", p, ta, tb), ket.coefficients, ba.shape, bb.shape)
        m -= _sandwich(bra.coefficients, ints.xi("X", p), _eta(ints, "E3", p, ta, tb), ket.coefficients, ba.shape, bb.shape)
        return pref * m
    # w_L w_(L+1) sqrt(s t) = (s t)^(L+1) with L the smaller Lambda
    p = min(ba.lam, bb.lam) + 1
    m = _sandwich(bra.coefficients, ints.xi("Q", p), _eta(ints, "O", p, ta, tb), ket.coefficients, ba.shape, bb.shape)
    m -= _sandwich(bra.coefficients, ints.xi("O", p), _eta(ints, "Q", p, ta, tb), ket.coefficients, ba.shape, bb.shape)
    return pref * perpendicular_angular_factor(ba.lam, bb.lam) * m


def dipole_blocks(orbital_sets: Sequence[OrbitalSet], component: str) -> list[DipoleBlock]:
    """Every symmetry-allowed block between distinct sets, bra earlier in the input."""
    sets = list(orbital_sets)
    for s in sets[1:]:
        if abs(s.r - sets[0].r) > 1e-12 or s.basis.box != sets[0].basis.box:
            raise TwoCenterError("orbital sets must share R and box")
    blocks = []
    for i, a in enumerate(sets):
        for b in sets[i + 1:]:
            if coupled(a.lam, a.gerade, b.lam, b.gerade, component):
                blocks.append(DipoleBlock((a.lam, a.gerade), (b.lam, b.gerade), component,
                                          dipole_matrix(a, b, component)))
    return blocks


def symmetry_blocks(component: str, lambda_max: int) -> list[tuple[int, bool]]:
    """Blocks reachable from sigma_g by repeated dipole steps of one orientation."""
    if component == "parallel":
        return [(0, True), (0, False)]
    if component == "perpendicular":
        return [(lam, lam % 2 == 0) for lam in range(lambda_max + 1)]
    raise TwoCenterError(f"unknown dipole component {component!r}")


def solve_system(r: float, component: str, config: TwoCenterConfig = TwoCenterConfig(), charge: float = 1.0,
                 blocks: Iterable[tuple[int, bool]] | None = None) -> list[OrbitalSet]:
    """Node-filtered orbital sets for every block one orientation couples."""
    blocks = symmetry_blocks(component, config.lambda_max) if blocks is None else blocks
    out = []
    for lam, g in blocks:
        orb = solve_orbitals(build_two_center_basis(r, lam, g, config), (charge, charge))
        out.append(filter_by_eta_nodes(orb, config.max_eta_nodes))
    return out
