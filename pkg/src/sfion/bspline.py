"""One-dimensional B-spline spaces, Gauss-Legendre quadrature and Galerkin assembly.

Everything here is indexed the usual way: a knot vector of length ``n + k``
carries ``n`` splines of order ``k`` (degree ``k - 1``).  Boundary conditions
are imposed by removing the first and/or last spline, which are the only
splines that do not vanish at the respective end of an open knot vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg


class BSplineError(ValueError):
    """Raised for inconsistent knot or basis parameters."""


@dataclass(frozen=True, eq=False)
class KnotSequence:
    """Open knot vector with ``order``-fold end knots.

    Attributes
    ----------
    knots : ndarray
        Full knot vector, nondecreasing, length ``n_splines + order``.
    order : int
        Spline order ``k`` (``k = 4`` are cubic splines).
    geometric_count : int
        Number of leading intervals whose widths grow geometrically.
    progression : float
        Growth factor of the geometric part.
    """

    knots: np.ndarray
    order: int
    geometric_count: int = 0
    progression: float = 1.0

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        knots.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        if self.order < 1:
            raise BSplineError("order must be >= 1")
        if knots.ndim != 1 or knots.size < 2 * self.order:
            raise BSplineError("knot vector too short for the requested order")
        if np.any(np.diff(knots) < 0):
            raise BSplineError("knots must be nondecreasing")

    @property
    def n_splines(self) -> int:
        return self.knots.size - self.order

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)

    @property
    def x_min(self) -> float:
        return float(self.knots[0])

    @property
    def x_max(self) -> float:
        return float(self.knots[-1])

    @property
    def interval_widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)


def build_knots(n_splines: int, order: int, x_min: float, x_max: float,
                geometric_count: int = 0, g: float = 1.0) -> KnotSequence:
    """Open knot vector whose first intervals grow geometrically.

    The interior of ``[x_min, x_max]`` is cut into ``n_splines - order + 1``
    intervals.  Interval ``i`` has width ``h * g**min(i, geometric_count)``:
    the first ``geometric_count`` widths form a progression with ratio ``g``
    and every later interval keeps the width the progression reached.  The
    first width ``h`` is fixed by the total span.
    """
    if order < 2:
        raise BSplineError("order must be >= 2")
    if n_splines <= order:
        raise BSplineError("need n_splines > order")
    if not x_max > x_min:
        raise BSplineError("need x_max > x_min")
    if g < 1.0:
        raise BSplineError("progression factor must be >= 1")
    n_intervals = n_splines - order + 1
    if geometric_count < 0 or geometric_count > n_intervals:
        raise BSplineError(
            f"geometric_count={geometric_count} exceeds the {n_intervals} available intervals")

    exponents = np.minimum(np.arange(n_intervals), geometric_count)
    widths = np.power(g, exponents)
    widths *= (x_max - x_min) / widths.sum()
    inner = x_min + np.concatenate(([0.0], np.cumsum(widths)))
    inner[-1] = x_max
    knots = np.concatenate((np.full(order - 1, x_min), inner, np.full(order - 1, x_max)))
    return KnotSequence(knots, order, geometric_count, g)


def uniform_knots(n_splines: int, order: int, x_min: float, x_max: float) -> KnotSequence:
    return build_knots(n_splines, order, x_min, x_max, 0, 1.0)


@dataclass(frozen=True, eq=False)
class BSplineBasis:
    """A knot sequence plus zero-boundary flags.

    ``drop_first``/``drop_last`` remove the spline that is nonzero at the
    left/right end, which forces every function of the space to vanish there.
    Indices used by the rest of the package are *active* indices, i.e. they
    count only the retained splines.
    """

    knots: KnotSequence
    drop_first: bool = False
    drop_last: bool = False
    active: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.knots.n_splines
        lo = 1 if self.drop_first else 0
        hi = n - 1 if self.drop_last else n
        if hi <= lo:
            raise BSplineError("boundary conditions remove every spline")
        active = np.arange(lo, hi)
        active.setflags(write=False)
        object.__setattr__(self, "active", active)

    @property
    def order(self) -> int:
        return self.knots.order

    @property
    def size(self) -> int:
        return self.active.size

    @property
    def x_min(self) -> float:
        return self.knots.x_min

    @property
    def x_max(self) -> float:
        return self.knots.x_max

    def with_boundary(self, drop_first: bool, drop_last: bool) -> "BSplineBasis":
        return BSplineBasis(self.knots, drop_first, drop_last)


def _find_spans(t: np.ndarray, k: int, x: np.ndarray, side: str) -> np.ndarray:
    n = t.size - k
    if side == "right":
        span = np.searchsorted(t, x, side="right") - 1
    else:
        span = np.searchsorted(t, x, side="left") - 1
    return np.clip(span, k - 1, n - 1)


def _spline_table(t: np.ndarray, k: int, x: np.ndarray, span: np.ndarray, deriv: int) -> np.ndarray:
    """Values (and optionally first derivatives) of the k splines alive on ``span``.

    Returns an array of shape ``(deriv + 1, len(x), k)``; column ``j`` belongs
    to spline ``span - k + 1 + j``.
    """
    npts = x.size
    # Cox-de Boor, building order 1..k in place (NURBS book A2.2, vectorised)
    vals = np.zeros((npts, k))
    vals[:, 0] = 1.0
    left = np.zeros((npts, k))
    right = np.zeros((npts, k))
    lower = None
    for j in range(1, k):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        if j == k - 1:
            lower = vals[:, :k - 1].copy()
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            with np.errstate(divide="ignore", invalid="ignore"):
                temp = np.where(denom > 0, vals[:, r] / denom, 0.0)
            vals[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        vals[:, j] = saved
    if deriv == 0:
        return vals[None]
    if k == 1:
        return np.stack((vals, np.zeros_like(vals)))
    # derivative from the order k-1 values: B'_{i,k} = (k-1)[B_{i,k-1}/(t_{i+k-1}-t_i) - B_{i+1,k-1}/(t_{i+k}-t_{i+1})]
    der = np.zeros((npts, k))
    first = span - k + 1
    for j in range(k):
        i = first + j
        if j >= 1:
            d = t[i + k - 1] - t[i]
            with np.errstate(divide="ignore", invalid="ignore"):
                der[:, j] += np.where(d > 0, lower[:, j - 1] / d, 0.0)
        if j <= k - 2:
            d = t[i + k] - t[i + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                der[:, j] -= np.where(d > 0, lower[:, j] / d, 0.0)
    der *= k - 1
    return np.stack((vals, der))


def collocate(basis: BSplineBasis, x, deriv: int = 0, side: str = "right"):
    """Dense collocation matrix of the active splines at points ``x``.

    Returns shape ``(len(x), basis.size)``, or ``(2, len(x), basis.size)``
    with values and first derivatives when ``deriv == 1``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, k = basis.knots.knots, basis.order
    if np.any(x < t[0]) or np.any(x > t[-1]):
        raise BSplineError("evaluation point outside the spline domain")
    span = _find_spans(t, k, x, side)
    table = _spline_table(t, k, x, span, deriv)
    full = np.zeros((deriv + 1, x.size, basis.knots.n_splines))
    rows = np.arange(x.size)[:, None]
    cols = span[:, None] - k + 1 + np.arange(k)[None, :]
    for d in range(deriv + 1):
        full[d, rows, cols] = table[d]
    out = full[:, :, basis.active]
    return out[0] if deriv == 0 else out


def eval_splines(basis: BSplineBasis, x: float, side: str = "right") -> list[tuple[int, float]]:
    """Nonzero active splines at a single point as ``(index, value)`` pairs."""
    x = float(x)
    t, k = basis.knots.knots, basis.order
    if not (t[0] <= x <= t[-1]):
        raise BSplineError(f"x={x} outside [{t[0]}, {t[-1]}]")
    span = _find_spans(t, k, np.array([x]), side)
    vals = _spline_table(t, k, np.array([x]), span, 0)[0, 0]
    first = int(span[0]) - k + 1
    lookup = {int(full): pos for pos, full in enumerate(basis.active)}
    out = []
    for j in range(k):
        pos = lookup.get(first + j)
        if pos is not None and vals[j] > 0.0:
            out.append((pos, float(vals[j])))
    return out


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Gauss-Legendre nodes and weights, one row per nonempty knot interval."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.nodes.ravel()

    @property
    def flat_weights(self) -> np.ndarray:
        return self.weights.ravel()


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def gauss_rule(basis: BSplineBasis | KnotSequence, points_per_interval: int | None = None) -> QuadratureRule:
    knots = basis.knots if isinstance(basis, BSplineBasis) else basis
    if points_per_interval is None:
        points_per_interval = knots.order
    if points_per_interval < 1:
        raise BSplineError("points_per_interval must be >= 1")
    x, w = np.polynomial.legendre.leggauss(points_per_interval)
    bp = knots.breakpoints
    a, b = bp[:-1, None], bp[1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    weights = 0.5 * (b - a) * w[None, :]
    return QuadratureRule(nodes, weights)


@dataclass(frozen=True, eq=False)
class SymmetricBandedMatrix:
    """Symmetric matrix kept in LAPACK lower-band storage.

    ``bands[i - j, j] == A[i, j]`` for ``0 <= i - j <= bandwidth``, which is
    the layout ``scipy.linalg.eig_banded`` and ``cholesky_banded`` expect
    with ``lower=True``.
    """

    bands: np.ndarray

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    @property
    def shape(self) -> tuple[int, int]:
        n = self.bands.shape[1]
        return n, n

    @classmethod
    def from_dense(cls, a: np.ndarray, bandwidth: int) -> "SymmetricBandedMatrix":
        n = a.shape[0]
        bands = np.zeros((bandwidth + 1, n))
        for d in range(bandwidth + 1):
            bands[d, :n - d] = np.diagonal(a, -d)
        return cls(bands)

    def to_dense(self) -> np.ndarray:
        n = self.shape[0]
        a = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            diag = self.bands[d, :n - d]
            a += np.diag(diag, -d)
            if d:
                a += np.diag(diag, d)
        return a

    def cholesky(self) -> np.ndarray:
        return linalg.cholesky_banded(self.bands, lower=True)


def _weighted_products(values_a, values_b, weights, wfun) -> np.ndarray:
    return (values_a * (weights * wfun)[:, None]).T @ values_b


def assemble_dense(basis_a: BSplineBasis, rule: QuadratureRule,
                   weight: Callable[[np.ndarray], np.ndarray] | float = 1.0,
                   deriv: int = 0, basis_b: BSplineBasis | None = None) -> np.ndarray:
    """Galerkin matrix ``M[i, j] = int w(x) B_i^(d)(x) B_j^(d)(x) dx``.

    ``basis_b`` may be a second basis over the same knots (different
    boundary flags) to build rectangular coupling matrices.
    """
    x = rule.points
    w = rule.flat_weights
    wfun = np.broadcast_to(weight(x) if callable(weight) else np.asarray(weight, float), x.shape)
    if not np.all(np.isfinite(wfun)):
        raise FloatingPointError("local operator not finite at a quadrature node")
    va = collocate(basis_a, x, deriv=deriv)
    va = va[deriv] if deriv else va
    if basis_b is None:
        vb = va
    else:
        if basis_b.knots is not basis_a.knots and not np.array_equal(basis_b.knots.knots, basis_a.knots.knots):
            raise BSplineError("coupled bases must share their knots")
        vb = collocate(basis_b, x, deriv=deriv)
        vb = vb[deriv] if deriv else vb
    return _weighted_products(va, vb, w, wfun)


def assemble_matrix(basis: BSplineBasis, rule: QuadratureRule,
                    local_operator: Callable[[np.ndarray], np.ndarray] | float = 1.0,
                    deriv: int = 0) -> SymmetricBandedMatrix:
    """Assemble the symmetric banded Galerkin matrix of a weight function."""
    dense = assemble_dense(basis, rule, local_operator, deriv)
    return SymmetricBandedMatrix.from_dense(0.5 * (dense + dense.T), basis.order - 1)
