"""Spectral time propagation in a field-free eigenbasis (length gauge, dipole approximation).

The state is expanded as ``psi(t) = sum_j c_j(t) |j>`` over field-free
eigenstates.  With the electron charge -1 the interaction is ``+F(t) z``, so

    i dc/dt = (E + F(t) Z) c.

Integration is done in the interaction picture ``c = exp(-i E t) b``, which
makes field-free evolution exact and leaves only the coupling to resolve.
The complex amplitudes ``b`` are handed to the integrator as one real vector
of interleaved (Re, Im) pairs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from . import model_atom as ma
from .two_center import OrbitalSet, dipole_matrix

log = logging.getLogger(__name__)


class PropagationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CouplingBlock:
    """``Z[rows, cols] = matrix`` and, implicitly, the transpose below the diagonal."""

    rows: slice
    cols: slice
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class FieldFreeBasis:
    """Field-free states of one system at fixed geometry plus its dipole coupling.

    ``labels[i]`` is the symmetry label of state ``i`` (``"l=3"``, ``"pi_u"``
    style) and ``index[i]`` its rank within that block.  States of one block
    are contiguous, described by ``blocks``.
    """

    energies: np.ndarray
    labels: tuple[str, ...]
    index: np.ndarray
    blocks: tuple[tuple[str, slice], ...]
    couplings: tuple[CouplingBlock, ...]
    threshold: float = 0.0
    cutoff: float = 10.0
    component: str = "parallel"

    def __len__(self):
        return self.energies.size

    @property
    def block_labels(self) -> list[str]:
        return [name for name, _ in self.blocks]

    def state(self, label: str, index: int = 0) -> int:
        for name, sl in self.blocks:
            if name == label:
                if not 0 <= index < sl.stop - sl.start:
                    raise PropagationError(f"{label} has no state {index}")
                return sl.start + index
        raise PropagationError(f"no block {label!r}; have {self.block_labels}")

    def dense_dipole(self) -> np.ndarray:
        """Full coupling matrix, for tests and small systems only."""
        z = np.zeros((len(self), len(self)))
        for c in self.couplings:
            z[c.rows, c.cols] = c.matrix
            z[c.cols, c.rows] = c.matrix.T
        return z

    def apply_dipole(self, c: np.ndarray) -> np.ndarray:
        """``Z @ c`` for complex ``c`` using only the stored blocks."""
        out = np.zeros_like(c)
        cr = c.view(np.float64).reshape(-1, 2)
        outr = out.view(np.float64).reshape(-1, 2)
        for blk in self.couplings:
            outr[blk.rows] += blk.matrix @ cr[blk.cols]
            outr[blk.cols] += blk.matrix.T @ cr[blk.rows]
        return out


def _assemble(names: Sequence[str], energies: Sequence[np.ndarray], pairs, threshold: float, cutoff: float,
              component: str) -> FieldFreeBasis:
    offsets = np.concatenate([[0], np.cumsum([e.size for e in energies])]).astype(int)
    blocks = tuple((n, slice(int(offsets[i]), int(offsets[i + 1]))) for i, n in enumerate(names))
    couplings = []
    for i, j, m in pairs:
        if m.shape != (energies[i].size, energies[j].size):
            raise PropagationError(f"coupling {names[i]}-{names[j]} has shape {m.shape}")
        if m.size:
            couplings.append(CouplingBlock(blocks[i][1], blocks[j][1], np.ascontiguousarray(m)))
    labels = tuple(n for n, e in zip(names, energies) for _ in range(e.size))
    index = np.concatenate([np.arange(e.size) for e in energies]) if names else np.zeros(0, int)
    return FieldFreeBasis(np.concatenate(energies) if names else np.zeros(0), labels, index, blocks,
                          tuple(couplings), float(threshold), float(cutoff), component)


def atom_field_free_basis(alpha: float, ell_max: int = 12, cutoff: float = 10.0,
                          basis=None, threshold: float = 0.0) -> FieldFreeBasis:
    """Model-atom partial waves ``0..ell_max`` with m = 0 and Delta l = +-1 coupling.

    States with energy above ``threshold + cutoff`` are discarded.
    """
    if ell_max < 0:
        raise PropagationError("ell_max must be >= 0")
    if cutoff < 0:
        raise PropagationError("cutoff must be >= 0")
    spec = ma.ModelPotentialSpec(alpha)
    waves = [ma.solve_radial(spec, ell, basis) for ell in range(ell_max + 1)]
    return atom_basis_from_waves(waves, cutoff, threshold)


def atom_basis_from_waves(waves: Sequence[ma.RadialEigenbasis], cutoff: float = 10.0,
                          threshold: float = 0.0) -> FieldFreeBasis:
    """Field-free basis from partial waves ``ell = 0, 1, ...`` sharing one radial basis."""
    kept = []
    for w in waves:
        keep = w.energies <= threshold + cutoff
        kept.append(ma.RadialEigenbasis(w.ell, w.alpha, w.energies[keep], w.coefficients[:, keep], w.basis))
    pairs = [(l, l + 1, ma.dipole_angular(l) * ma.radial_dipole(kept[l], kept[l + 1]))
             for l in range(len(kept) - 1)]
    return _assemble([f"l={w.ell}" for w in kept], [w.energies for w in kept], pairs,
                     threshold, cutoff, "parallel")


def molecular_field_free_basis(orbital_sets: Sequence[OrbitalSet], component: str, cutoff: float = 10.0,
                               threshold: float = 0.0) -> FieldFreeBasis:
    """Two-center orbital sets coupled by the dipole component of one orientation."""
    if not orbital_sets:
        raise PropagationError("no orbital sets given")
    if cutoff < 0:
        raise PropagationError("cutoff must be >= 0")
    sets = [o.subset(np.flatnonzero(o.energies <= threshold + cutoff)) for o in orbital_sets]
    pairs = []
    for i, a in enumerate(sets):
        for j in range(i + 1, len(sets)):
            b = sets[j]
            m = dipole_matrix(a, b, component)
            if np.any(m):
                pairs.append((i, j, m))
    if len(sets) > 1 and not pairs:
        raise PropagationError(f"no {component} dipole blocks between the given symmetries")
    names = [o.label for o in sets]
    return _assemble(names, [o.energies for o in sets], pairs, threshold, cutoff, component)


def two_level_basis(e1: float, e2: float, d: float) -> FieldFreeBasis:
    """Two states coupled by the dipole element ``d``."""
    return _assemble(["a", "b"], [np.array([e1]), np.array([e2])], [(0, 1, np.array([[d]]))], 0.0, np.inf,
                     "parallel")


@dataclass(frozen=True, eq=False)
class WavefunctionExpansion:
    """Schrodinger-picture amplitudes at time ``t``."""

    amplitudes: np.ndarray
    t: float
    n_steps: int = 0
    n_evaluations: int = 0

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.populations))

    @property
    def norm_defect(self) -> float:
        return abs(self.norm - 1.0)


def initial_expansion(basis: FieldFreeBasis, label: str | None = None, index: int = 0,
                      t: float = 0.0) -> WavefunctionExpansion:
    """All population in one state; default is the lowest state of the first block."""
    c = np.zeros(len(basis), dtype=complex)
    c[basis.state(label if label is not None else basis.blocks[0][0], index)] = 1.0
    return WavefunctionExpansion(c, t)


@dataclass(frozen=True)
class TimeReversed:
    """Field ``F(-t)`` on the mirrored interval; used for time-reversal checks."""

    pulse: object

    @property
    def t_start(self) -> float:
        return -self.pulse.t_end

    @property
    def t_end(self) -> float:
        return -self.pulse.t_start

    def field(self, t):
        return self.pulse.field(-np.asarray(t, dtype=float))

    def field_scalar(self, t: float) -> float:
        return _field_scalar(self.pulse)(-t)


def _field_scalar(pulse):
    f = getattr(pulse, "field_scalar", None)
    return f if f is not None else (lambda t: float(pulse.field(t)))


def propagate(basis: FieldFreeBasis, pulse, initial: WavefunctionExpansion | str | None = None,
              rel_tol: float = 1e-8, abs_tol: float = 1e-12, t_span: tuple[float, float] | None = None,
              method: str = "DOP853", max_step: float = np.inf) -> WavefunctionExpansion:
    """Integrate the amplitudes through ``pulse`` (anything with ``field``, ``t_start``, ``t_end``).

    ``t_span`` defaults to the pulse support; a decreasing span integrates
    backward in time.  The initial expansion is taken at ``t_span[0]``.
    """
    if not 0 < rel_tol <= 1e-4:
        raise PropagationError("rel_tol must lie in (0, 1e-4]")
    if t_span is None:
        t_span = (pulse.t_start, pulse.t_end)
    t0, t1 = map(float, t_span)
    if initial is None or isinstance(initial, str):
        initial = initial_expansion(basis, initial, t=t0)
    c0 = np.asarray(initial.amplitudes, dtype=complex)
    if c0.shape != (len(basis),):
        raise PropagationError("initial amplitudes do not match the basis")
    e = basis.energies
    f = _field_scalar(pulse)
    b0 = np.exp(1j * e * t0) * c0

    def rhs(t, y):
        ft = f(t)
        if ft == 0.0:
            return np.zeros_like(y)
        ph = np.exp(-1j * e * t)
        zc = basis.apply_dipole(ph * y.view(np.complex128))
        return (-1j * ft * np.conj(ph) * zc).view(np.float64)

    if t1 == t0:
        return WavefunctionExpansion(c0.copy(), t1)
    sol = integrate.solve_ivp(rhs, (t0, t1), b0.view(np.float64).copy(), method=method, rtol=rel_tol,
                              atol=abs_tol, max_step=max_step)
    if sol.status != 0:
        raise PropagationError(f"integration stopped at t={sol.t[-1]:.6g}: {sol.message}")
    b1 = sol.y[:, -1].copy().view(np.complex128)
    return WavefunctionExpansion(np.exp(-1j * e * t1) * b1, t1, sol.t.size - 1, sol.nfev)


@dataclass(frozen=True)
class YieldRecord:
    r: float | None
    orientation: str
    intensity: float
    n_cycles: int
    yield_ion: float
    norm_defect: float
    bound: dict = field(default_factory=dict)


def ionization_yield(final: WavefunctionExpansion, basis: FieldFreeBasis, r: float | None = None,
                     orientation: str = "parallel", intensity: float = 0.0, n_cycles: int = 0) -> YieldRecord:
    """Continuum population (energy above threshold) and bound populations by block."""
    pop = final.populations
    free = basis.energies > basis.threshold
    bound = {}
    for name, sl in basis.blocks:
        p = pop[sl][~free[sl]]
        if p.size:
            bound[name] = float(p.sum())
    return YieldRecord(r, orientation, float(intensity), int(n_cycles), float(pop[free].sum()),
                       final.norm_defect, bound)


def photoelectron_spectrum(final: WavefunctionExpansion, basis: FieldFreeBasis,
                           bin_width: float) -> tuple[np.ndarray, np.ndarray]:
    """Histogram ``(edges, density)`` of continuum population versus energy above threshold.

    ``sum(density * bin_width)`` equals the ionization yield.
    """
    if not bin_width > 0:
        raise PropagationError("bin width must be positive")
    free = basis.energies > basis.threshold
    energies = basis.energies[free] - basis.threshold
    pop = final.populations[free]
    if energies.size == 0 or not np.any(pop > 0):
        return np.zeros(1), np.zeros(0)
    n_bins = max(1, int(math.ceil(energies.max() / bin_width)))
    edges = np.arange(n_bins + 1) * bin_width
    idx = np.minimum((energies // bin_width).astype(int), n_bins - 1)
    hist = np.bincount(idx, weights=pop, minlength=n_bins)
    return edges, hist / bin_width
