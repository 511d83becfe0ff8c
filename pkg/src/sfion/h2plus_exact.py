"""High-precision one-electron two-center energies from the separated equations.

The homonuclear problem separates in prolate spheroidal coordinates.  With
``p**2 = -E R**2 / 2`` the angular equation is solved by diagonalizing in
normalized associated Legendre functions, and the quasi-radial equation is
integrated outward from xi = 1 at tight tolerance; the energy is the ``p``
at which the growing solution vanishes.  Nothing here touches the spline
machinery, so it serves as an independent check on the Galerkin solver.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, linalg, optimize


def angular_separation_constants(p: float, lam: int, eta_parity: int, lmax: int = 80) -> np.ndarray:
    """Separation constants A (ascending) of the angular equation.

    ``eta_parity`` is +1 for functions even in eta and -1 for odd ones.
    """
    ls = np.arange(lam, lmax + 2)
    off = np.sqrt(((ls[:-1] + 1) ** 2 - lam**2) / ((2 * ls[:-1] + 1) * (2 * ls[:-1] + 3)))
    eta = np.diag(off, 1) + np.diag(off, -1)
    eta2 = (eta @ eta)[:-1, :-1]
    ls = ls[:-1]
    keep = ((ls - lam) % 2 == 0) if eta_parity > 0 else ((ls - lam) % 2 == 1)
    m = np.diag((ls * (ls + 1)).astype(float)) - p * p * eta2
    m = m[np.ix_(keep, keep)]
    return linalg.eigvalsh(m)


def _radial_end_value(p: float, a_sep: float, lam: int, z: float, r: float, xi_end: float) -> float:
    """u(xi_end) * exp(-p xi_end) for X = (xi^2-1)^(lam/2) u, u(1) = 1."""
    q0 = lam * (lam + 1) - a_sep + 2 * z * r - p * p
    dq0 = 2 * z * r - 2 * p * p
    u1 = -q0 / (2 * (lam + 1))
    u2 = -((2 * (lam + 1) + q0) * u1 + dq0) / (2 * (lam + 2))
    d = 1e-7
    y0 = [1.0 + u1 * d + 0.5 * u2 * d * d, u1 + u2 * d]

    def rhs(xi, y):
        q = lam * (lam + 1) - a_sep + 2 * z * r * xi - p * p * xi * xi
        # log-scaled amplitude would be cleaner; the range here stays well inside double precision
        return [y[1], -(2 * (lam + 1) * xi * y[1] + q * y[0]) / (xi * xi - 1.0)]

    sol = integrate.solve_ivp(rhs, (1.0 + d, xi_end), y0, method="DOP853", rtol=1e-13, atol=1e-300)
    return float(sol.y[0, -1] * math.exp(-p * xi_end))


def _count_sign_changes(p, a_sep, lam, z, r, xi_end, n=4000):
    q0 = lam * (lam + 1) - a_sep + 2 * z * r - p * p
    dq0 = 2 * z * r - 2 * p * p
    u1 = -q0 / (2 * (lam + 1))
    u2 = -((2 * (lam + 1) + q0) * u1 + dq0) / (2 * (lam + 2))
    d = 1e-7

    def rhs(xi, y):
        q = lam * (lam + 1) - a_sep + 2 * z * r * xi - p * p * xi * xi
        return [y[1], -(2 * (lam + 1) * xi * y[1] + q * y[0]) / (xi * xi - 1.0)]

    grid = np.linspace(1.0 + d, xi_end, n)
    sol = integrate.solve_ivp(rhs, (1.0 + d, xi_end), [1.0 + u1 * d + 0.5 * u2 * d * d, u1 + u2 * d],
                              method="DOP853", rtol=1e-10, atol=1e-300, t_eval=grid)
    return int(np.count_nonzero(np.diff(np.sign(sol.y[0])) != 0))


def electronic_energy(r: float, lam: int = 0, gerade: bool = True, xi_nodes: int = 0,
                      eta_index: int = 0, z: float = 1.0) -> float:
    """Electronic energy (hartree, no 1/R) of a one-electron homonuclear state.

    The state is fixed by its axial quantum number ``lam``, inversion parity,
    the number of quasi-radial nodes and the rank of its angular separation
    constant within the given eta parity.
    """
    eta_parity = (1 if gerade else -1) * (-1) ** lam

    def a_of(p):
        return angular_separation_constants(p, lam, eta_parity)[eta_index]

    def mismatch(p):
        xi_end = 1.0 + 45.0 / p
        return _radial_end_value(p, a_of(p), lam, z, r, xi_end)

    def nodes(p):
        xi_end = 1.0 + 45.0 / p
        return _count_sign_changes(p, a_of(p), lam, z, r, xi_end)

    # p grows with binding: scan upward for the bracket where the node count drops to xi_nodes
    ps = np.geomspace(0.05, 6.0 * z * max(r, 0.5), 80)
    prev_p, prev_n = None, None
    for p in ps:
        n = nodes(p)
        if prev_n is not None and prev_n > xi_nodes >= n:
            lo, hi = prev_p, p
            break
        prev_p, prev_n = p, n
    else:
        raise RuntimeError("no bracket found for the requested state")
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo * f_hi > 0:
        # refine the bracket on a finer scan inside the interval
        for p in np.linspace(lo, hi, 60)[1:-1]:
            if mismatch(p) * f_lo < 0:
                hi = p
                break
            lo = p
    p_star = optimize.brentq(mismatch, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return -2.0 * p_star**2 / r**2
