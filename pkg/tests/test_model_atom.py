import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfion.model_atom import (ModelAtomError, ModelPotentialSpec, RadialBasisConfig, alpha_from_ip,
                              build_alpha_curve, dipole_angular, ground_energy, h2_vertical_ip, potential_value,
                              radial_basis, radial_dipole, read_two_column, solve_radial)

# alpha(Ip = 0.6045) from bracketed root finding on the default radial basis
ALPHA_06045 = 0.144033375543


def test_potential_values():
    assert potential_value(ModelPotentialSpec(0.0), 2.0) == -0.5
    assert potential_value(ModelPotentialSpec(1.0), 1.0) == pytest.approx(-(1 + math.exp(-2)), abs=1e-15)
    assert potential_value(ModelPotentialSpec(-1.0), 1.0) == pytest.approx(-(1 - math.exp(-2)), abs=1e-15)


def test_potential_small_alpha_tends_to_coulomb():
    r = np.array([0.5, 1.0, 3.0])
    np.testing.assert_allclose(potential_value(ModelPotentialSpec(1e-6), r), -1 / r, rtol=1e-12)


def test_potential_domain():
    with pytest.raises(ModelAtomError):
        potential_value(ModelPotentialSpec(0.5), 0.0)
    with pytest.raises(ModelAtomError):
        ModelPotentialSpec(math.inf)


@pytest.mark.parametrize("ell, energy", [(0, -0.5), (1, -0.125), (2, -1 / 18)])
def test_hydrogen_levels(ell, energy):
    assert solve_radial(ModelPotentialSpec(0.0), ell).energies[0] == pytest.approx(energy, abs=1e-6)


def test_hydrogen_excited_s_states():
    e = solve_radial(ModelPotentialSpec(0.0), 0).energies
    np.testing.assert_allclose(e[:4], [-0.5 / n**2 for n in range(1, 5)], atol=1e-9)


def test_eigenstates_orthonormal_and_sorted():
    w = solve_radial(ModelPotentialSpec(0.3), 2)
    from sfion.model_atom import _operators
    s = _operators(w.basis).overlap
    g = w.coefficients.T @ s @ w.coefficients
    assert np.abs(g - np.eye(len(w))).max() < 1e-10
    assert np.all(np.diff(w.energies) >= 0)
    assert np.any(w.energies > 0)


def test_alpha_for_coulomb_ip():
    assert alpha_from_ip(0.5) == 0.0


def test_alpha_frozen_value_and_round_trip():
    a = alpha_from_ip(0.6045)
    assert a == pytest.approx(ALPHA_06045, abs=1e-10)
    assert -ground_energy(a) == pytest.approx(0.6045, abs=1e-9)


def test_alpha_sign_near_coulomb():
    assert alpha_from_ip(0.51) > 0
    assert alpha_from_ip(0.49) < 0


def test_alpha_out_of_range():
    with pytest.raises(ModelAtomError):
        alpha_from_ip(3.0)
    with pytest.raises(ModelAtomError):
        alpha_from_ip(0.1)
    with pytest.raises(ModelAtomError):
        alpha_from_ip(-0.2)


@settings(max_examples=5, deadline=None)
@given(ip=st.floats(0.3, 1.0))
def test_alpha_round_trip_property(ip):
    assert abs(-ground_energy(alpha_from_ip(ip)) - ip) < 1e-8


def test_ip_monotone_in_alpha():
    alphas = np.round(np.arange(-2.0, 2.0001, 0.1), 10)
    ips = [-ground_energy(a) for a in alphas]
    assert np.all(np.diff(ips) > 0)


def test_continuum_density_grows_with_box():
    small = radial_basis(RadialBasisConfig(box=100.0, n_splines=150))
    large = radial_basis(RadialBasisConfig(box=200.0, n_splines=300))
    count = lambda b: np.count_nonzero((w := solve_radial(ModelPotentialSpec(0.0), 0, b).energies) > 0)  # noqa: E731
    e_s = solve_radial(ModelPotentialSpec(0.0), 0, small).energies
    e_l = solve_radial(ModelPotentialSpec(0.0), 0, large).energies
    assert np.count_nonzero((e_l > 0) & (e_l < 1)) > np.count_nonzero((e_s > 0) & (e_s < 1))
    assert count(large) >= count(small)


def test_alpha_curve_shapes():
    const = build_alpha_curve([(1.0, 0.6), (1.5, 0.6), (2.0, 0.6)])
    assert np.ptp(const.alpha) < 1e-12
    empty = build_alpha_curve([])
    assert len(empty) == 0
    tab = h2_vertical_ip()
    sel = tab[(tab[:, 0] >= 1.0 - 1e-9) & (tab[:, 0] <= 2.2 + 1e-9)][::6]
    curve = build_alpha_curve(sel)
    assert np.all(np.diff(curve.ip) < 0)
    assert np.all(np.diff(curve.alpha) < 0)
    assert curve.alpha_at(float(sel[0, 0])) == curve.alpha[0]


def test_shipped_ip_table():
    tab = h2_vertical_ip()
    assert tab.shape[1] == 2 and tab[0, 0] <= 1.0 and tab[-1, 0] >= 2.2
    assert np.interp(1.4, tab[:, 0], tab[:, 1]) == pytest.approx(0.6045, abs=2e-4)


def test_read_two_column(tmp_path):
    p = tmp_path / "t.dat"
    p.write_text("# comment\n1.0, 2.0\n\n3.0 4.0  # trailing\n")
    np.testing.assert_array_equal(read_two_column(p), [[1.0, 2.0], [3.0, 4.0]])


def test_dipole_ground_to_2p_hydrogen():
    s = solve_radial(ModelPotentialSpec(0.0), 0)
    p = solve_radial(ModelPotentialSpec(0.0), 1)
    # <1s|z|2p0> = 128 sqrt(2)/243
    z = dipole_angular(0) * radial_dipole(s, p)[0, 0]
    assert abs(z) == pytest.approx(128 * math.sqrt(2) / 243, abs=1e-8)
