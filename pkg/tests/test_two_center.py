import numpy as np
import pytest

from sfion.h2plus_exact import angular_separation_constants, electronic_energy
from sfion.two_center import (TwoCenterConfig, TwoCenterError, block_matrices, build_two_center_basis,
                              count_eta_nodes, dipole_blocks, dipole_matrix, filter_by_eta_nodes, orbital_values,
                              solve_orbitals, solve_system, symmetry_blocks, xi_max_for)

# separated-equation energies at R = 2 (hartree, electronic)
SIGMA_G_R2 = -1.1026342144949
SIGMA_U_R2 = -0.6675343922024
PI_U_R2 = -0.4287718198959

SMALL = TwoCenterConfig(box=60.0, n_xi=70, order_xi=8, n_eta=16, order_eta=7)


@pytest.fixture(scope="module")
def r2_sets():
    return {(lam, g): solve_orbitals(build_two_center_basis(2.0, lam, g, SMALL))
            for lam, g in [(0, True), (0, False), (1, False), (1, True)]}


def test_oracle_matches_literature():
    assert electronic_energy(2.0) == pytest.approx(SIGMA_G_R2, abs=1e-11)


def test_oracle_angular_united_atom_limit():
    # p = 0: separation constants are l(l+1)
    np.testing.assert_allclose(angular_separation_constants(0.0, 0, 1, 20)[:3], [0, 6, 20], atol=1e-12)


@pytest.mark.parametrize("r, xi", [(1.4, 500.0), (2.2, 318.1818181818)])
def test_xi_max_mapping(r, xi):
    assert xi_max_for(r, 350.0) == pytest.approx(xi, rel=1e-10)
    cfg = TwoCenterConfig(box=350.0, n_xi=40, order_xi=6, geometric_count=10, n_eta=8, order_eta=4)
    b = build_two_center_basis(r, 0, True, cfg)
    assert b.xi_max == pytest.approx(xi, rel=1e-10)


def test_xi_max_halves_when_r_doubles():
    assert xi_max_for(3.0, 100.0) == pytest.approx(0.5 * xi_max_for(1.5, 100.0), rel=1e-15)


def test_box_must_exceed_r():
    with pytest.raises(TwoCenterError):
        build_two_center_basis(5.0, 0, True, TwoCenterConfig(box=4.0))


def test_heteronuclear_rejected():
    with pytest.raises(TwoCenterError):
        solve_orbitals(build_two_center_basis(2.0, 0, True, SMALL), (1.0, 2.0))


def test_energies_against_oracle(r2_sets):
    assert r2_sets[(0, True)].energies[0] == pytest.approx(SIGMA_G_R2, abs=1e-9)
    assert r2_sets[(0, False)].energies[0] == pytest.approx(SIGMA_U_R2, abs=1e-9)
    assert r2_sets[(1, False)].energies[0] == pytest.approx(PI_U_R2, abs=1e-9)


def test_excited_sigma_g_against_oracle(r2_sets):
    # 2s sigma_g has one quasi-radial node
    assert r2_sets[(0, True)].energies[1] == pytest.approx(electronic_energy(2.0, xi_nodes=1), abs=1e-8)


def test_orthonormal_and_ascending(r2_sets):
    for orb in r2_sets.values():
        _, s = block_matrices(orb.basis)
        c = orb.coefficients
        assert np.abs(c.T @ s @ c - np.eye(c.shape[1])).max() < 1e-10
        assert np.all(np.diff(orb.energies) >= 0)


def test_parity_of_orbitals(r2_sets):
    xi = np.array([1.3, 2.0])
    eta = np.array([0.35, -0.35])
    for (lam, g), orb in r2_sets.items():
        v = orbital_values(orb.subset(range(4)), xi, eta)
        sign = (1 if g else -1) * (-1) ** lam
        np.testing.assert_allclose(v[:, 1, :], sign * v[:, 0, :], atol=1e-12)


def test_cross_parity_overlap_vanishes(r2_sets):
    from sfion.two_center import _eta, _integrals
    g, u = r2_sets[(0, True)].basis, r2_sets[(0, False)].basis
    ints = _integrals(g)
    m = _eta(ints, "O", 0, g.eta_transform, u.eta_transform)
    assert np.abs(m).max() < 1e-12


def test_total_energy_ordering():
    for r in [0.6, 1.4, 3.0, 6.0]:
        g = solve_orbitals(build_two_center_basis(r, 0, True, SMALL), n_states=1)
        u = solve_orbitals(build_two_center_basis(r, 0, False, SMALL), n_states=1)
        assert g.energies[0] < u.energies[0]


def test_dissociation_limit():
    cfg = TwoCenterConfig(box=80.0, n_xi=80, order_xi=8, n_eta=20, order_eta=8)
    g = solve_orbitals(build_two_center_basis(12.0, 0, True, cfg), n_states=2)
    u = solve_orbitals(build_two_center_basis(12.0, 0, False, cfg), n_states=2)
    # total energies (with 1/R) tend to the H(1s) energy
    assert g.total_energies()[0] == pytest.approx(-0.5, abs=2e-3)
    assert u.total_energies()[0] == pytest.approx(-0.5, abs=2e-3)
    d = abs(dipole_matrix(g, u, "parallel")[0, 0])
    assert d == pytest.approx(6.0, rel=0.05)


def test_r1_4_energy_against_oracle():
    orb = solve_orbitals(build_two_center_basis(1.4, 0, True, SMALL), n_states=1)
    assert orb.energies[0] == pytest.approx(electronic_energy(1.4), abs=1e-9)


def test_box_independence():
    e = []
    for box in (250.0, 350.0):
        cfg = TwoCenterConfig(box=box, n_xi=120, order_xi=10, n_eta=16, order_eta=8)
        e.append(solve_orbitals(build_two_center_basis(2.0, 0, True, cfg), n_states=5).energies)
    assert np.abs(e[0] - e[1]).max() < 1e-8


def test_selection_rules(r2_sets):
    sg, su, pu, pg = (r2_sets[k] for k in [(0, True), (0, False), (1, False), (1, True)])
    assert np.abs(dipole_matrix(sg, su, "parallel")).max() > 0.1
    assert not np.any(dipole_matrix(sg, pu, "parallel"))
    assert np.abs(dipole_matrix(sg, pu, "perpendicular")).max() > 0.1
    assert not np.any(dipole_matrix(sg, su, "perpendicular"))
    assert not np.any(dipole_matrix(sg, pg, "perpendicular"))


def test_parallel_dipole_known_value(r2_sets):
    # <1s sigma_g| z |2p sigma_u> at R = 2 is 1.0500 in magnitude
    d = dipole_matrix(r2_sets[(0, True)], r2_sets[(0, False)], "parallel")[0, 0]
    assert abs(d) == pytest.approx(1.05, abs=5e-3)


def test_dipole_blocks_hermitian(r2_sets):
    sets = [r2_sets[(0, True)], r2_sets[(0, False)], r2_sets[(1, False)], r2_sets[(1, True)]]
    sizes = [len(s) for s in sets]
    off = np.concatenate([[0], np.cumsum(sizes)])
    for comp in ("parallel", "perpendicular"):
        full = np.zeros((off[-1], off[-1]))
        for blk in dipole_blocks(sets, comp):
            i = [(s.lam, s.gerade) for s in sets].index(blk.bra)
            j = [(s.lam, s.gerade) for s in sets].index(blk.ket)
            full[off[i]:off[i + 1], off[j]:off[j + 1]] = blk.matrix
            full[off[j]:off[j + 1], off[i]:off[i + 1]] = blk.matrix.T
        assert np.abs(full - full.conj().T).max() < 1e-10
        assert np.abs(full).max() > 0


def test_dipole_blocks_need_shared_geometry(r2_sets):
    other = solve_orbitals(build_two_center_basis(2.5, 0, False, SMALL), n_states=3)
    with pytest.raises(TwoCenterError):
        dipole_blocks([r2_sets[(0, True)], other], "parallel")


def test_eta_node_counts(r2_sets):
    sg = r2_sets[(0, True)]
    assert sg.eta_nodes[0] == 0
    pu = r2_sets[(1, False)]
    assert pu.eta_nodes[0] == 0
    # the 3d sigma_g-like state with one angular excitation has 2 eta nodes
    assert 2 in sg.eta_nodes[:6]
    np.testing.assert_array_equal(count_eta_nodes(sg.basis, sg.coefficients[:, :5]), sg.eta_nodes[:5])


def test_filter_by_eta_nodes(r2_sets):
    sg = r2_sets[(0, True)]
    top = int(sg.eta_nodes.max())
    assert top > 9
    kept = filter_by_eta_nodes(sg, 9)
    assert np.all(kept.eta_nodes <= 9)
    assert len(kept) == np.count_nonzero(sg.eta_nodes <= 9)
    assert len(filter_by_eta_nodes(sg, top)) == len(sg)
    assert len(filter_by_eta_nodes(sg, -1)) == 0


def test_node_filter_at_19_nodes():
    cfg = TwoCenterConfig(box=40.0, n_xi=20, order_xi=6, geometric_count=5, n_eta=30, order_eta=8)
    orb = solve_orbitals(build_two_center_basis(1.4, 0, True, cfg))
    assert orb.eta_nodes.max() > 19
    kept = filter_by_eta_nodes(orb, 19)
    assert 0 < len(kept) < len(orb)
    assert set(kept.eta_nodes) == set(n for n in orb.eta_nodes if n <= 19)


def test_symmetry_blocks():
    assert symmetry_blocks("parallel", 7) == [(0, True), (0, False)]
    assert symmetry_blocks("perpendicular", 3) == [(0, True), (1, False), (2, True), (3, False)]
    with pytest.raises(TwoCenterError):
        symmetry_blocks("diagonal", 3)


def test_solve_system_perpendicular():
    cfg = TwoCenterConfig(box=30.0, n_xi=30, order_xi=6, geometric_count=8, n_eta=10, order_eta=5, lambda_max=2)
    sets = solve_system(1.4, "perpendicular", cfg)
    assert [s.label for s in sets] == ["sigmag", "piu", "deltag"]
