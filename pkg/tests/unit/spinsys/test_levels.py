import numpy as np
import pytest

from muondemur.spinsys import (
    ContractViolationException,
    InvalidArgumentException,
    SpinSystem,
    breit_rabi_sweep,
    build_static_hamiltonian,
    diagonalize,
    level_diagram,
    muon_sector_frequencies,
    transition_table,
)


@pytest.fixture
def vacuum_like():
    return SpinSystem.isotropic(4500.0)


@pytest.fixture
def silicon():
    return SpinSystem.axial(67.6, 35.6, g_e=1.9999)


def test__static_hamiltonian__is_hermitian(silicon, vacuum_like):
    for sys in (silicon, vacuum_like):
        H = build_static_hamiltonian(sys, 100.0)
        np.testing.assert_allclose(H, H.conj().T)


def test__static_hamiltonian__negative_field_rejected(silicon):
    with pytest.raises(InvalidArgumentException):
        build_static_hamiltonian(silicon, -1.0)


def test__spin_system__isotropic_with_perpendicular_part_rejected():
    with pytest.raises(InvalidArgumentException):
        SpinSystem(A_par=4500.0, A_perp=1.0, hyperfine="isotropic")


def test__diagonalize__reconstructs_hamiltonian(silicon):
    H = build_static_hamiltonian(silicon, 138.1)
    diagram = diagonalize(H)
    np.testing.assert_allclose(diagram.reconstruct(), H, atol=1e-9)


def test__diagonalize__non_hermitian_rejected():
    matrix = np.zeros((4, 4), dtype=complex)
    matrix[0, 1] = 1.0
    with pytest.raises(ContractViolationException):
        diagonalize(matrix)


def test__transition_table__axial_muon_frequencies_match_closed_form(silicon):
    table = transition_table(silicon, 138.1)
    nu12, nu34 = muon_sector_frequencies(silicon, 138.1)
    assert table.nu(1, 2) == pytest.approx(nu12, abs=1e-6)
    assert table.nu(3, 4) == pytest.approx(nu34, abs=1e-6)


def test__transition_table__isotropic_resonance_near_3629_MHz(vacuum_like):
    table = transition_table(vacuum_like, 82.525)
    assert table.nu(3, 4) == pytest.approx(3629.0, rel=0.02)


def test__transition_table__isotropic_moment_is_half_the_electron_moment(vacuum_like):
    table = transition_table(vacuum_like, 82.5)
    assert table.gamma(3, 4) == pytest.approx(vacuum_like.gamma_e_MHz_per_mT / 2, rel=0.1)


def test__transition_table__order_of_labels_does_not_matter(silicon):
    table = transition_table(silicon, 140.0)
    assert table.nu(4, 1) == table.nu(1, 4)


def test__transition_table__rabi_frequency_and_drive_field_are_inverse(vacuum_like):
    table = transition_table(vacuum_like, 82.5)
    B1 = table.drive_field_for_rabi(3, 4, 6.95)
    assert table.rabi_frequency(3, 4, B1) == pytest.approx(6.95)


def test__transition_table__rabi_frequency_is_half_the_moment_times_the_drive(vacuum_like):
    table = transition_table(vacuum_like, 82.5)
    for B1 in (0.1, 0.95, 2.735):
        assert table.rabi_frequency(3, 4, B1) == pytest.approx(table.gamma(3, 4) * B1 / 2.0)
        assert table.rabi_frequency(3, 4, B1) == pytest.approx(vacuum_like.gamma_e_MHz_per_mT * B1 / 4.0, rel=0.1)


def test__breit_rabi_sweep__slope_near_resonance(vacuum_like):
    sweep = breit_rabi_sweep(vacuum_like, [82.4, 82.6])
    (_, low), (_, high) = sweep
    slope = (high.nu(3, 4) - low.nu(3, 4)) / 0.2
    assert slope == pytest.approx(-7.67, rel=0.05)


def test__breit_rabi_sweep__nu34_decreasing_between_60_and_90_mT(vacuum_like):
    sweep = breit_rabi_sweep(vacuum_like, np.arange(60.0, 90.5, 0.5))
    values = [table.nu(3, 4) for _, table in sweep]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))


def test__breit_rabi_sweep__energies_sum_to_zero(silicon):
    for diagram, _ in breit_rabi_sweep(silicon, [0.0, 50.0, 140.0]):
        assert np.sum(diagram.energies) == pytest.approx(0.0, abs=1e-9)


def test__breit_rabi_sweep__empty_list_rejected(silicon):
    with pytest.raises(InvalidArgumentException):
        breit_rabi_sweep(silicon, [])


def test__level_diagram__high_field_labels_are_product_states(silicon):
    diagram = level_diagram(silicon, 140.0)
    # labels 1 and 2 carry electron spin up
    for label in (1, 2):
        vector = diagram.vector(label)
        assert np.sum(np.abs(vector[:2]) ** 2) == pytest.approx(1.0, abs=1e-4)
