import numpy as np
import pytest

from muondemur.spinsys import (
    SpinSystem,
    build_static_hamiltonian,
    frame_generator,
    rotating_frame_hamiltonian,
    transition_table,
)
from muondemur.spinsys.hamiltonian import lab_frame_hamiltonians, muon_drive_ratio
from muondemur.spinsys.operators import IX, IY, SX, SY


@pytest.fixture
def vacuum_like():
    return SpinSystem.isotropic(4500.0)


@pytest.fixture
def silicon():
    return SpinSystem.axial(67.58, 35.55, g_e=1.9999)


def drive_part(sys, nu1, phase=0.0, sense=1):
    return rotating_frame_hamiltonian(sys, 80.0, 3600.0, nu1=nu1, phase=phase, sense=sense) - (
        rotating_frame_hamiltonian(sys, 80.0, 3600.0, sense=sense)
    )


def test__rotating_frame__isotropic_drive_couples_electron_and_muon(vacuum_like):
    ratio = muon_drive_ratio(vacuum_like)
    np.testing.assert_allclose(drive_part(vacuum_like, 2.0), 2.0 * (SX - ratio * IX), atol=1e-12)
    np.testing.assert_allclose(
        drive_part(vacuum_like, 2.0, phase=np.pi / 2, sense=-1), -2.0 * (SY - ratio * IY), atol=1e-12
    )


def test__rotating_frame__axial_drive_acts_on_the_electron_only(silicon):
    np.testing.assert_allclose(drive_part(silicon, 2.0), 2.0 * SX, atol=1e-12)


def test__rotating_frame__generator_commutes_with_static_hamiltonian(silicon, vacuum_like):
    for sys in (silicon, vacuum_like):
        H0 = build_static_hamiltonian(sys, 100.0)
        F = frame_generator(sys)
        np.testing.assert_allclose(H0 @ F - F @ H0, 0.0, atol=1e-9)


def test__rotating_frame__isotropic_splitting_on_resonance_is_the_calibrated_rabi_frequency(vacuum_like):
    table = transition_table(vacuum_like, 82.525)
    B1 = table.drive_field_for_rabi(3, 4, 6.95)
    H = rotating_frame_hamiltonian(
        vacuum_like, 82.525, table.nu(3, 4), nu1=vacuum_like.drive_strength(B1), sense=-1
    )
    energies = np.linalg.eigvalsh(H)
    gaps = np.abs(energies[:, None] - energies[None, :])
    assert np.min(np.abs(gaps - 6.95)) < 6.95 * 1e-3


def test__lab_frame__drive_carries_the_muon_zeeman_coupling(vacuum_like):
    times = np.array([0.0, 0.125])
    stack = lab_frame_hamiltonians(vacuum_like, 80.0, 2.0, 1.5, 0.0, times)
    static = build_static_hamiltonian(vacuum_like, 80.0)
    expected = 2.0 * 1.5 * (SX - muon_drive_ratio(vacuum_like) * IX)
    np.testing.assert_allclose(stack[0] - static, expected, atol=1e-12)
    np.testing.assert_allclose(stack[1] - static, 0.0, atol=1e-12)
