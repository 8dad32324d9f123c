import numpy as np
import pytest

from muondemur.analytic import (
    analytic_tf_trace,
    crossing_fields,
    demur_eigenfrequencies,
    demur_sweep,
    dq_shift_curve,
    resonance_field,
    tilted_angles,
)
from muondemur.analytic.tilted import first_frame_residual, tilted_frame
from muondemur.dynamics import spectral_lines
from muondemur.spinsys import InvalidArgumentException, SpinSystem, transition_table
from muondemur.spinsys.levels import muon_sector_frequencies

NU_UW = 3900.0


@pytest.fixture
def silicon():
    return SpinSystem.axial(67.58, 35.55, g_e=1.9999)


def test__demur_eigenfrequencies__no_drive_gives_static_muon_frequencies(silicon):
    for B0 in (135.0, 139.0, 142.0):
        point = demur_eigenfrequencies(silicon, B0, NU_UW, 0.0)
        nu12, nu34 = muon_sector_frequencies(silicon, B0)
        assert point.nu12_tr == pytest.approx(nu12, abs=1e-9)
        assert point.nu34_tr == pytest.approx(nu34, abs=1e-9)


def test__demur_eigenfrequencies__isotropic_system_rejected():
    with pytest.raises(InvalidArgumentException):
        demur_eigenfrequencies(SpinSystem.isotropic(4500.0), 82.5, 3629.0, 1.0)


def test__first_frame__diagonalizes_static_hamiltonian(silicon):
    assert first_frame_residual(silicon, 139.0, NU_UW) < 1e-10


def test__crossing_fields__single_quantum_resonances_are_flagged(silicon):
    nu1 = silicon.drive_strength(0.677)
    crossings = crossing_fields(silicon, NU_UW, nu1, 136.0, 143.0)
    assert crossings["13"] and crossings["24"]
    for field in crossings["13"] + crossings["24"]:
        assert demur_eigenfrequencies(silicon, field, NU_UW, nu1).near_discontinuity


def test__demur_eigenfrequencies__following_the_crossing_keeps_the_muon_line_continuous(silicon):
    nu1 = silicon.drive_strength(0.677)
    (field,) = crossing_fields(silicon, NU_UW, nu1, 139.0, 141.0)["dq"]
    below, above = field - 1e-6, field + 1e-6
    followed = [demur_eigenfrequencies(silicon, B0, NU_UW, nu1) for B0 in (below, above)]
    plain = [demur_eigenfrequencies(silicon, B0, NU_UW, nu1, follow_crossings=False) for B0 in (below, above)]
    mixing = abs(tilted_frame(silicon, field, NU_UW, nu1)[1].zq_drive)

    assert [point.beyond_dq for point in followed] == [False, True]
    assert followed[1].substituted
    assert followed[1].nu12_tr == pytest.approx(followed[0].nu12_tr, abs=1e-3)
    assert abs(plain[1].nu12_tr - plain[0].nu12_tr) == pytest.approx(mixing, rel=0.01, abs=1e-3)


def test__demur_eigenfrequencies__undriven_point_is_never_substituted(silicon):
    point = demur_eigenfrequencies(silicon, 142.0, NU_UW, 0.0)
    assert point.beyond_dq
    assert not point.substituted


def test__demur_sweep__far_from_resonance_not_flagged(silicon):
    nu1 = silicon.drive_strength(0.677)
    (point,) = demur_sweep(silicon, [130.0], NU_UW, nu1)
    assert not point.near_discontinuity
    assert point.as_row()["flags"] == ""


def test__demur_sweep__empty_list_rejected(silicon):
    with pytest.raises(InvalidArgumentException):
        demur_sweep(silicon, [], NU_UW, 1.0)


def test__resonance_field__double_quantum_transition_matches_drive(silicon):
    field = resonance_field(silicon, 1, 4, NU_UW)
    assert transition_table(silicon, field).nu(1, 4) == pytest.approx(NU_UW, abs=1e-5)


def test__dq_shift_curve__shift_and_rabi_frequency_grow_with_drive(silicon):
    points = dq_shift_curve(silicon, NU_UW, [0.5, 1.0, 2.0])
    shifts = [abs(point.shift) for point in points]
    rabis = [point.nu_rabi for point in points]
    assert shifts == sorted(shifts)
    assert rabis == sorted(rabis)
    assert all(np.isfinite(point.B0_resonance) for point in points)


def test__dq_shift_curve__full_power_drive_shifts_the_resonance_by_about_8_MHz(silicon):
    (point,) = dq_shift_curve(silicon, NU_UW, [2.735])
    assert point.nu_rabi == pytest.approx(6.83, abs=0.1)
    assert point.shift == pytest.approx(7.86, abs=0.1)
    assert point.B0_resonance == pytest.approx(140.19, abs=0.02)


def test__dq_shift_curve__non_positive_drive_rejected(silicon):
    with pytest.raises(InvalidArgumentException):
        dq_shift_curve(silicon, NU_UW, [0.0])


def test__tilted_angles__secular_coupling_has_no_muon_tilt():
    angles = tilted_angles(SpinSystem.axial(67.58, 0.0, g_e=1.9999), 139.0, NU_UW, 1.0)
    assert angles.eta == 0.0
    assert angles.xi == 0.0


def test__tilted_angles__isotropic_system_rejected():
    with pytest.raises(InvalidArgumentException):
        tilted_angles(SpinSystem.isotropic(4463.0), 139.0, NU_UW, 1.0)


def test__analytic_tf_trace__undriven_matches_exact_precession(silicon):
    times = np.linspace(0.0, 400.0, 201)
    result = analytic_tf_trace(silicon, 139.0, NU_UW, 0.0, times)
    exact = spectral_lines(silicon, 139.0, NU_UW, 0.0, geometry="TF").evaluate(times)

    assert result.truncation_valid
    assert result.trace.values[0] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(result.trace.values, exact, atol=1e-6)


def test__analytic_tf_trace__unknown_branch_rejected(silicon):
    with pytest.raises(InvalidArgumentException):
        analytic_tf_trace(silicon, 139.0, NU_UW, 0.5, [0.0, 1.0], branch="sq")
