import numpy as np
import pytest

from muondemur.spectra import narrowing_fwhm_map, rabi_damping_vs_drive, rabi_map
from muondemur.spectra.maps import effective_fwhm
from muondemur.spectra.studies import fourier_amplitude, pulse_delay_scan, ramsey_flip_angle_scan
from muondemur.spinsys import InvalidArgumentException, SpinSystem, transition_table

B_RES = 82.525


@pytest.fixture
def vacuum_like():
    return SpinSystem.isotropic(4500.0)


def test__rabi_map__resonant_cell_oscillates_at_the_rabi_frequency(vacuum_like):
    table = transition_table(vacuum_like, B_RES)
    B1 = table.drive_field_for_rabi(3, 4, 6.95)
    result = rabi_map(
        vacuum_like,
        (3, 4),
        [B_RES],
        [B1],
        t_end=1000.0,
        nu_uw=table.nu(3, 4),
        band=(1.0, 40.0),
    )
    assert result.failed == 0
    assert result.nu_eff.shape == (1, 1)
    assert result.row(B1)[0] == pytest.approx(6.95, rel=0.03)
    assert result.metadata()["shape"] == [1, 1]
    (row,) = result.as_rows()
    assert row["B0_mT"] == B_RES


def test__rabi_map__rejects_empty_grids_and_unknown_templates(vacuum_like):
    with pytest.raises(InvalidArgumentException):
        rabi_map(vacuum_like, (3, 4), [], [0.5])
    with pytest.raises(InvalidArgumentException):
        rabi_map(vacuum_like, (3, 4), [B_RES], [0.5], template="ramsey")


def test__effective_fwhm__pure_offset_spread_is_gaussian():
    assert effective_fwhm(0.0, 0.0, 20.0, 4.0) == pytest.approx(4.0, rel=0.02)


def test__effective_fwhm__strong_drive_narrows_the_line():
    assert effective_fwhm(10.0, 0.0, 0.0, 4.0) < 1.0


def test__effective_fwhm__no_spread():
    assert effective_fwhm(5.0, 0.0, 3.0, 0.0) == 0.0


def test__effective_fwhm__unresolved_offset_folds_into_a_half_normal():
    assert effective_fwhm(0.0, 0.0, 0.0, 4.2) == pytest.approx(2.1, rel=0.02)


def test__effective_fwhm__offset_dominated_line_keeps_the_offset_width():
    assert effective_fwhm(0.5, 0.4, 128.0, 4.2) == pytest.approx(4.2, rel=0.02)


def test__effective_fwhm__drive_dominated_line_keeps_the_drive_width():
    assert effective_fwhm(128.0, 0.4, 0.0, 4.2) == pytest.approx(0.4, rel=0.02)


def test__narrowing_fwhm_map__shape_and_rows():
    result = narrowing_fwhm_map([5.0, 10.0], [0.0, 5.0, 10.0], 0.4, 4.2, nodes=101, grid=501)
    assert result.fwhm.shape == (2, 3)
    assert len(result.as_rows()) == 6
    assert np.all(result.fwhm >= 0)


def test__narrowing_fwhm_map__negative_width_raises():
    with pytest.raises(InvalidArgumentException):
        narrowing_fwhm_map([5.0], [0.0], -0.1, 4.2)


def test__fourier_amplitude__whole_periods():
    tau = np.arange(0.0, 1000.0, 10.0)
    values = 0.2 + 0.4 * np.cos(2 * np.pi * 10.0 * tau / 1000.0)
    assert fourier_amplitude(tau, values, 10.0) == pytest.approx(0.4, rel=1e-9)
    assert fourier_amplitude(tau, values, 20.0) == pytest.approx(0.0, abs=1e-9)


def test__ramsey_flip_angle_scan__needs_a_tau_grid(vacuum_like):
    with pytest.raises(InvalidArgumentException):
        ramsey_flip_angle_scan(vacuum_like, B_RES, 3600.0, 0.5, [36.0], [0.0], tau_grid=[0.0])


def test__pulse_delay_scan__pulse_time_inside_window(vacuum_like):
    with pytest.raises(InvalidArgumentException):
        pulse_delay_scan(vacuum_like, B_RES, 3600.0, 0.5, [2500.0], t_end=2000.0)


def test__rabi_damping_vs_drive__one_point_per_drive_at_the_shifted_resonance():
    silicon = SpinSystem.axial(67.58, 35.55, g_e=1.9999)
    points = rabi_damping_vs_drive(silicon, 3900.0, [0.5], 0.0, t_end=1000.0, n_points=1)

    assert len(points) == 1
    assert points[0].B1 == 0.5
    assert 135.0 < points[0].B0 < 143.0
    assert np.isfinite(points[0].nu_rabi) and points[0].nu_rabi > 0
    assert points[0].damping >= 0


def test__rabi_damping_vs_drive__negative_line_width_rejected():
    silicon = SpinSystem.axial(67.58, 35.55, g_e=1.9999)
    with pytest.raises(InvalidArgumentException):
        rabi_damping_vs_drive(silicon, 3900.0, [0.5], -1.0)
