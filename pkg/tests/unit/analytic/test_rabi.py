import pytest

from muondemur.analytic import amplitude_overlay, effective_rabi, rabi_amplitudes
from muondemur.spinsys import InvalidArgumentException


def test__effective_rabi__sio2_values():
    assert effective_rabi(6.95, 2.496) == pytest.approx(7.385, abs=0.005)


def test__rabi_amplitudes__on_resonance_full_oscillation():
    amplitudes = rabi_amplitudes(0.38, 0.94, 6.95, 0.0)
    assert amplitudes.A_osc == pytest.approx(0.38)
    assert amplitudes.A_static == pytest.approx(0.56)
    assert not amplitudes.undefined


def test__rabi_amplitudes__far_off_resonance_no_oscillation():
    amplitudes = rabi_amplitudes(0.38, 0.94, 6.95, 1e6)
    assert amplitudes.A_osc == pytest.approx(0.0, abs=1e-8)
    assert amplitudes.A_static == pytest.approx(0.94)


def test__rabi_amplitudes__offset_equal_to_drive_halves_amplitude():
    assert rabi_amplitudes(0.38, 0.94, 5.0, 5.0).A_osc == pytest.approx(0.19)


def test__rabi_amplitudes__no_drive_no_offset_is_undefined():
    amplitudes = rabi_amplitudes(0.38, 0.94, 0.0, 0.0)
    assert amplitudes.undefined
    assert amplitudes.A_osc == 0.0


def test__rabi_amplitudes__partial_above_total_polarization_rejected():
    with pytest.raises(InvalidArgumentException):
        rabi_amplitudes(0.95, 0.94, 6.95, 0.0)


def test__amplitude_overlay__one_point_per_field():
    points = amplitude_overlay([82.4, 82.525, 82.6], [0.96, 0.0, -0.58], 6.95, 0.38, 0.94)
    assert [point.B0 for point in points] == [82.4, 82.525, 82.6]
    assert points[1].A_osc == pytest.approx(0.38)
    assert points[0].A_osc < points[2].A_osc < points[1].A_osc


def test__amplitude_overlay__lengths_must_match():
    with pytest.raises(InvalidArgumentException):
        amplitude_overlay([82.4, 82.5], [0.0], 6.95, 0.38, 0.94)
