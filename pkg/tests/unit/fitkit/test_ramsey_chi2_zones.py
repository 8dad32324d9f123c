import numpy as np
import pytest

from muondemur.dynamics import AsymmetryTrace
from muondemur.fitkit import (
    Component,
    ModelSpec,
    RamseyFringes,
    RamseyShot,
    chi2_grid,
    constellation_fit,
    damped_cosine_model,
    fit_ramsey_fringes,
    ramsey_extract,
    two_zone_rabi_fit,
)
from muondemur.fitkit.ramsey import detuning_sign
from muondemur.spinsys import InvalidArgumentException

SHOT_TIMES = np.arange(0.0, 100.0, 1.0)
WINDOW_BEFORE = (0.0, 9.0)
WINDOW_AFTER = (50.0, 99.0)


def shot(tau, phase, nu):
    signal = np.cos(2 * np.pi * nu * tau / 1000.0 - np.radians(phase))
    values = np.where(SHOT_TIMES >= 50.0, 0.1 + signal, 0.1)
    return RamseyShot(tau, phase, AsymmetryTrace(SHOT_TIMES, values, np.full(len(SHOT_TIMES), 0.01)))


def test__ramsey_extract__two_step_cycle():
    taus = np.arange(0.0, 200.0, 20.0)
    fringes = ramsey_extract([shot(tau, phase, 5.0) for tau in taus for phase in (0, 180)], WINDOW_AFTER, WINDOW_BEFORE)
    np.testing.assert_allclose(fringes.delta, np.cos(2 * np.pi * 5.0 * taus / 1000.0), atol=1e-9)
    assert fringes.quadrature is None
    assert detuning_sign(fringes) == 0
    assert np.all(fringes.sigma > 0)


@pytest.mark.parametrize("nu, sense", [(5.0, 1), (-5.0, -1)])
def test__ramsey_extract__four_step_cycle_shows_the_detuning_sign(nu, sense):
    taus = np.arange(0.0, 200.0, 20.0)
    shots = [shot(tau, phase, nu) for tau in taus for phase in (0, 90, 180, 270)]
    fringes = ramsey_extract(shots, WINDOW_AFTER, WINDOW_BEFORE)
    np.testing.assert_allclose(fringes.quadrature, np.sin(2 * np.pi * nu * taus / 1000.0), atol=1e-9)
    assert detuning_sign(fringes) == sense
    assert "delta_A_quadrature" in fringes.as_columns()


def test__ramsey_extract__incomplete_cycles_are_dropped():
    shots = [shot(0.0, 0, 5.0), shot(0.0, 180, 5.0), shot(20.0, 0, 5.0)]
    fringes = ramsey_extract(shots, WINDOW_AFTER, WINDOW_BEFORE)
    assert fringes.dropped == 1
    assert list(fringes.tau) == [0.0]


def test__ramsey_extract__rejects_phases_outside_the_cycle():
    with pytest.raises(InvalidArgumentException):
        ramsey_extract([shot(0.0, 45, 5.0)], WINDOW_AFTER, WINDOW_BEFORE)
    with pytest.raises(InvalidArgumentException):
        ramsey_extract([], WINDOW_AFTER, WINDOW_BEFORE)


def test__fit_ramsey_fringes__detuning():
    tau = np.arange(0.0, 1000.0, 10.0)
    delta = 0.3 * np.exp(-0.5 * tau / 1000.0) * np.cos(2 * np.pi * 5.0 * tau / 1000.0) + 0.02
    fringes = RamseyFringes(tau, delta, np.full(len(tau), 0.01))
    _, report = fit_ramsey_fringes(fringes, nu_guess=5.1)
    assert report.value("damped_cosine.nu") == pytest.approx(5.0, abs=1e-3)
    assert report.value("damped_cosine.lam") == pytest.approx(0.5, abs=1e-2)


def paraboloid(x, y):
    return (x - 0.3) ** 2 / 0.01 + (y + 0.2) ** 2 / 0.04


def test__chi2_grid__finds_minimum_and_intervals():
    result = chi2_grid(paraboloid, (-1.0, 1.0), (-1.0, 1.0), n=21, refinements=3, names=("a", "b"))
    assert result.converged
    assert result.flags == ()
    assert result.best[0] == pytest.approx(0.3, abs=1e-6)
    assert result.best[1] == pytest.approx(-0.2, abs=1e-6)
    low, high = result.error("a")
    assert low == pytest.approx(0.1, abs=0.01)
    assert high == pytest.approx(0.1, abs=0.01)
    assert result.error("b")[1] == pytest.approx(0.2, abs=0.02)


def test__chi2_grid__minimum_never_rises_between_levels():
    result = chi2_grid(paraboloid, (-0.95, 1.05), (-1.0, 1.0), n=11, refinements=3)
    minima = [level.chi2_min for level in result.levels]
    assert len(minima) == 4
    assert all(later <= earlier for earlier, later in zip(minima, minima[1:]))
    assert len(result.as_rows()) == 11 * 11
    assert result.contour_metadata()["contour_levels"]["68%_2d"] == 2.30


def test__chi2_grid__sharp_minimum_zooms_by_the_full_factor_around_the_best_node():
    result = chi2_grid(lambda x, y: ((x - 0.3) ** 2 + (y + 0.2) ** 2) * 1e12, (-1.0, 1.0), (-1.0, 1.0), n=21)
    for earlier, later in zip(result.levels, result.levels[1:]):
        width = earlier.x_range[1] - earlier.x_range[0]
        assert later.x_range[1] - later.x_range[0] == pytest.approx(width / 5.0)
        assert sum(later.x_range) / 2.0 == pytest.approx(earlier.best[0])
        assert sum(later.y_range) / 2.0 == pytest.approx(earlier.best[1])


def test__chi2_grid__wide_valley_shrinks_by_at_most_the_zoom_factor():
    result = chi2_grid(paraboloid, (-1.0, 1.0), (-1.0, 1.0), n=21, refinements=3, zoom=5.0)
    for earlier, later in zip(result.levels, result.levels[1:]):
        ratio = (earlier.x_range[1] - earlier.x_range[0]) / (later.x_range[1] - later.x_range[0])
        assert 1.0 <= ratio <= 5.0 + 1e-9
    x_low, x_high = result.levels[-1].x_range
    assert x_low < 0.3 - 0.1 and x_high > 0.3 + 0.1


def test__chi2_grid__minimum_outside_is_flagged():
    result = chi2_grid(paraboloid, (0.5, 1.0), (-1.0, 1.0), n=11, refinements=0)
    assert not result.converged
    assert "best_on_edge" in result.flags


def test__chi2_grid__argument_errors():
    with pytest.raises(InvalidArgumentException):
        chi2_grid(paraboloid, (-1.0, 1.0), (-1.0, 1.0), n=10)
    with pytest.raises(InvalidArgumentException):
        chi2_grid(paraboloid, (1.0, -1.0), (-1.0, 1.0))
    with pytest.raises(InvalidArgumentException):
        chi2_grid(paraboloid, (-1.0, 1.0), (-1.0, 1.0), zoom=1.0)


def test__constellation_fit__shares_frequency_between_geometries():
    times = np.arange(0.0, 800.0, 2.0)
    sigma = np.full(len(times), 0.005)

    def trace(amplitude):
        values = amplitude * np.exp(-0.5 * times / 1000.0) * np.cos(2 * np.pi * 6.0 * times / 1000.0) + 0.01
        return AsymmetryTrace(times, values, sigma)

    init = {
        "damped_cosine.A": 0.15,
        "damped_cosine.nu": 6.02,
        "damped_cosine.lam": 0.4,
        "damped_cosine.phi": 0.0,
        "constant.A": 0.0,
    }
    report, (pair,) = constellation_fit(trace(0.2), trace(0.1), damped_cosine_model(), init, seed=1)
    assert "tf_damped_cosine.nu" not in report.names
    assert pair.nu == pytest.approx(6.0, abs=1e-3)
    assert pair.A_lf == pytest.approx(0.2, abs=1e-3)
    assert pair.A_tf == pytest.approx(0.1, abs=1e-3)


def test__two_zone_rabi_fit__locates_the_pulse():
    times = np.arange(0.0, 1000.0, 2.0)
    during = 0.2 * np.exp(-0.3 * (times - 200.0) / 1000.0) * np.cos(2 * np.pi * 7.0 * (times - 200.0) / 1000.0) - 0.1
    values = np.where(times < 200.0, 0.1, during)
    trace = AsymmetryTrace(times, values, np.full(len(times), 0.01))

    before = ModelSpec((Component("pre", "constant"),))
    init = {
        "pre.A": 0.1,
        "damped_cosine.A": 0.2,
        "damped_cosine.nu": 7.0,
        "damped_cosine.lam": 0.3,
        "damped_cosine.phi": 0.0,
        "constant.A": -0.1,
    }
    result = two_zone_rabi_fit(trace, 196.0, before, damped_cosine_model(), init, search_ns=10.0)
    assert result.identifiable
    assert result.t_p == pytest.approx(200.0, abs=2.0)
    assert result.report.value("damped_cosine.nu") == pytest.approx(7.0, abs=0.05)
    assert "t_p_ns" in result.as_dict()


def test__two_zone_rabi_fit__argument_errors():
    trace = AsymmetryTrace(np.arange(0.0, 100.0), np.zeros(100), np.full(100, 0.01))
    init = {"constant.A": 0.0}
    with pytest.raises(InvalidArgumentException):
        two_zone_rabi_fit(trace, 500.0, ModelSpec.single("constant"), damped_cosine_model(), init)
    with pytest.raises(InvalidArgumentException):
        two_zone_rabi_fit(trace, 50.0, ModelSpec.single("constant"), damped_cosine_model(), init)
