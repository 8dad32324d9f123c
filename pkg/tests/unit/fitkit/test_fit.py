import math

import numpy as np
import pytest

from muondemur.dynamics import AsymmetryTrace
from muondemur.dynamics.histograms import DecayHistograms
from muondemur.fitkit import (
    Component,
    ModelSpec,
    Zone,
    asymmetry_from_histograms,
    damped_cosine_model,
    fit_model,
    profile_interval,
)
from muondemur.spinsys import InvalidArgumentException, SpinSystem, muon_sector_frequencies

TIMES = np.arange(0.0, 1000.0, 2.0)
TRUTH = {
    "damped_cosine.A": 0.2,
    "damped_cosine.nu": 7.0,
    "damped_cosine.lam": 0.8,
    "damped_cosine.phi": 0.3,
    "constant.A": 0.05,
}


def noiseless(model, params, sigma=0.01):
    return AsymmetryTrace(TIMES, model.evaluate(TIMES, params), np.full(len(TIMES), sigma))


def test__model_spec__parameter_names():
    model = damped_cosine_model()
    assert model.parameter_names == [
        "damped_cosine.A",
        "damped_cosine.nu",
        "damped_cosine.lam",
        "damped_cosine.phi",
        "constant.A",
    ]
    assert "damped_cosine.tau" in damped_cosine_model(damping="lifetime").parameter_names


def test__model_spec__lifetime_and_rate_agree():
    rate = damped_cosine_model(with_constant=False)
    lifetime = damped_cosine_model(with_constant=False, damping="lifetime")
    params = {"damped_cosine.A": 1.0, "damped_cosine.nu": 3.0, "damped_cosine.phi": 0.0}
    np.testing.assert_allclose(
        rate.evaluate(TIMES, {**params, "damped_cosine.lam": 2.0}),
        lifetime.evaluate(TIMES, {**params, "damped_cosine.tau": 500.0}),
    )


def test__model_spec__shared_parameters_leave_the_free_list():
    model = ModelSpec(
        (Component("lf", "damped_cosine"), Component("tf", "damped_cosine")),
        {"tf.nu": "lf.nu"},
    )
    assert "tf.nu" not in model.parameter_names
    assert model.expand({"lf.nu": 4.0})["tf.nu"] == 4.0


def test__model_spec__rejects_invalid_definitions():
    with pytest.raises(InvalidArgumentException):
        ModelSpec(())
    with pytest.raises(InvalidArgumentException):
        ModelSpec((Component("a", "constant"), Component("a", "constant")))
    with pytest.raises(InvalidArgumentException):
        Component("a.b", "constant")
    with pytest.raises(InvalidArgumentException):
        ModelSpec(
            (Component("a", "constant", zone="x"), Component("b", "constant", zone="y")),
            zones=(Zone("x", 0.0, 100.0), Zone("y", 50.0)),
        )
    with pytest.raises(InvalidArgumentException):
        ModelSpec((Component("a", "constant", zone="missing"),))


def test__model_spec__zone_components_start_at_the_zone():
    model = ModelSpec((Component("late", "constant", zone="z"),), zones=(Zone("z", 100.0),))
    values = model.evaluate([0.0, 99.0, 100.0, 500.0], {"late.A": 2.0})
    assert list(values) == [0.0, 0.0, 2.0, 2.0]


@pytest.mark.parametrize("backend", ["scipy", "minuit"])
def test__fit_model__recovers_noiseless_parameters(backend):
    model = damped_cosine_model()
    start = dict(TRUTH, **{"damped_cosine.nu": 7.05, "damped_cosine.lam": 0.5, "damped_cosine.phi": 0.2})
    report = fit_model(noiseless(model, TRUTH), model, start, backend=backend)
    assert report.converged
    assert report.backend == backend
    for name, value in TRUTH.items():
        assert report.value(name) == pytest.approx(value, abs=1e-3)
    assert report.chi2 == pytest.approx(0.0, abs=1e-2)
    assert report.dof == len(TIMES) - 5


def test__fit_model__fixed_parameters_keep_their_value():
    model = damped_cosine_model()
    report = fit_model(noiseless(model, TRUTH), model, TRUTH, fixed=["constant.A"])
    assert "constant.A" not in report.names
    assert report.value("constant.A") == 0.05
    assert report.error("constant.A") == 0.0
    assert report.as_dict()["fixed"] == {"constant.A": 0.05}


def test__fit_model__argument_errors():
    model = damped_cosine_model()
    trace = noiseless(model, TRUTH)
    with pytest.raises(InvalidArgumentException):
        fit_model(AsymmetryTrace(TIMES, trace.values), model, TRUTH)
    with pytest.raises(InvalidArgumentException):
        fit_model(trace, model, TRUTH, backend="simplex")
    with pytest.raises(InvalidArgumentException):
        fit_model(trace, model, {"constant.A": 0.0})
    with pytest.raises(InvalidArgumentException):
        fit_model(trace, model, TRUTH, bounds={"damped_cosine.lam": (1.0, 2.0)})
    with pytest.raises(InvalidArgumentException):
        fit_model(trace, model, TRUTH, fixed=["nope.A"])


def test__profile_interval__constant_model_is_symmetric():
    rng = np.random.default_rng(3)
    sigma = 0.1
    values = 0.4 + sigma * rng.standard_normal(100)
    trace = AsymmetryTrace(np.arange(100.0), values, np.full(100, sigma))
    model = ModelSpec.single("constant")
    report = fit_model(trace, model, {"constant.A": 0.0})
    assert report.value("constant.A") == pytest.approx(np.mean(values), abs=1e-8)
    assert report.error("constant.A") == pytest.approx(sigma / 10.0, rel=1e-6)

    low, high = profile_interval(trace, model, report, "constant.A")
    assert low == pytest.approx(sigma / 10.0, rel=1e-4)
    assert high == pytest.approx(sigma / 10.0, rel=1e-4)


def test__profile_interval__bounded_side_stays_open():
    trace = AsymmetryTrace(np.arange(100.0), np.full(100, 0.4), np.full(100, 0.1))
    model = ModelSpec.single("constant")
    report = fit_model(trace, model, {"constant.A": 0.4}, bounds={"constant.A": (0.395, 1.0)})
    low, high = profile_interval(trace, model, report, "constant.A", bounds={"constant.A": (0.395, 1.0)})
    assert math.isinf(low)
    assert high == pytest.approx(0.01, rel=1e-3)


def test__asymmetry_from_histograms__values_errors_and_dropped_bins():
    histograms = DecayHistograms(
        times=np.array([0.0, 1.0, 2.0]),
        forward=np.array([100, 100, 5]),
        backward=np.array([300, 100, 3]),
        alpha=1.0,
        expected_forward=np.array([100.0, 100.0, 5.0]),
        expected_backward=np.array([300.0, 100.0, 3.0]),
    )
    trace = asymmetry_from_histograms(histograms)
    assert list(trace.times) == [0.0, 1.0]
    assert trace.values == pytest.approx([0.5, 0.0])
    assert trace.sigma[1] == pytest.approx(math.sqrt(0.005))

    with pytest.raises(InvalidArgumentException):
        asymmetry_from_histograms(histograms, alpha=0.0)


def test__fit_model__three_component_transverse_field_trace_round_trips():
    silicon = SpinSystem.axial(67.58, 35.55, g_e=1.9999)
    nu12, nu34 = muon_sector_frequencies(silicon, 138.1)
    model = ModelSpec.single("damped_cosine", "damped_cosine", "damped_cosine")
    truth = {}
    for index, (A, nu, lam, phase_deg) in enumerate(
        [
            (0.0384, silicon.nu_I(138.1), 0.05, 212.0),
            (0.0313, nu12, 0.363, 203.0),
            (0.0500, nu34, 2.93, 134.0),
        ]
    ):
        name = f"damped_cosine{index + 1}"
        truth.update(
            {f"{name}.A": A, f"{name}.nu": nu, f"{name}.lam": lam, f"{name}.phi": math.radians(phase_deg)}
        )
    times = np.arange(0.0, 6000.0, 1.0)
    sigma = np.full(len(times), 0.002)
    rng = np.random.default_rng(138)
    noisy = AsymmetryTrace(times, model.evaluate(times, truth) + rng.normal(0.0, 0.002, len(times)), sigma)

    exact = fit_model(AsymmetryTrace(times, model.evaluate(times, truth), sigma), model, truth, multistart=0)
    report = fit_model(noisy, model, truth, multistart=0)

    assert exact.converged and report.converged
    for name, value in truth.items():
        assert exact.value(name) == pytest.approx(value, rel=1e-4, abs=1e-6)
        assert abs(report.value(name) - value) < 3.0 * report.error(name)
    assert report.value("damped_cosine3.lam") > report.value("damped_cosine2.lam") > report.value("damped_cosine1.lam")
