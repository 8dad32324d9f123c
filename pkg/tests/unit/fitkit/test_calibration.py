import numpy as np
import pytest

from muondemur.fitkit import coverage_study, damped_cosine_model
from muondemur.fitkit.calibration import NOMINAL_COVERAGE
from muondemur.spinsys import InvalidArgumentException

TIMES = np.arange(0.0, 3000.0, 2.0)
TRUTH = {
    "damped_cosine.A": 0.1,
    "damped_cosine.nu": 6.95,
    "damped_cosine.lam": 1.4,
    "damped_cosine.phi": 0.3,
    "constant.A": 0.05,
}


def study(replicates, seed=5, workers=1):
    return coverage_study(damped_cosine_model(), TRUTH, TIMES, 1e7, replicates=replicates, seed=seed, workers=workers)


def test__coverage_study__pulls_are_centred_with_unit_width():
    result = study(60)
    assert len(result.usable) == 60
    for name in TRUTH:
        pulls = result.pulls(name)
        assert abs(np.mean(pulls)) < 0.5
        assert 0.6 < np.std(pulls) < 1.5
        assert 0.4 < result.coverage(name) < 0.95


def test__coverage_study__same_seed_same_replicates_whatever_the_workers():
    serial = study(4, seed=11)
    parallel = study(4, seed=11, workers=2)
    assert serial.as_rows() == parallel.as_rows()
    assert study(4, seed=12).as_rows() != serial.as_rows()


def test__coverage_study__summary_lists_every_parameter():
    summary = study(3).summary()
    assert summary["replicates"] == 3
    assert summary["nominal"] == pytest.approx(0.6827, abs=1e-4)
    assert set(summary["coverage"]) == set(TRUTH)
    assert NOMINAL_COVERAGE == pytest.approx(0.6827, abs=1e-4)


def test__coverage_study__rows_flag_covered_intervals():
    result = study(2)
    row = result.as_rows()[0]
    assert row["replicate"] == 0
    assert row["damped_cosine.nu.covered"] == (
        abs(row["damped_cosine.nu"] - 6.95) <= row["damped_cosine.nu.error"]
    )


def test__coverage_study__truth_must_match_the_model():
    partial_truth = {name: value for name, value in TRUTH.items() if name != "constant.A"}
    with pytest.raises(InvalidArgumentException):
        coverage_study(damped_cosine_model(), partial_truth, TIMES, 1e7)
    with pytest.raises(InvalidArgumentException):
        coverage_study(damped_cosine_model(), {**TRUTH, "extra.A": 1.0}, TIMES, 1e7)


def test__coverage_study__polarization_beyond_one_rejected():
    with pytest.raises(InvalidArgumentException):
        coverage_study(damped_cosine_model(), {**TRUTH, "damped_cosine.A": 0.3}, TIMES, 1e7, A0_max=0.25)


def test__coverage_study__needs_a_replicate():
    with pytest.raises(InvalidArgumentException):
        coverage_study(damped_cosine_model(), TRUTH, TIMES, 1e7, replicates=0)
