import pytest
from pydantic import ValidationError

from muondemur.configuration.schema import (
    DriveConfig,
    EnsembleConfig,
    ExperimentConfig,
    FieldConfig,
    RelaxationConfig,
    SequenceConfig,
    SweepConfig,
    SystemConfig,
)
from muondemur.spinsys import transition_table


def test__sweep_config__includes_the_end_point():
    values = SweepConfig(start_mT=0.0, stop_mT=1.0, step_mT=0.1).values()
    assert len(values) == 11
    assert values[-1] == pytest.approx(1.0)


def test__sweep_config__reversed_range_is_rejected():
    with pytest.raises(ValidationError):
        SweepConfig(start_mT=2.0, stop_mT=1.0, step_mT=0.1)


def test__field_config__exactly_one_choice():
    with pytest.raises(ValidationError):
        FieldConfig()
    with pytest.raises(ValidationError):
        FieldConfig(B0_mT=[])
    assert FieldConfig(B0_mT=[1.0, 2.0, 3.0]).single() == 2.0


def test__system_config__isotropic_and_axial_couplings():
    assert SystemConfig(hyperfine="isotropic", A_iso_MHz=4500.0).build().is_isotropic
    with pytest.raises(ValidationError):
        SystemConfig(hyperfine="isotropic", A_iso_MHz=4500.0, A_perp_MHz=1.0)
    with pytest.raises(ValidationError):
        SystemConfig(hyperfine="axial")


def test__drive_config__frequency_from_transition_and_offset():
    sys = SystemConfig(hyperfine="isotropic", A_iso_MHz=4500.0).build()
    drive = DriveConfig(transition=(3, 4), offset_MHz=1.54, rabi_MHz=6.95)
    table = transition_table(sys, 82.2)
    assert drive.frequency(sys, 82.2) == pytest.approx(table.nu(3, 4) + 1.54)
    assert table.rabi_frequency(3, 4, drive.amplitude(sys, 82.2)) == pytest.approx(6.95)


def test__drive_config__conflicting_references():
    with pytest.raises(ValidationError):
        DriveConfig(rabi_MHz=6.95)
    with pytest.raises(ValidationError):
        DriveConfig(transition=(3, 4), rabi_MHz=6.95, B1_mT=1.0)
    with pytest.raises(ValidationError):
        DriveConfig(nu_uw_MHz=3900.0, offset_MHz=1.0)
    with pytest.raises(ValidationError):
        DriveConfig(transition=(0, 4))


def test__sequence_config__templates_need_their_timing():
    with pytest.raises(ValidationError):
        SequenceConfig(template="ramsey")
    with pytest.raises(ValidationError):
        SequenceConfig(template="rabi", segments=[{"t_start_ns": 0.0, "duration_ns": 10.0}])


def test__sequence_config__builds_explicit_segments():
    config = SequenceConfig(
        segments=[
            {"t_start_ns": 0.0, "duration_ns": 36.0},
            {"t_start_ns": 100.0, "duration_ns": 36.0, "phase_deg": 180.0},
        ]
    )
    seq = config.build(B1=0.5, nu_uw=3600.0, t_end=500.0, geometry="LF")
    assert len(seq.segments) == 2
    assert seq.segments[1].B1 == 0.5


def test__relaxation_config__builds_models():
    assert RelaxationConfig().build() is None
    model = RelaxationConfig(electron_per_us=13.2, muon_12_per_us=0.95, muon_34_per_us=5.0).build()
    assert model is not None
    with pytest.raises(ValidationError):
        RelaxationConfig(rates_per_us={"12": 1.0}, electron_per_us=1.0)


def test__ensemble_config__even_point_counts_are_rejected():
    with pytest.raises(ValidationError):
        EnsembleConfig(n_points=4)


def test__experiment_config__unknown_workflow_and_keys():
    base = {"system": {"A_par_MHz": 67.58}, "field": {"B0_mT": 140.2}}
    assert ExperimentConfig.model_validate(base).workflow is None
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({**base, "workflow": "teleport"})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({**base, "colour": "red"})
