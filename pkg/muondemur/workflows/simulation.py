"""
Building blocks shared by the workflows that propagate an experiment's sequence.
"""
from dataclasses import dataclass
from functools import partial
from typing import Optional

from muondemur.configuration.schema import ExperimentConfig, SequenceConfig
from muondemur.dynamics.ensemble import b1_profile_nodes, ensemble_average, weighted_average
from muondemur.dynamics.propagate import Propagation, initial_state, propagate
from muondemur.dynamics.relaxation import RelaxationModel
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.system import SpinSystem


@dataclass(frozen=True)
class DriveSetup:
    sys: SpinSystem
    B0: float
    nu_uw: float
    B1: float

    @property
    def nu1(self) -> float:
        return self.sys.drive_strength(self.B1)

    def as_dict(self) -> dict:
        return {"B0_mT": self.B0, "nu_uw_MHz": self.nu_uw, "B1_mT": self.B1, "nu1_MHz": self.nu1}


def drive_setup(config: ExperimentConfig, B0: Optional[float] = None, sys: Optional[SpinSystem] = None) -> DriveSetup:
    """Resolves the drive of an experiment at B0 (the middle field of the field block by default)."""
    sys = sys or config.system.build()
    B0 = config.field.single() if B0 is None else float(B0)
    drive = config.drive
    if drive.nu_uw_MHz is None and drive.transition is None:
        nu_uw = 0.0
    else:
        nu_uw = drive.frequency(sys, B0)
    return DriveSetup(sys, B0, nu_uw, drive.amplitude(sys, B0))


def run_propagation(
    config: ExperimentConfig,
    setup: DriveSetup,
    sequence: Optional[SequenceConfig] = None,
    relax: Optional[RelaxationModel] = None,
    B1: Optional[float] = None,
    offset: float = 0.0,
) -> Propagation:
    drive = config.drive
    sequence = sequence or config.sequence
    seq = sequence.build(
        setup.B1 if B1 is None else B1, setup.nu_uw, drive.t_end_ns, drive.geometry, drive.phase_deg
    )
    return propagate(
        initial_state(drive.geometry),
        setup.sys,
        setup.B0,
        seq,
        relax,
        frame=drive.frame,
        dt=drive.dt_ns,
        oversample=drive.oversample,
        ramp_ns=sequence.ramp_ns,
        offset=offset,
        nu_uw=setup.nu_uw if setup.nu_uw > 0 else None,
        phase_step_deg=sequence.phase_step_deg,
    )


def is_ensemble(config: ExperimentConfig) -> bool:
    ensemble = config.ensemble
    return ensemble.line_fwhm_MHz > 0 or ensemble.B1_spread > 0


def simulate_trace(
    config: ExperimentConfig,
    setup: DriveSetup,
    sequence: Optional[SequenceConfig] = None,
    workers: int = 1,
) -> AsymmetryTrace:
    """
    Observed polarization averaged over the B1 profile and the distribution of electron
    resonance offsets of the ensemble block.
    """
    ensemble = config.ensemble
    relax = config.relaxation.build()
    member = partial(
        _profile_member,
        config=config,
        setup=setup,
        sequence=sequence or config.sequence,
        relax=relax,
        workers=workers,
    )
    nodes, weights = b1_profile_nodes(
        setup.B1, ensemble.B1_profile, ensemble.B1_spread, ensemble.B1_points
    )
    return weighted_average(member, nodes, weights)


def _profile_member(B1, config, setup, sequence, relax, workers) -> AsymmetryTrace:
    member = partial(_offset_member, config=config, setup=setup, sequence=sequence, relax=relax, B1=B1)
    return ensemble_average(
        member, config.ensemble.line_fwhm_MHz, config.ensemble.n_points, workers=workers
    )


def _offset_member(offset, config, setup, sequence, relax, B1) -> AsymmetryTrace:
    return run_propagation(config, setup, sequence, relax, B1, offset).trace
