"""
Validated experiment definitions. Every key carries its unit in its name and unknown
keys are rejected.
"""
import math
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from muondemur.dynamics.pulses import (
    MAX_SEGMENTS,
    Geometry,
    PulseSegment,
    PulseSequence,
    TEMPLATES,
    inversion_recovery,
    rabi,
    ramsey,
    transient_nutation,
)
from muondemur.dynamics.relaxation import RelaxationModel
from muondemur.spinsys.constants import G_FREE_ELECTRON, GAMMA_MU_MHZ_PER_T
from muondemur.spinsys.levels import transition_table
from muondemur.spinsys.system import SpinSystem

WORKFLOW_NAMES = (
    "levels",
    "transitions",
    "simulate",
    "demur",
    "rabi-map",
    "shift-curve",
    "narrowing",
    "fit",
    "synth",
    "coverage",
)


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemConfig(Strict):
    hyperfine: Literal["isotropic", "axial"] = "axial"
    A_iso_MHz: Optional[float] = None
    A_par_MHz: Optional[float] = None
    A_perp_MHz: float = 0.0
    g_e: float = G_FREE_ELECTRON
    gamma_mu_MHz_per_T: float = GAMMA_MU_MHZ_PER_T

    @model_validator(mode="after")
    def check_couplings(self):
        if self.hyperfine == "isotropic":
            if self.A_iso_MHz is None:
                raise ValueError("an isotropic system needs A_iso_MHz")
            if self.A_par_MHz is not None or self.A_perp_MHz:
                raise ValueError("an isotropic system takes only A_iso_MHz")
        elif self.A_par_MHz is None:
            raise ValueError("an axial system needs A_par_MHz")
        elif self.A_iso_MHz is not None:
            raise ValueError("an axial system takes A_par_MHz and A_perp_MHz, not A_iso_MHz")
        return self

    def build(self) -> SpinSystem:
        if self.hyperfine == "isotropic":
            return SpinSystem.isotropic(self.A_iso_MHz, g_e=self.g_e, gamma_mu=self.gamma_mu_MHz_per_T)
        return SpinSystem.axial(
            self.A_par_MHz, self.A_perp_MHz, g_e=self.g_e, gamma_mu=self.gamma_mu_MHz_per_T
        )


class SweepConfig(Strict):
    start_mT: float = Field(ge=0)
    stop_mT: float = Field(ge=0)
    step_mT: float = Field(gt=0)

    @model_validator(mode="after")
    def check_order(self):
        if self.stop_mT < self.start_mT:
            raise ValueError("stop_mT must not lie below start_mT")
        return self

    def values(self) -> List[float]:
        count = int(math.floor((self.stop_mT - self.start_mT) / self.step_mT + 1e-9)) + 1
        return (self.start_mT + self.step_mT * np.arange(count)).tolist()


class FieldConfig(Strict):
    B0_mT: Union[float, List[float], None] = None
    sweep: Optional[SweepConfig] = None

    @model_validator(mode="after")
    def check_choice(self):
        if (self.B0_mT is None) == (self.sweep is None):
            raise ValueError("give either B0_mT or sweep")
        if isinstance(self.B0_mT, list) and not self.B0_mT:
            raise ValueError("B0_mT list must not be empty")
        return self

    def values(self) -> List[float]:
        if self.sweep is not None:
            return self.sweep.values()
        if isinstance(self.B0_mT, list):
            return [float(value) for value in self.B0_mT]
        return [float(self.B0_mT)]

    def single(self) -> float:
        values = self.values()
        return values[len(values) // 2]


class DriveConfig(Strict):
    nu_uw_MHz: Optional[float] = None
    transition: Optional[Tuple[int, int]] = None
    offset_MHz: float = 0.0
    B1_mT: Optional[float] = Field(default=None, ge=0)
    rabi_MHz: Optional[float] = Field(default=None, ge=0)
    phase_deg: float = 0.0
    geometry: Literal["LF", "TF"] = "LF"
    frame: Literal["rotating", "lab"] = "rotating"
    dt_ns: float = Field(default=1.0, gt=0)
    t_end_ns: float = Field(default=1000.0, gt=0)
    oversample: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def check_references(self):
        if self.transition is not None and not all(1 <= label <= 4 for label in self.transition):
            raise ValueError("transition labels lie between 1 and 4")
        if self.nu_uw_MHz is not None and self.offset_MHz:
            raise ValueError("offset_MHz is relative to a transition, not to nu_uw_MHz")
        if self.rabi_MHz is not None:
            if self.B1_mT is not None:
                raise ValueError("give either B1_mT or rabi_MHz")
            if self.transition is None:
                raise ValueError("rabi_MHz needs a transition")
        return self

    def frequency(self, sys: SpinSystem, B0: float) -> float:
        """:return: nu_uw in MHz, given directly or as offset from the transition at B0"""
        if self.nu_uw_MHz is not None:
            return self.nu_uw_MHz
        if self.transition is None:
            raise ValueError("drive needs nu_uw_MHz or a transition")
        return transition_table(sys, B0).nu(*self.transition) + self.offset_MHz

    def amplitude(self, sys: SpinSystem, B0: float) -> float:
        """:return: B1 in mT, given directly or from the on-resonance Rabi frequency"""
        if self.rabi_MHz is not None:
            return transition_table(sys, B0).drive_field_for_rabi(*self.transition, self.rabi_MHz)
        return self.B1_mT or 0.0


class SegmentConfig(Strict):
    t_start_ns: float = Field(ge=0)
    duration_ns: float = Field(ge=0)
    B1_mT: Optional[float] = Field(default=None, ge=0)
    phase_deg: float = 0.0
    nu_uw_MHz: Optional[float] = None


class SequenceConfig(Strict):
    template: Optional[Literal[tuple(TEMPLATES)]] = None
    segments: Optional[List[SegmentConfig]] = None
    t_p_ns: float = Field(default=0.0, ge=0)
    pulse_ns: Optional[float] = Field(default=None, gt=0)
    tau_ns: float = Field(default=0.0, ge=0)
    second_phase_deg: float = 0.0
    t_nut_ns: Optional[float] = Field(default=None, ge=0)
    pi_ns: Optional[float] = Field(default=None, gt=0)
    recovery_ns: float = Field(default=0.0, ge=0)
    read_ns: Optional[float] = Field(default=None, gt=0)
    ramp_ns: float = Field(default=0.0, ge=0)
    phase_step_deg: Optional[float] = Field(default=None, gt=0)
    max_segments: int = Field(default=MAX_SEGMENTS, ge=1)

    @model_validator(mode="after")
    def check_choice(self):
        if self.template is not None and self.segments is not None:
            raise ValueError("give either template or segments")
        needed = {"ramsey": "pulse_ns", "transient_nutation": "t_nut_ns", "inversion_recovery": "pi_ns"}
        if self.template in needed and getattr(self, needed[self.template]) is None:
            raise ValueError(f"template {self.template} needs {needed[self.template]}")
        return self

    def build(self, B1: float, nu_uw: float, t_end: float, geometry: str, phase_deg: float = 0.0) -> PulseSequence:
        geometry = Geometry.parse(geometry)
        phase = math.radians(phase_deg)
        if self.segments is not None:
            segments = tuple(
                PulseSegment(
                    segment.t_start_ns,
                    segment.duration_ns,
                    B1 if segment.B1_mT is None else segment.B1_mT,
                    math.radians(segment.phase_deg) + phase,
                    nu_uw if segment.nu_uw_MHz is None else segment.nu_uw_MHz,
                )
                for segment in self.segments
            )
            return PulseSequence(segments, t_end, geometry, self.max_segments)

        template = self.template or "rabi"
        if template == "ramsey":
            seq = ramsey(
                B1,
                nu_uw,
                self.pulse_ns,
                self.tau_ns,
                t_end,
                t_p=self.t_p_ns,
                second_phase=math.radians(self.second_phase_deg),
                geometry=geometry,
            )
        elif template == "transient_nutation":
            seq = transient_nutation(B1, nu_uw, self.t_nut_ns, t_end, t_p=self.t_p_ns, geometry=geometry)
        elif template == "inversion_recovery":
            seq = inversion_recovery(
                B1, nu_uw, self.pi_ns, self.recovery_ns, t_end, self.read_ns, self.t_p_ns, geometry
            )
        elif template == "demur_cw":
            seq = TEMPLATES["demur_cw"](B1, nu_uw, t_end, geometry=geometry)
        else:
            seq = rabi(B1, nu_uw, t_end, t_p=self.t_p_ns, geometry=geometry)
        return seq.with_phase_offset(phase)


class RelaxationConfig(Strict):
    rates_per_us: Dict[str, float] = Field(default_factory=dict)
    T1_rate_per_us: float = Field(default=0.0, ge=0)
    electron_per_us: Optional[float] = Field(default=None, ge=0)
    muon_12_per_us: float = Field(default=0.0, ge=0)
    muon_34_per_us: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def check_choice(self):
        if self.electron_per_us is not None and self.rates_per_us:
            raise ValueError("give either rates_per_us or electron_per_us with muon rates")
        return self

    def build(self) -> Optional[RelaxationModel]:
        if self.electron_per_us is not None:
            model = RelaxationModel.transition_specific(
                self.electron_per_us, self.muon_12_per_us, self.muon_34_per_us
            )
            if self.T1_rate_per_us:
                model = RelaxationModel(model.rates, self.T1_rate_per_us)
        else:
            model = RelaxationModel.from_mapping(self.rates_per_us, self.T1_rate_per_us)
        return None if model.is_trivial else model


class EnsembleConfig(Strict):
    line_fwhm_MHz: float = Field(default=0.0, ge=0)
    n_points: int = Field(default=9, ge=1)
    B1_profile: Literal["gaussian", "sinusoidal"] = "gaussian"
    B1_spread: float = Field(default=0.0, ge=0, lt=1)
    B1_points: int = Field(default=5, ge=1)

    @model_validator(mode="after")
    def check_odd(self):
        if self.n_points % 2 == 0 or self.B1_points % 2 == 0:
            raise ValueError("quadrature point counts must be odd")
        return self


class Chi2Config(Strict):
    g_e_range: Tuple[float, float]
    B1_range_mT: Tuple[float, float]
    n: int = Field(default=21, ge=5)
    refinements: int = Field(default=3, ge=0)
    zoom: float = Field(default=5.0, gt=1)
    data_csv: Optional[str] = None
    truth_g_e: Optional[float] = None
    truth_B1_mT: Optional[float] = None
    noise_MHz: float = Field(default=0.05, gt=0)

    @model_validator(mode="after")
    def check_data(self):
        if self.data_csv is None and (self.truth_g_e is None or self.truth_B1_mT is None):
            raise ValueError("chi2 needs data_csv or truth_g_e with truth_B1_mT for synthetic data")
        return self


class CoverageConfig(Strict):
    truth: Dict[str, float]
    replicates: int = Field(default=200, ge=1)
    t_end_ns: float = Field(default=4000.0, gt=0)
    bin_ns: float = Field(default=2.0, gt=0)


class AnalysisConfig(Strict):
    # fits
    model: List[Literal["damped_cosine", "constant", "exp_decay"]] = Field(
        default_factory=lambda: ["damped_cosine", "constant"]
    )
    damping: Literal["rate", "lifetime"] = "rate"
    init: Dict[str, float] = Field(default_factory=dict)
    bounds: Dict[str, Tuple[float, float]] = Field(default_factory=dict)
    fixed: List[str] = Field(default_factory=list)
    shared: Dict[str, str] = Field(default_factory=dict)
    multistart: Optional[int] = Field(default=None, ge=0)
    backend: Literal["scipy", "minuit"] = "scipy"
    fit_window_ns: Optional[Tuple[float, float]] = None
    profile: List[str] = Field(default_factory=list)
    input_csv: Optional[str] = None
    two_zone_t_p_ns: Optional[float] = None
    # histograms
    n_muons: float = Field(default=1e7, gt=0)
    alpha: float = Field(default=1.0, gt=0)
    A0_max: float = Field(default=0.25, ge=0)
    f_dia: float = 0.0
    # spectra
    window: str = "hann"
    pad_factor: int = Field(default=8, ge=1)
    band_MHz: Optional[Tuple[float, float]] = None
    components: int = Field(default=1, ge=1)
    # maps and curves
    B1_list_mT: List[float] = Field(default_factory=list)
    nu1_means_MHz: List[float] = Field(default_factory=list)
    Omega_means_MHz: List[float] = Field(default_factory=list)
    nu1_fwhm_MHz: float = Field(default=0.0, ge=0)
    Omega_fwhm_MHz: float = Field(default=0.0, ge=0)
    t_p_list_ns: List[float] = Field(default_factory=list)
    pulse_list_ns: List[float] = Field(default_factory=list)
    detunings_MHz: List[float] = Field(default_factory=list)
    tau_step_ns: float = Field(default=2.0, gt=0)
    tau_max_ns: float = Field(default=1000.0, ge=0)
    overlay_p34: Optional[float] = Field(default=None, ge=0, le=1)
    overlay_p_sigma: float = Field(default=1.0, ge=0, le=1)
    # ramsey
    ramsey_window_after_ns: Optional[Tuple[float, float]] = None
    ramsey_window_before_ns: Optional[Tuple[float, float]] = None
    ramsey_taus_ns: List[float] = Field(default_factory=list)
    ramsey_phases_deg: List[float] = Field(default_factory=lambda: [0.0, 180.0])
    # demur
    exclusion_mT: float = Field(default=0.05, ge=0)
    follow_crossings: bool = True
    numeric: bool = False
    chi2: Optional[Chi2Config] = None
    modes: bool = False
    # error calibration
    coverage: Optional[CoverageConfig] = None


class OutputConfig(Strict):
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    out_dir: Optional[str] = None


class ExperimentConfig(Strict):
    description: Optional[str] = None
    workflow: Optional[Literal[WORKFLOW_NAMES]] = None
    system: SystemConfig
    field: FieldConfig
    drive: DriveConfig = Field(default_factory=DriveConfig)
    sequence: SequenceConfig = Field(default_factory=SequenceConfig)
    relaxation: RelaxationConfig = Field(default_factory=RelaxationConfig)
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: Optional[int] = None
