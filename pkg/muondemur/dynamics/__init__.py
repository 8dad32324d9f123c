from muondemur.dynamics.ensemble import (
    b1_profile_nodes,
    ensemble_average,
    gaussian_nodes,
    weighted_average,
)
from muondemur.dynamics.histograms import DecayHistograms, synth_decay_histograms
from muondemur.dynamics.propagate import (
    Frame,
    FrameRefusedException,
    Propagation,
    SpectralLines,
    initial_state,
    liouvillian_modes,
    propagate,
    rotating_sense,
    spectral_lines,
)
from muondemur.dynamics.pulses import (
    Geometry,
    InvalidSequenceException,
    PulseSegment,
    PulseSequence,
)
from muondemur.dynamics.relaxation import RelaxationModel, apply_relaxation_basis
from muondemur.dynamics.trace import AsymmetryTrace
