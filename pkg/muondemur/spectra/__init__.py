from muondemur.spectra.fourier import (
    Peak,
    Spectrum,
    dominant_frequency,
    fft_spectrum,
    find_peak,
    find_peaks,
)
from muondemur.spectra.maps import (
    NarrowingMap,
    RabiMap,
    narrowing_fwhm_map,
    rabi_damping_vs_drive,
    rabi_map,
)
from muondemur.spectra.studies import (
    pulse_delay_scan,
    ramsey_flip_angle_scan,
    two_component_analysis,
)
