import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import scipy.signal

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.operators import InvalidArgumentException

DEFAULT_PAD_FACTOR = 8

_WINDOW_ALIASES = {"rect": "boxcar", "rectangular": "boxcar", "none": "boxcar"}


class Peak(NamedTuple):
    nu: float
    amplitude: float
    magnitude: float
    bin: int


@dataclass(frozen=True)
class Spectrum:
    """
    One-sided magnitude |X(nu)| of a windowed, zero-padded trace; nu in MHz.
    """

    freqs: np.ndarray
    magnitude: np.ndarray
    window: str
    pad_factor: int
    detrended: bool
    n_samples: int
    coherent_gain: float

    @property
    def n_fft(self) -> int:
        return self.n_samples * self.pad_factor

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    @property
    def resolution(self) -> float:
        """Frequency spacing of the unpadded transform."""
        return self.bin_width * self.pad_factor

    def energy(self) -> float:
        """:return: sum of squared samples of the windowed trace, from the spectrum"""
        power = self.magnitude ** 2
        doubled = 2.0 * np.sum(power[1:])
        if self.n_fft % 2 == 0:
            doubled -= power[-1]
        return float((power[0] + doubled) / self.n_fft)

    def amplitude(self) -> np.ndarray:
        """:return: magnitude scaled so a cosine of amplitude a peaks at a"""
        return 2.0 * self.magnitude / (self.n_samples * self.coherent_gain)

    def band(self, band: Optional[Tuple[float, float]]) -> np.ndarray:
        if band is None:
            return np.ones(self.freqs.shape, dtype=bool)
        return (self.freqs >= band[0]) & (self.freqs <= band[1])

    def as_columns(self) -> dict:
        return {"nu_MHz": self.freqs, "magnitude": self.magnitude}


def fft_spectrum(
    trace: AsymmetryTrace,
    window: str = "hann",
    pad_factor: int = DEFAULT_PAD_FACTOR,
    detrend: bool = True,
) -> Spectrum:
    if len(trace) < 4:
        raise InvalidArgumentException("A spectrum needs at least four samples")
    if not trace.is_uniform():
        raise InvalidArgumentException("Spectra need a uniform time grid")
    if int(pad_factor) != pad_factor or pad_factor < 1:
        raise InvalidArgumentException(f"pad_factor must be a positive integer, got {pad_factor!r}")
    pad_factor = int(pad_factor)

    name = _WINDOW_ALIASES.get(window.lower(), window.lower())
    values = trace.values
    if detrend:
        values = scipy.signal.detrend(values, type="constant")
    taper = scipy.signal.get_window(name, len(values))
    n_fft = len(values) * pad_factor

    transform = np.fft.rfft(values * taper, n=n_fft)
    return Spectrum(
        freqs=np.fft.rfftfreq(n_fft, d=trace.dt / 1000.0),
        magnitude=np.abs(transform),
        window=name,
        pad_factor=pad_factor,
        detrended=detrend,
        n_samples=len(values),
        coherent_gain=float(np.mean(taper)),
    )


def find_peak(spectrum: Spectrum, band: Optional[Tuple[float, float]] = None) -> Optional[Peak]:
    """
    Largest maximum inside band, refined by a parabola through the logarithm of the
    three bins around it.

    :return: None when the band holds no interior maximum
    """
    inside = np.flatnonzero(spectrum.band(band))
    if len(inside) == 0:
        return None
    best = int(inside[np.argmax(spectrum.magnitude[inside])])
    if best == 0 or best == len(spectrum.magnitude) - 1:
        return None
    return _interpolate(spectrum, best)


def find_peaks(
    spectrum: Spectrum,
    count: int = 2,
    band: Optional[Tuple[float, float]] = None,
    relative_height: float = 0.05,
) -> List[Peak]:
    """:return: up to count strongest peaks inside band, by descending magnitude"""
    mask = spectrum.band(band)
    magnitude = np.where(mask, spectrum.magnitude, 0.0)
    if not np.any(magnitude > 0):
        return []
    indices, _ = scipy.signal.find_peaks(magnitude, height=relative_height * magnitude.max())
    strongest = sorted(indices, key=lambda index: -magnitude[index])[:count]
    return [_interpolate(spectrum, int(index)) for index in strongest]


def dominant_frequency(
    trace: AsymmetryTrace,
    band: Optional[Tuple[float, float]] = None,
    window: str = "hann",
    pad_factor: int = DEFAULT_PAD_FACTOR,
    noise_floor: float = 1e-6,
) -> Optional[Peak]:
    """:return: strongest oscillation of the trace, None when nothing rises above noise_floor"""
    peak = find_peak(fft_spectrum(trace, window, pad_factor), band)
    if peak is None or peak.amplitude < noise_floor:
        return None
    return peak


def _interpolate(spectrum: Spectrum, index: int) -> Peak:
    magnitude = spectrum.magnitude
    scale = spectrum.n_samples * spectrum.coherent_gain / 2.0
    if index == 0 or index == len(magnitude) - 1 or np.any(magnitude[index - 1 : index + 2] <= 0):
        return Peak(
            float(spectrum.freqs[index]), float(magnitude[index] / scale), float(magnitude[index]), index
        )

    a, b, g = np.log(magnitude[index - 1 : index + 2])
    curvature = a - 2.0 * b + g
    offset = 0.0 if curvature == 0 else 0.5 * (a - g) / curvature
    peak_log = b - 0.25 * (a - g) * offset
    return Peak(
        nu=float(spectrum.freqs[index] + offset * spectrum.bin_width),
        amplitude=float(math.exp(peak_log) / scale),
        magnitude=float(math.exp(peak_log)),
        bin=index,
    )
