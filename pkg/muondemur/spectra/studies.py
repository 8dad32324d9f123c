import math
from dataclasses import dataclass
from logging import debug
from typing import List, Optional, Sequence, Tuple

import numpy as np

from muondemur.dynamics.propagate import initial_state, observed_axis, propagate
from muondemur.dynamics.pulses import Geometry, rabi, ramsey
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spectra.fourier import dominant_frequency, fft_spectrum, find_peaks
from muondemur.spinsys.operators import MUON_OPERATORS, InvalidArgumentException
from muondemur.spinsys.system import SpinSystem

DEFAULT_TAU_GRID = np.arange(0.0, 1000.0 + 1e-9, 2.0)


@dataclass(frozen=True)
class DelayPoint:
    t_p: float
    nu_eff: float
    amplitude: float

    def as_row(self) -> dict:
        return {"t_p_ns": self.t_p, "nu_eff_MHz": self.nu_eff, "amplitude": self.amplitude}


def pulse_delay_scan(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    B1: float,
    t_p_list: Sequence[float],
    t_end: float = 2000.0,
    dt: float = 1.0,
    geometry: str = "LF",
    band: Optional[Tuple[float, float]] = None,
) -> List[DelayPoint]:
    """Rabi frequency and amplitude after the pulse for a series of pulse arrival times."""
    points = []
    for t_p in t_p_list:
        if not 0 <= t_p < t_end:
            raise InvalidArgumentException(f"t_p = {t_p} ns lies outside [0, {t_end}) ns")
        seq = rabi(B1, nu_uw, t_end, t_p=t_p, geometry=Geometry.parse(geometry))
        trace = propagate(initial_state(geometry), sys, B0, seq, dt=dt).trace.window(t_p, t_end)
        peak = dominant_frequency(trace, band=band or (2000.0 / (t_end - t_p), 500.0 / dt))
        if peak is None:
            points.append(DelayPoint(float(t_p), math.nan, 0.0))
        else:
            points.append(DelayPoint(float(t_p), peak.nu, peak.amplitude))
    return points


@dataclass(frozen=True)
class FlipAnglePoint:
    pulse_ns: float
    amplitudes: Tuple[float, ...]

    def as_row(self, detunings: Sequence[float]) -> dict:
        row = {"pulse_ns": self.pulse_ns}
        for detuning, amplitude in zip(detunings, self.amplitudes):
            row[f"amplitude_at_{detuning:g}_MHz"] = amplitude
        return row


def ramsey_flip_angle_scan(
    sys: SpinSystem,
    B0: float,
    nu_uw: float,
    B1: float,
    pulse_list: Sequence[float],
    detunings: Sequence[float],
    tau_grid: Sequence[float] = DEFAULT_TAU_GRID,
    read_ns: float = 0.0,
    geometry: str = "LF",
) -> List[FlipAnglePoint]:
    """
    For each pulse duration, the polarization read after the second pulse as a function
    of tau, and its Fourier amplitude at each of the detunings in MHz.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if len(tau_grid) < 2:
        raise InvalidArgumentException("A Ramsey fringe needs at least two tau values")
    axis = observed_axis(geometry)

    points = []
    for pulse_ns in pulse_list:
        fringe = np.empty(len(tau_grid))
        for index, tau in enumerate(tau_grid):
            t_end = 2.0 * pulse_ns + tau + read_ns
            seq = ramsey(B1, nu_uw, pulse_ns, tau, t_end, geometry=Geometry.parse(geometry))
            # a single output step yields the state at t_end
            result = propagate(initial_state(geometry), sys, B0, seq, dt=t_end)
            fringe[index] = 2.0 * np.trace(result.final_state @ MUON_OPERATORS[axis]).real
        amplitudes = tuple(fourier_amplitude(tau_grid, fringe, nu) for nu in detunings)
        debug(f"Ramsey pulse {pulse_ns} ns: amplitudes {amplitudes}")
        points.append(FlipAnglePoint(float(pulse_ns), amplitudes))
    return points


def fourier_amplitude(tau_ns: np.ndarray, values: np.ndarray, nu: float) -> float:
    """:return: amplitude of the cosine at nu (MHz) in values sampled at tau_ns"""
    phases = np.exp(-2j * np.pi * nu * tau_ns / 1000.0)
    return float(2.0 * abs(np.mean((values - np.mean(values)) * phases)))


@dataclass(frozen=True)
class TwoComponents:
    """
    Zero-field Rabi oscillation split into two lines; their sum is nu_eff and their
    difference is |Omega|.
    """

    nu_low: float
    nu_high: float

    @property
    def total(self) -> float:
        return self.nu_low + self.nu_high

    @property
    def difference(self) -> float:
        return self.nu_high - self.nu_low

    def as_dict(self) -> dict:
        return {
            "nu_low_MHz": self.nu_low,
            "nu_high_MHz": self.nu_high,
            "sum_MHz": self.total,
            "difference_MHz": self.difference,
        }


def two_component_analysis(
    trace: AsymmetryTrace,
    band: Optional[Tuple[float, float]] = None,
    window: str = "hann",
    pad_factor: int = 8,
) -> TwoComponents:
    peaks = find_peaks(fft_spectrum(trace, window, pad_factor), count=2, band=band)
    if len(peaks) < 2:
        raise InvalidArgumentException(f"Expected two spectral components, found {len(peaks)}")
    low, high = sorted(peak.nu for peak in peaks)
    return TwoComponents(low, high)
