import math
from dataclasses import dataclass
from logging import debug
from typing import Optional

import numpy as np

from muondemur.dynamics.pulses import Geometry
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.constants import GAMMA_MU_MHZ_PER_T, MUON_LIFETIME_NS
from muondemur.spinsys.operators import InvalidArgumentException


@dataclass(frozen=True)
class DecayHistograms:
    """Forward and backward positron counts per bin starting at times (ns)."""

    times: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    alpha: float
    expected_forward: np.ndarray
    expected_backward: np.ndarray
    clipped: int = 0

    @property
    def bin_ns(self) -> float:
        return float(self.times[1] - self.times[0])

    def as_columns(self) -> dict:
        return {"t_ns": self.times, "N_F": self.forward, "N_B": self.backward}


def synth_decay_histograms(
    trace: AsymmetryTrace,
    n_muons: float,
    alpha: float = 1.0,
    A0_max: float = 0.25,
    f_dia: float = 0.0,
    B0: float = 0.0,
    phi_dia: float = 0.0,
    geometry="LF",
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    lifetime_ns: float = MUON_LIFETIME_NS,
) -> DecayHistograms:
    """
    Poisson-sampled detector histograms for a polarization trace.

    The diamagnetic fraction adds f_dia cos(2π gamma_mu B0 t + phi_dia) to the
    polarization in TF and a constant f_dia in LF.
    """
    if not math.isfinite(n_muons) or n_muons <= 0:
        raise InvalidArgumentException(f"n_muons must be positive, got {n_muons!r}")
    if not math.isfinite(alpha) or alpha <= 0:
        raise InvalidArgumentException(f"alpha must be positive, got {alpha!r}")
    if not math.isfinite(A0_max) or A0_max < 0:
        raise InvalidArgumentException(f"A0_max must be >= 0, got {A0_max!r}")
    if len(trace) < 2 or not trace.is_uniform():
        raise InvalidArgumentException("Histograms need a uniform grid of at least two points")

    times = trace.times
    polarization = np.array(trace.values, dtype=float)
    if f_dia:
        if Geometry.parse(geometry) is Geometry.TF:
            larmor = GAMMA_MU_MHZ_PER_T / 1000.0 * B0
            polarization = polarization + f_dia * np.cos(
                2.0 * np.pi * larmor * times / 1000.0 + phi_dia
            )
        else:
            polarization = polarization + f_dia

    decay = n_muons * (trace.dt / lifetime_ns) * np.exp(-times / lifetime_ns)
    expected_forward = decay * (1.0 - A0_max * polarization) / (1.0 + alpha)
    expected_backward = alpha * decay * (1.0 + A0_max * polarization) / (1.0 + alpha)

    clipped = int(np.sum(expected_forward < 0) + np.sum(expected_backward < 0))
    if clipped:
        debug(f"{clipped} negative expected counts clipped to 0")
    expected_forward = np.clip(expected_forward, 0.0, None)
    expected_backward = np.clip(expected_backward, 0.0, None)

    if rng is None:
        rng = np.random.default_rng(seed)
    return DecayHistograms(
        times=times,
        forward=rng.poisson(expected_forward),
        backward=rng.poisson(expected_backward),
        alpha=float(alpha),
        expected_forward=expected_forward,
        expected_backward=expected_backward,
        clipped=clipped,
    )
