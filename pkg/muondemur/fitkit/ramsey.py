"""
Ramsey fringes from phase-cycled two-pulse traces.

Each shot is one trace recorded for a free-evolution time tau and a phase of the
second pulse. The signal of a shot is the mean asymmetry in window_after minus the
mean in window_before. Two-step cycling (0, 180 deg) returns half the difference of
the two signals; four-step cycling (0, 90, 180, 270 deg) adds the quadrature, so the
fringe is complex and the sign of the detuning becomes visible.
"""
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from cli_ui import warning

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.fit import FitReport, fit_model
from muondemur.fitkit.models import ModelSpec
from muondemur.spinsys.operators import InvalidArgumentException

TWO_STEP = (0, 180)
FOUR_STEP = (0, 90, 180, 270)


class RamseyShot(NamedTuple):
    tau: float
    phase_deg: float
    trace: AsymmetryTrace


@dataclass(frozen=True)
class RamseyFringes:
    tau: np.ndarray
    delta: np.ndarray
    sigma: np.ndarray
    quadrature: Optional[np.ndarray] = None
    quadrature_sigma: Optional[np.ndarray] = None
    dropped: int = 0

    @property
    def complex(self) -> Optional[np.ndarray]:
        if self.quadrature is None:
            return None
        return self.delta + 1j * self.quadrature

    def in_phase(self) -> AsymmetryTrace:
        return AsymmetryTrace(self.tau, self.delta, self.sigma)

    def as_columns(self) -> dict:
        columns = {"tau_ns": self.tau, "delta_A": self.delta, "sigma": self.sigma}
        if self.quadrature is not None:
            columns["delta_A_quadrature"] = self.quadrature
            columns["sigma_quadrature"] = self.quadrature_sigma
        return columns


def shot_signal(
    trace: AsymmetryTrace, window_after: Tuple[float, float], window_before: Tuple[float, float]
) -> Tuple[float, float]:
    """:return: (after - before, standard error) of one trace"""
    after, after_error = trace.mean_in(*window_after)
    before, before_error = trace.mean_in(*window_before)
    return after - before, math.hypot(after_error, before_error)


def ramsey_extract(
    shots: Sequence[RamseyShot],
    window_after: Tuple[float, float],
    window_before: Tuple[float, float],
) -> RamseyFringes:
    if not shots:
        raise InvalidArgumentException("No Ramsey shots given")

    by_tau: Dict[float, Dict[int, Tuple[float, float]]] = defaultdict(dict)
    for shot in shots:
        phase = int(round(shot.phase_deg)) % 360
        if phase not in FOUR_STEP:
            raise InvalidArgumentException(
                f"Second-pulse phase {shot.phase_deg} deg is not part of a phase cycle"
            )
        by_tau[float(shot.tau)][phase] = shot_signal(shot.trace, window_after, window_before)

    four_step = any(90 in phases or 270 in phases for phases in by_tau.values())
    needed = FOUR_STEP if four_step else TWO_STEP

    rows = []
    dropped = 0
    for tau in sorted(by_tau):
        phases = by_tau[tau]
        if not all(phase in phases for phase in needed):
            missing = [phase for phase in needed if phase not in phases]
            warning(f"Ramsey point tau = {tau} ns dropped, missing phases {missing}")
            dropped += 1
            continue
        rows.append((tau, *_combine(phases, 0, 180), *(_combine(phases, 90, 270) if four_step else ())))

    if not rows:
        raise InvalidArgumentException("No Ramsey point has a complete phase cycle")
    table = np.array(rows, dtype=float)
    return RamseyFringes(
        tau=table[:, 0],
        delta=table[:, 1],
        sigma=table[:, 2],
        quadrature=table[:, 3] if four_step else None,
        quadrature_sigma=table[:, 4] if four_step else None,
        dropped=dropped,
    )


def _combine(phases: Mapping[int, Tuple[float, float]], plus: int, minus: int) -> Tuple[float, float]:
    (a, a_error), (b, b_error) = phases[plus], phases[minus]
    return 0.5 * (a - b), 0.5 * math.hypot(a_error, b_error)


def detuning_sign(fringes: RamseyFringes) -> int:
    """
    :return: +1 or -1 for the sense in which the complex fringe turns, 0 without a
             quadrature
    """
    signal = fringes.complex
    if signal is None or len(signal) < 3:
        return 0
    turns = np.angle(signal[1:] * np.conj(signal[:-1]))
    weights = np.abs(signal[1:]) * np.abs(signal[:-1])
    return int(np.sign(np.sum(weights * turns)))


def fit_ramsey_fringes(
    fringes: RamseyFringes,
    nu_guess: float,
    damping: str = "rate",
    init: Optional[Mapping[str, float]] = None,
    seed: Optional[int] = None,
) -> Tuple[ModelSpec, FitReport]:
    """Damped cosine plus constant in tau; nu is the detuning magnitude in MHz."""
    model = ModelSpec.single("damped_cosine", "constant", damping=damping)
    trace = fringes.in_phase()
    amplitude = 0.5 * float(np.ptp(trace.values))
    start = {
        "damped_cosine.A": -amplitude if trace.values[0] < np.mean(trace.values) else amplitude,
        "damped_cosine.nu": nu_guess,
        "damped_cosine.phi": 0.0,
        "constant.A": float(np.mean(trace.values)),
    }
    if damping == "rate":
        start["damped_cosine.lam"] = 1.0
    else:
        start["damped_cosine.tau"] = 1000.0
    start.update(init or {})
    report = fit_model(trace, model, start, seed=seed)
    return model, report
