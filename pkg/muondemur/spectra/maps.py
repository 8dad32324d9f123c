import math
from dataclasses import dataclass
from functools import partial
from logging import debug
from typing import List, Optional, Sequence, Tuple

import numpy as np
from cli_ui import warning
from joblib import Parallel, delayed
from scipy.stats import norm

from muondemur.analytic.shift import dq_shift_curve
from muondemur.dynamics.ensemble import FWHM_TO_SIGMA, ensemble_average
from muondemur.dynamics.propagate import initial_state, propagate, spectral_lines
from muondemur.dynamics.pulses import TEMPLATES, Geometry
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.fit import fit_model
from muondemur.fitkit.models import damped_cosine_model
from muondemur.spectra.fourier import dominant_frequency
from muondemur.spinsys.levels import transition_table
from muondemur.spinsys.operators import InvalidArgumentException
from muondemur.spinsys.system import SpinSystem

MAP_TEMPLATES = ("rabi", "demur_cw")

NOISE_FLOOR = 1e-4

# nodes of the outer distribution and of the nu_eff axis for the narrowing map
NARROWING_NODES = 401
NARROWING_GRID = 1501

# spread, in standard deviations, covered by the nu_eff axis
NARROWING_SPAN = 6.0

# per-point sigma attached to noiseless ensemble traces before fitting
SIMULATION_SIGMA = 1e-3


@dataclass(frozen=True)
class RabiMap:
    """nu_eff and amplitude indexed [B0, B1]; NaN marks cells without a clear peak."""

    B0: np.ndarray
    B1: np.ndarray
    nu_eff: np.ndarray
    amplitude: np.ndarray
    transition: Tuple[int, int]
    nu_uw: float
    failed: int

    def row(self, B1: float) -> np.ndarray:
        """:return: nu_eff along B0 for the B1 column closest to the given value"""
        return self.nu_eff[:, int(np.argmin(np.abs(self.B1 - B1)))]

    def as_rows(self) -> List[dict]:
        rows = []
        for i, B0 in enumerate(self.B0):
            for j, B1 in enumerate(self.B1):
                rows.append(
                    {
                        "B0_mT": float(B0),
                        "B1_mT": float(B1),
                        "nu_eff_MHz": float(self.nu_eff[i, j]),
                        "amplitude": float(self.amplitude[i, j]),
                    }
                )
        return rows

    def metadata(self) -> dict:
        return {
            "transition": list(self.transition),
            "nu_uw_MHz": self.nu_uw,
            "failed_cells": self.failed,
            "shape": [len(self.B0), len(self.B1)],
        }


def rabi_map(
    sys: SpinSystem,
    transition: Tuple[int, int],
    B0_list: Sequence[float],
    B1_list: Sequence[float],
    template: str = "rabi",
    t_end: float = 1000.0,
    dt: float = 1.0,
    nu_uw: Optional[float] = None,
    geometry: str = "LF",
    band: Optional[Tuple[float, float]] = None,
    workers: int = 1,
) -> RabiMap:
    """
    Dominant oscillation of the observed polarization for every (B0, B1).

    :param nu_uw: drive frequency; defaults to the transition frequency at the median
                  field of B0_list, so B0 scans the resonance offset
    :param band: frequency band in MHz searched for the peak; by default from two
                 periods per window up to the Nyquist frequency
    """
    if len(B0_list) == 0 or len(B1_list) == 0:
        raise InvalidArgumentException("Rabi maps need non-empty B0 and B1 grids")
    if template not in MAP_TEMPLATES:
        raise InvalidArgumentException(
            f"Rabi maps support the templates {MAP_TEMPLATES}, got {template!r}"
        )
    i, j = transition
    if nu_uw is None:
        nu_uw = transition_table(sys, float(np.median(B0_list))).nu(i, j)
        debug(f"Rabi map drive frequency {nu_uw:.6f} MHz")
    if band is None:
        band = (2000.0 / t_end, 500.0 / dt)

    cells = [(float(B0), float(B1)) for B0 in B0_list for B1 in B1_list]
    simulate = partial(
        _rabi_cell,
        sys=sys,
        nu_uw=nu_uw,
        template=template,
        t_end=t_end,
        dt=dt,
        geometry=geometry,
        band=band,
    )
    if workers > 1:
        results = Parallel(n_jobs=workers)(delayed(simulate)(B0, B1) for B0, B1 in cells)
    else:
        results = [simulate(B0, B1) for B0, B1 in cells]

    values = np.array(results, dtype=float).reshape(len(B0_list), len(B1_list), 2)
    failed = int(np.sum(np.isnan(values[:, :, 0])))
    if failed:
        warning(f"{failed} Rabi map cell(s) show no oscillation above the noise floor")
    return RabiMap(
        B0=np.asarray(B0_list, dtype=float),
        B1=np.asarray(B1_list, dtype=float),
        nu_eff=values[:, :, 0],
        amplitude=values[:, :, 1],
        transition=(i, j),
        nu_uw=float(nu_uw),
        failed=failed,
    )


def _rabi_cell(B0, B1, sys, nu_uw, template, t_end, dt, geometry, band) -> Tuple[float, float]:
    seq = TEMPLATES[template](B1, nu_uw, t_end, geometry=Geometry.parse(geometry))
    result = propagate(initial_state(geometry), sys, B0, seq, dt=dt)
    peak = dominant_frequency(result.trace, band=band, noise_floor=NOISE_FLOOR)
    if peak is None:
        return math.nan, math.nan
    return peak.nu, peak.amplitude


@dataclass(frozen=True)
class NarrowingMap:
    """FWHM of the nu_eff distribution indexed [nu1 mean, Omega mean]."""

    nu1: np.ndarray
    Omega: np.ndarray
    fwhm: np.ndarray
    nu1_fwhm: float
    Omega_fwhm: float

    def as_rows(self) -> List[dict]:
        return [
            {
                "nu1_MHz": float(nu1),
                "Omega_MHz": float(Omega),
                "fwhm_MHz": float(self.fwhm[i, j]),
            }
            for i, nu1 in enumerate(self.nu1)
            for j, Omega in enumerate(self.Omega)
        ]


def narrowing_fwhm_map(
    nu1_means: Sequence[float],
    Omega_means: Sequence[float],
    nu1_fwhm: float,
    Omega_fwhm: float,
    nodes: int = NARROWING_NODES,
    grid: int = NARROWING_GRID,
) -> NarrowingMap:
    """
    FWHM of nu_eff = sqrt(nu1^2 + Omega^2) for independent Gaussian nu1 and Omega.
    """
    if not (nu1_fwhm >= 0 and Omega_fwhm >= 0):
        raise InvalidArgumentException("Distribution widths must be >= 0")
    fwhm = np.array(
        [
            [
                effective_fwhm(nu1, nu1_fwhm, Omega, Omega_fwhm, nodes, grid)
                for Omega in Omega_means
            ]
            for nu1 in nu1_means
        ]
    )
    return NarrowingMap(
        nu1=np.asarray(nu1_means, dtype=float),
        Omega=np.asarray(Omega_means, dtype=float),
        fwhm=fwhm,
        nu1_fwhm=float(nu1_fwhm),
        Omega_fwhm=float(Omega_fwhm),
    )


def effective_fwhm(
    nu1: float,
    nu1_fwhm: float,
    Omega: float,
    Omega_fwhm: float,
    nodes: int = NARROWING_NODES,
    grid: int = NARROWING_GRID,
) -> float:
    """
    The distribution function of nu_eff is integrated exactly over one variable and by
    equal-weight quantile nodes over the other; its derivative is the density. The
    variable that spreads nu_eff less is the one sampled by nodes.
    """
    sigma1, sigmaO = nu1_fwhm * FWHM_TO_SIGMA, Omega_fwhm * FWHM_TO_SIGMA
    if sigma1 == 0 and sigmaO == 0:
        return 0.0

    low = math.hypot(max(0.0, abs(nu1) - NARROWING_SPAN * sigma1), max(0.0, abs(Omega) - NARROWING_SPAN * sigmaO))
    high = math.hypot(abs(nu1) + NARROWING_SPAN * sigma1, abs(Omega) + NARROWING_SPAN * sigmaO)
    mean = max(math.hypot(nu1, Omega), 1e-12)

    def spread(mu, sigma):
        return sigma * max(abs(mu), sigma) / mean

    if spread(nu1, sigma1) <= spread(Omega, sigmaO):
        (mu_out, sigma_out), (mu_in, sigma_in) = (nu1, sigma1), (Omega, sigmaO)
    else:
        (mu_out, sigma_out), (mu_in, sigma_in) = (Omega, sigmaO), (nu1, sigma1)

    outer = mu_out + sigma_out * norm.ppf((np.arange(nodes) + 0.5) / nodes)
    v = np.linspace(low, high, grid)
    s = np.sqrt(np.clip(v[:, None] ** 2 - outer[None, :] ** 2, 0.0, None))
    reachable = v[:, None] ** 2 >= outer[None, :] ** 2
    if sigma_in > 0:
        inside = norm.cdf((s - mu_in) / sigma_in) - norm.cdf((-s - mu_in) / sigma_in)
    else:
        inside = (np.abs(mu_in) <= s).astype(float)
    cdf = np.mean(np.where(reachable, inside, 0.0), axis=1)
    density = np.gradient(cdf, v)

    peak = int(np.argmax(density))
    half = density[peak] / 2.0
    left = v[0]
    for index in range(peak, 0, -1):
        if density[index - 1] < half:
            left = _crossing(v[index - 1], v[index], density[index - 1], density[index], half)
            break
    right = v[-1]
    for index in range(peak, grid - 1):
        if density[index + 1] < half:
            right = _crossing(v[index], v[index + 1], density[index], density[index + 1], half)
            break
    return float(right - left)


def _crossing(x0, x1, y0, y1, level) -> float:
    if y1 == y0:
        return float(x0)
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


@dataclass(frozen=True)
class DampingPoint:
    B1: float
    B0: float
    nu_rabi: float
    damping: float
    damping_error: float
    flags: Tuple[str, ...] = ()

    def as_row(self) -> dict:
        return {
            "B1_mT": self.B1,
            "B0_mT": self.B0,
            "nu_rabi_MHz": self.nu_rabi,
            "damping_per_us": self.damping,
            "damping_error_per_us": self.damping_error,
            "flags": "|".join(self.flags),
        }


def rabi_damping_vs_drive(
    sys: SpinSystem,
    nu_uw: float,
    B1_list: Sequence[float],
    line_fwhm: float,
    t_end: float = 2000.0,
    dt: float = 2.0,
    n_points: int = 9,
    workers: int = 1,
) -> List[DampingPoint]:
    """
    Damping of double-quantum Rabi oscillations under a Gaussian distribution of
    electron resonance offsets of the given FWHM in MHz.

    Each B1 is driven at its own shifted double-quantum resonance field. The
    ensemble-averaged LF trace is fitted with a damped cosine plus a constant.
    """
    if not line_fwhm >= 0:
        raise InvalidArgumentException(f"Line FWHM must be >= 0, got {line_fwhm!r}")

    points = []
    for shift in dq_shift_curve(sys, nu_uw, B1_list):
        seq = TEMPLATES["rabi"](shift.B1, nu_uw, t_end, geometry=Geometry.LF)
        simulate = partial(_offset_trace, sys=sys, B0=shift.B0_resonance, seq=seq, dt=dt)
        trace = ensemble_average(simulate, line_fwhm, n_points, workers=workers)
        points.append(_fit_damping(sys, shift, nu_uw, trace))
        debug(f"B1 = {shift.B1} mT: damping {points[-1].damping:.4f} 1/us")
    return points


def _offset_trace(offset, sys, B0, seq, dt) -> AsymmetryTrace:
    return propagate(initial_state("LF"), sys, B0, seq, dt=dt, offset=offset).trace


def _fit_damping(sys, shift, nu_uw, trace) -> DampingPoint:
    lines = spectral_lines(sys, shift.B0_resonance, nu_uw, shift.nu1, geometry="LF")
    strongest = lines.dominant(1, band=(0.1 * shift.nu_rabi, math.inf))
    line = strongest[0] if strongest else None
    init = {
        "damped_cosine.A": line.amplitude if line else float(np.ptp(trace.values)) / 2.0,
        "damped_cosine.nu": line.nu if line else shift.nu_rabi,
        "damped_cosine.lam": 0.5,
        "damped_cosine.phi": line.phase if line else 0.0,
        "constant.A": float(np.mean(trace.values)),
    }
    report = fit_model(
        trace.with_sigma(SIMULATION_SIGMA),
        damped_cosine_model(),
        init,
        bounds={"damped_cosine.lam": (0.0, np.inf)},
        multistart=0,
    )
    flags = report.flags if report.converged else report.flags + ("not_converged",)
    return DampingPoint(
        B1=shift.B1,
        B0=shift.B0_resonance,
        nu_rabi=abs(report.value("damped_cosine.nu")),
        damping=report.value("damped_cosine.lam"),
        damping_error=report.error("damped_cosine.lam"),
        flags=tuple(flags),
    )
