import math
from dataclasses import dataclass
from logging import debug
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import brentq, minimize_scalar

from muondemur.analytic.tilted import (
    MinimizationBracketException,
    crossing_fields,
)
from muondemur.spinsys.hamiltonian import rotating_frame_hamiltonian
from muondemur.spinsys.levels import level_diagram, transition_table
from muondemur.spinsys.operators import InvalidArgumentException
from muondemur.spinsys.system import SpinSystem

SEARCH_POINTS = 51

# search half-width in units of the electron drive strength
SEARCH_SPAN = 3.0

FREQUENCY_TOLERANCE_MHZ = 1e-3


@dataclass(frozen=True)
class ShiftPoint:
    B1: float
    nu1: float
    nu_rabi: float
    shift: float
    B0_resonance: float
    shift_analytic: float
    B0_analytic: float

    def as_row(self) -> dict:
        return {
            "B1_mT": self.B1,
            "nu_rabi_MHz": self.nu_rabi,
            "shift_MHz": self.shift,
            "shift_analytic_MHz": self.shift_analytic,
            "B0_resonance_mT": self.B0_resonance,
        }


def resonance_field(
    sys: SpinSystem, i: int, j: int, nu_uw: float, span_mT: float = 10.0
) -> float:
    """:return: B0 in mT where the static transition i-j matches nu_uw"""
    center = nu_uw / sys.gamma_e_MHz_per_mT

    def mismatch(B0):
        return transition_table(sys, B0).nu(i, j) - nu_uw

    low, high = max(center - span_mT, 1e-6), center + span_mT
    if mismatch(low) * mismatch(high) > 0:
        raise InvalidArgumentException(
            f"Transition {i}-{j} does not reach {nu_uw} MHz between {low:.3f} and {high:.3f} mT"
        )
    return brentq(mismatch, low, high, xtol=1e-9)


def dressed_dq_splitting(sys: SpinSystem, B0: float, nu_uw: float, nu1: float) -> float:
    """
    :return: splitting in MHz of the two dressed states carrying most of the static
             levels 1 and 4, the nutation frequency seen in <I_z> near the
             double-quantum resonance
    """
    diagram = level_diagram(sys, B0)
    energies, vectors = scipy.linalg.eigh(rotating_frame_hamiltonian(sys, B0, nu_uw, nu1=nu1))
    static = np.column_stack([diagram.vector(1), diagram.vector(4)])
    weights = np.sum(np.abs(static.conj().T @ vectors) ** 2, axis=0)
    first, second = np.argsort(weights)[-2:]
    return float(abs(energies[first] - energies[second]))


def dq_shift_curve(
    sys: SpinSystem,
    nu_uw: float,
    B1_list: Sequence[float],
    n_points: int = SEARCH_POINTS,
) -> List[ShiftPoint]:
    """
    Drive-induced shift of the double-quantum (1-4) resonance.

    For each B1 the field minimizing the dressed splitting is searched on a grid of
    +-3 nu1 around the static resonance and refined by golden-section search. The
    analytic estimate is the field where the double-quantum tilt angle reaches ±π/2.
    """
    static_field = resonance_field(sys, 1, 4, nu_uw)
    debug(f"Static double-quantum resonance at {static_field:.6f} mT")

    points = []
    for B1 in B1_list:
        if not math.isfinite(B1) or B1 <= 0:
            raise InvalidArgumentException(f"B1 values must be positive, got {B1!r}")
        nu1 = sys.drive_strength(B1)
        B0_star, nu_rabi = _minimize_splitting(sys, nu_uw, nu1, static_field, n_points)
        B0_analytic = _analytic_resonance(sys, nu_uw, nu1, static_field)
        points.append(
            ShiftPoint(
                B1=float(B1),
                nu1=nu1,
                nu_rabi=nu_rabi,
                shift=transition_table(sys, B0_star).nu(1, 4) - nu_uw,
                B0_resonance=B0_star,
                shift_analytic=(
                    transition_table(sys, B0_analytic).nu(1, 4) - nu_uw
                    if B0_analytic is not None
                    else math.nan
                ),
                B0_analytic=B0_analytic if B0_analytic is not None else math.nan,
            )
        )
    return points


def _minimize_splitting(sys, nu_uw, nu1, static_field, n_points):
    half_width = SEARCH_SPAN * nu1 / sys.gamma_e_MHz_per_mT
    grid = np.linspace(static_field - half_width, static_field + half_width, n_points)
    grid = grid[grid > 0]
    values = np.array([dressed_dq_splitting(sys, B0, nu_uw, nu1) for B0 in grid])
    sweep = list(zip(grid.tolist(), values.tolist()))

    best = int(np.argmin(values))
    if best == 0 or best == len(grid) - 1:
        raise MinimizationBracketException(
            f"Dressed splitting minimum for nu1 = {nu1:.4f} MHz lies on the edge of the search window",
            sweep,
        )

    tolerance = FREQUENCY_TOLERANCE_MHZ / sys.gamma_e_MHz_per_mT / grid[best]
    result = minimize_scalar(
        lambda B0: dressed_dq_splitting(sys, B0, nu_uw, nu1),
        bracket=(grid[best - 1], grid[best], grid[best + 1]),
        method="golden",
        tol=tolerance,
    )
    if not result.success:
        raise MinimizationBracketException(
            f"Golden-section search failed for nu1 = {nu1:.4f} MHz: {result.message}", sweep
        )
    return float(result.x), float(result.fun)


def _analytic_resonance(sys, nu_uw, nu1, static_field) -> Optional[float]:
    half_width = (SEARCH_SPAN * nu1 + 1.0) / sys.gamma_e_MHz_per_mT
    roots = crossing_fields(
        sys,
        nu_uw,
        nu1,
        max(static_field - half_width, 1e-6),
        static_field + half_width,
        n_grid=401,
    )["dq"]
    if not roots:
        debug(f"No double-quantum crossing found for nu1 = {nu1:.4f} MHz")
        return None
    return min(roots, key=lambda root: abs(root - static_field))
