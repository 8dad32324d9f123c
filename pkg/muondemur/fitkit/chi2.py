"""
χ² maps over two parameters on an iteratively refined grid.

Every refinement level centers a new grid on the best node of the previous one, keeps
that node, and shrinks the window to the box holding Δχ² <= 11.8 but never by more
than the zoom factor. The minimum χ² therefore never increases from one level to the
next.
"""
import math
from dataclasses import dataclass, field
from logging import debug
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from muondemur.analytic.tilted import DEFAULT_EXCLUSION_MT, demur_eigenfrequencies
from muondemur.spinsys.operators import InvalidArgumentException
from muondemur.spinsys.system import SpinSystem

# Δχ² for 68 % with two free parameters, and for one
DELTA_CHI2_2D = 2.30
DELTA_CHI2_1D = 1.0
# Δχ² kept inside the refined window (about 3σ with two parameters)
DELTA_CHI2_WINDOW = 11.8


class Level(NamedTuple):
    level: int
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    chi2_min: float
    best: Tuple[float, float]


@dataclass(frozen=True)
class Chi2Map:
    names: Tuple[str, str]
    x: np.ndarray
    y: np.ndarray
    chi2: np.ndarray  # shape (len(y), len(x))
    best: Tuple[float, float]
    chi2_min: float
    levels: List[Level]
    converged: bool
    flags: Tuple[str, ...] = ()
    intervals: Dict[str, Tuple[float, float]] = field(default_factory=dict)

    @property
    def delta(self) -> np.ndarray:
        return self.chi2 - self.chi2_min

    def region(self, delta_chi2: float = DELTA_CHI2_2D) -> np.ndarray:
        return self.delta <= delta_chi2

    def error(self, name: str) -> Tuple[float, float]:
        """:return: (lower, upper) distances of the Δχ² = 1 interval from the best value"""
        low, high = self.intervals[name]
        center = self.best[self.names.index(name)]
        return center - low, high - center

    def as_rows(self) -> List[dict]:
        x_name, y_name = self.names
        rows = []
        for j, y in enumerate(self.y):
            for i, x in enumerate(self.x):
                rows.append(
                    {
                        x_name: float(x),
                        y_name: float(y),
                        "chi2": float(self.chi2[j, i]),
                        "delta_chi2": float(self.chi2[j, i] - self.chi2_min),
                    }
                )
        return rows

    def contour_metadata(self) -> dict:
        return {
            "parameters": list(self.names),
            "best": dict(zip(self.names, (float(value) for value in self.best))),
            "chi2_min": self.chi2_min,
            "contour_levels": {"68%_2d": DELTA_CHI2_2D, "68%_1d": DELTA_CHI2_1D},
            "intervals_68": {name: list(bounds) for name, bounds in self.intervals.items()},
            "levels": [
                {
                    "level": level.level,
                    "x_range": list(level.x_range),
                    "y_range": list(level.y_range),
                    "chi2_min": level.chi2_min,
                }
                for level in self.levels
            ],
            "converged": self.converged,
            "flags": list(self.flags),
        }


def chi2_grid(
    objective: Callable[[float, float], float],
    x_range: Tuple[float, float],
    y_range: Tuple[float, float],
    n: int = 21,
    refinements: int = 3,
    zoom: float = 5.0,
    names: Tuple[str, str] = ("x", "y"),
    workers: int = 1,
) -> Chi2Map:
    """
    :param objective: χ² as a function of the two parameters
    :param n: nodes per axis, odd so that the previous best point is the center node
    :param refinements: refinement levels after the initial grid
    :param zoom: largest shrink factor of the window per level. Each refined axis is
                 centred on the best node and still spans every node within
                 Δχ² = 11.8 of the minimum, so a wide valley shrinks by less.
    """
    if n < 5 or n % 2 == 0:
        raise InvalidArgumentException(f"Grid size must be an odd number >= 5, got {n!r}")
    if zoom <= 1:
        raise InvalidArgumentException(f"Zoom factor must exceed 1, got {zoom!r}")
    for low, high in (x_range, y_range):
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise InvalidArgumentException(f"Invalid grid range ({low}, {high})")

    x = np.linspace(*x_range, n)
    y = np.linspace(*y_range, n)
    chi2 = _evaluate(objective, x, y, workers)
    levels = [_summary(0, x, y, chi2)]

    for level in range(1, refinements + 1):
        j, i = np.unravel_index(np.argmin(chi2), chi2.shape)
        inside = chi2 - chi2[j, i] <= DELTA_CHI2_WINDOW
        x = _refined_axis(x, i, inside.any(axis=0), zoom)
        y = _refined_axis(y, j, inside.any(axis=1), zoom)
        chi2 = _evaluate(objective, x, y, workers)
        levels.append(_summary(level, x, y, chi2))
        debug(f"chi2 level {level}: min {levels[-1].chi2_min:.6g} at {levels[-1].best}")

    j, i = np.unravel_index(np.argmin(chi2), chi2.shape)
    flags = []
    converged = 0 < i < n - 1 and 0 < j < n - 1
    if not converged:
        flags.append("best_on_edge")

    intervals = {}
    for axis, name, values in ((0, names[0], x), (1, names[1], y)):
        profile = chi2.min(axis=0) if axis == 0 else chi2.min(axis=1)
        bounds, closed = _profile_bounds(values, profile, DELTA_CHI2_1D)
        intervals[name] = bounds
        if not closed:
            flags.append(f"interval_open_{name}")

    return Chi2Map(
        names=tuple(names),
        x=x,
        y=y,
        chi2=chi2,
        best=(float(x[i]), float(y[j])),
        chi2_min=float(chi2[j, i]),
        levels=levels,
        converged=converged,
        flags=tuple(flags),
        intervals=intervals,
    )


def _evaluate(objective, x, y, workers) -> np.ndarray:
    nodes = [(float(xi), float(yj)) for yj in y for xi in x]
    if workers > 1:
        values = Parallel(n_jobs=workers)(delayed(objective)(xi, yj) for xi, yj in nodes)
    else:
        values = [objective(xi, yj) for xi, yj in nodes]
    return np.array(values, dtype=float).reshape(len(y), len(x))


def _refined_axis(axis: np.ndarray, best: int, inside: np.ndarray, zoom: float) -> np.ndarray:
    step = axis[1] - axis[0]
    old_half = (axis[-1] - axis[0]) / 2.0
    covered = axis[inside]
    half = max(abs(covered[0] - axis[best]), abs(covered[-1] - axis[best])) + step
    half = min(max(half, old_half / zoom), old_half)
    return axis[best] + np.linspace(-half, half, len(axis))


def _summary(level, x, y, chi2) -> Level:
    j, i = np.unravel_index(np.argmin(chi2), chi2.shape)
    return Level(level, (float(x[0]), float(x[-1])), (float(y[0]), float(y[-1])), float(chi2[j, i]), (float(x[i]), float(y[j])))


def _profile_bounds(values: np.ndarray, profile: np.ndarray, delta: float) -> Tuple[Tuple[float, float], bool]:
    best = int(np.argmin(profile))
    target = profile[best] + delta
    closed = True

    def crossing(indices):
        nonlocal closed
        previous = best
        for index in indices:
            if profile[index] > target:
                fraction = (target - profile[previous]) / (profile[index] - profile[previous])
                return float(values[previous] + fraction * (values[index] - values[previous]))
            previous = index
        closed = False
        return float(values[previous])

    low = crossing(range(best - 1, -1, -1))
    high = crossing(range(best + 1, len(values)))
    return (low, high), closed


class DemurDatum(NamedTuple):
    B0: float
    nu12: float
    sigma12: float
    nu34: float
    sigma34: float


class DemurObjective:
    """
    χ² of measured driven muon frequencies against the tilted-frame prediction, as a
    function of (g_e, B1 in mT).

    Points that lie within exclusion_mT of a discontinuity of the prediction at the
    reference parameters are left out; exclusion_mT = 0 keeps all of them.
    """

    def __init__(
        self,
        sys: SpinSystem,
        data: Sequence[DemurDatum],
        nu_uw: float,
        reference: Tuple[float, float],
        exclusion_mT: float = DEFAULT_EXCLUSION_MT,
        follow_crossings: bool = True,
    ):
        if not data:
            raise InvalidArgumentException("A DEMUR objective needs data points")
        for datum in data:
            if not (datum.sigma12 > 0 and datum.sigma34 > 0):
                raise InvalidArgumentException(f"Data at {datum.B0} mT carries no positive sigma")
        self.sys = sys
        self.nu_uw = nu_uw
        self.follow_crossings = follow_crossings

        g_e, B1 = reference
        reference_sys = sys.with_g_e(g_e)
        nu1 = reference_sys.drive_strength(B1)
        self.data = [
            datum
            for datum in data
            if exclusion_mT <= 0
            or not demur_eigenfrequencies(
                reference_sys, datum.B0, nu_uw, nu1, exclusion_mT, follow_crossings
            ).near_discontinuity
        ]
        self.excluded = len(data) - len(self.data)
        if self.excluded:
            debug(f"{self.excluded} DEMUR points excluded near discontinuities")
        if not self.data:
            raise InvalidArgumentException("All DEMUR points fall into exclusion windows")

    def __call__(self, g_e: float, B1: float) -> float:
        sys = self.sys.with_g_e(g_e)
        nu1 = sys.drive_strength(B1)
        total = 0.0
        for datum in self.data:
            point = demur_eigenfrequencies(sys, datum.B0, self.nu_uw, nu1, 0.0, self.follow_crossings)
            total += ((point.nu12_tr - datum.nu12) / datum.sigma12) ** 2
            total += ((point.nu34_tr - datum.nu34) / datum.sigma34) ** 2
        return total


def demur_objective(
    sys: SpinSystem,
    data: Sequence[DemurDatum],
    nu_uw: float,
    reference: Tuple[float, float],
    exclusion_mT: float = DEFAULT_EXCLUSION_MT,
    follow_crossings: bool = True,
) -> DemurObjective:
    return DemurObjective(sys, data, nu_uw, reference, exclusion_mT, follow_crossings)
