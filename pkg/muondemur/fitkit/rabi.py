import dataclasses
import math
from dataclasses import dataclass
from logging import debug
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from cli_ui import warning
from scipy.optimize import minimize_scalar

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.fit import FitFailedException, FitReport, fit_model
from muondemur.fitkit.models import ModelSpec, Zone
from muondemur.spinsys.operators import InvalidArgumentException

DEFAULT_SEARCH_NS = 10.0
SCAN_POINTS = 21
T_P_TOLERANCE_NS = 0.01


@dataclass(frozen=True)
class TwoZoneFit:
    """Joint fit of the pre-pulse and the during-pulse zones."""

    report: FitReport
    t_p: float
    discontinuity: float
    flags: Tuple[str, ...]
    scan: List[Tuple[float, float]]

    @property
    def identifiable(self) -> bool:
        return "non_identifiable" not in self.flags

    def as_dict(self) -> dict:
        fit = self.report.as_dict()
        fit["flags"] = list(dict.fromkeys(fit["flags"] + list(self.flags)))
        return {
            "t_p_ns": self.t_p,
            "discontinuity": self.discontinuity,
            "fit": fit,
        }


def two_zone_model(before: ModelSpec, during: ModelSpec, t_start: float, t_p: float) -> ModelSpec:
    """Components of before act on [t_start, t_p), those of during from t_p on."""
    components = tuple(dataclasses.replace(component, zone="before") for component in before.components)
    components += tuple(dataclasses.replace(component, zone="during") for component in during.components)
    return ModelSpec(
        components,
        tuple(before.shared) + tuple(during.shared),
        (Zone("before", t_start, t_p), Zone("during", t_p)),
    )


def two_zone_rabi_fit(
    trace: AsymmetryTrace,
    t_p_guess: float,
    before: ModelSpec,
    during: ModelSpec,
    init: Mapping[str, float],
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    search_ns: float = DEFAULT_SEARCH_NS,
    scan_points: int = SCAN_POINTS,
    multistart: Optional[int] = None,
    seed: Optional[int] = None,
) -> TwoZoneFit:
    """
    Fits the pre-pulse model before t_p and the Rabi model after it, then refines the
    pulse arrival t_p by minimizing the jump between the two fitted curves at t_p.

    The during-pulse components take t_p as their time origin. Refinement is refused
    when the search window reaches the edge of the data; t_p_guess is kept then.
    """
    times = trace.times
    if not times[0] < t_p_guess < times[-1]:
        raise InvalidArgumentException(
            f"t_p = {t_p_guess} ns lies outside the data ({times[0]} to {times[-1]} ns)"
        )
    names = set(before.all_parameter_names)
    overlap = names.intersection(during.all_parameter_names)
    if overlap:
        raise InvalidArgumentException(
            f"Pre-pulse and pulse models share component names: {', '.join(sorted(overlap))}"
        )

    def fit_at(t_p, start, starts):
        model = two_zone_model(before, during, times[0], t_p)
        report = fit_model(trace, model, start, bounds, multistart=starts, seed=seed)
        return model, report

    def jump(t_p, start):
        model, report = fit_at(t_p, start, 0)
        return _discontinuity(model, report.params, times[0], t_p), report

    flags = []
    low, high = t_p_guess - search_ns, t_p_guess + search_ns
    n_before = int(np.sum(times < low))
    n_during = int(np.sum(times >= high))
    enough = n_before > len(before.parameter_names) and n_during > len(during.parameter_names)

    scan = []
    t_p = t_p_guess
    if search_ns > 0 and enough:
        grid = np.linspace(low, high, scan_points)
        start = dict(init)
        for value in grid:
            step, report = jump(value, start)
            scan.append((float(value), float(step)))
            start = report.params
        jumps = np.array([step for _, step in scan])
        best = int(np.argmin(jumps))
        noise = float(np.median(trace.sigma)) if trace.sigma is not None else 0.0

        if np.max(jumps) - np.min(jumps) <= noise:
            debug(f"Discontinuity varies by less than {noise:.3g} over the search window")
            flags.append("non_identifiable")
        elif best == 0 or best == len(grid) - 1:
            warning(f"Pulse arrival minimum lies on the edge of t_p = {t_p_guess} +- {search_ns} ns")
            flags.append("refinement_refused")
        else:
            result = minimize_scalar(
                lambda value: jump(value, start)[0],
                bounds=(grid[best - 1], grid[best + 1]),
                method="bounded",
                options={"xatol": T_P_TOLERANCE_NS},
            )
            t_p = float(result.x)
            debug(f"Refined pulse arrival t_p = {t_p:.3f} ns")
    else:
        flags.append("refinement_refused")

    model, report = fit_at(t_p, dict(init), multistart)
    if not np.all(np.isfinite(report.values)):
        raise FitFailedException(f"Two-zone fit at t_p = {t_p} ns returned non-finite values")
    return TwoZoneFit(
        report=report,
        t_p=t_p,
        discontinuity=_discontinuity(model, report.params, times[0], t_p),
        flags=tuple(flags),
        scan=scan,
    )


def _discontinuity(model: ModelSpec, params: Dict[str, float], t_start: float, t_p: float) -> float:
    values = model.expand(params)
    left = sum(
        float(component.evaluate(np.array([t_p - t_start]), values)[0])
        for component in model.components
        if component.zone == "before"
    )
    right = sum(
        float(component.evaluate(np.array([0.0]), values)[0])
        for component in model.components
        if component.zone == "during"
    )
    return abs(left - right) if math.isfinite(left - right) else math.inf
