import math
from dataclasses import dataclass, field
from logging import debug
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import brentq, least_squares

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.models import Kind, ModelSpec
from muondemur.spinsys.operators import InvalidArgumentException

DEFAULT_MAX_NFEV = 2000
DEFAULT_MULTISTART = 8
JITTER = 0.1
PHASE_JITTER = 0.5

BACKENDS = ("scipy", "minuit")


@dataclass(frozen=True)
class FitReport:
    """
    Result of a weighted least-squares fit.

    errors are 1σ from the inverse curvature at the minimum; NaN marks an error that
    is unavailable (singular curvature, see flags). fixed parameters keep their
    value and carry no error.
    """

    names: Tuple[str, ...]
    values: np.ndarray
    errors: np.ndarray
    chi2: float
    dof: int
    covariance: np.ndarray
    converged: bool
    nfev: int
    backend: str = "scipy"
    fixed: Dict[str, float] = field(default_factory=dict)
    flags: Tuple[str, ...] = ()

    def value(self, name: str) -> float:
        if name in self.fixed:
            return self.fixed[name]
        return float(self.values[self._index(name)])

    def error(self, name: str) -> float:
        if name in self.fixed:
            return 0.0
        return float(self.errors[self._index(name)])

    @property
    def params(self) -> Dict[str, float]:
        params = dict(zip(self.names, (float(value) for value in self.values)))
        params.update(self.fixed)
        return params

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else math.nan

    def with_flags(self, *flags: str) -> "FitReport":
        merged = tuple(dict.fromkeys(self.flags + flags))
        return FitReport(
            self.names,
            self.values,
            self.errors,
            self.chi2,
            self.dof,
            self.covariance,
            self.converged,
            self.nfev,
            self.backend,
            dict(self.fixed),
            merged,
        )

    def as_dict(self) -> dict:
        return {
            "names": list(self.names),
            "values": [float(value) for value in self.values],
            "errors": [None if math.isnan(error) else float(error) for error in self.errors],
            "fixed": dict(self.fixed),
            "chi2": self.chi2,
            "dof": self.dof,
            "reduced_chi2": None if self.dof <= 0 else self.reduced_chi2,
            "converged": self.converged,
            "nfev": self.nfev,
            "backend": self.backend,
            "flags": list(self.flags),
        }

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a parameter of this fit")


class _Problem:
    """Free parameter vector <-> named parameters, and weighted residuals."""

    def __init__(self, trace, model, init, bounds, fixed):
        self.model = model
        self.times = trace.times
        self.values = trace.values
        self.sigma = trace.sigma

        names = model.parameter_names
        missing = [name for name in names if name not in init]
        if missing:
            raise InvalidArgumentException(f"No initial value for {', '.join(missing)}")
        unknown = [name for name in list(bounds) + list(fixed) if name not in names]
        if unknown:
            raise InvalidArgumentException(f"Unknown parameters {', '.join(unknown)}")

        self.fixed = {name: float(init[name]) for name in fixed}
        self.free = tuple(name for name in names if name not in self.fixed)
        if not self.free:
            raise InvalidArgumentException("All parameters are fixed")

        self.x0 = np.array([float(init[name]) for name in self.free])
        self.lower = np.array([bounds.get(name, (-np.inf, np.inf))[0] for name in self.free], dtype=float)
        self.upper = np.array([bounds.get(name, (-np.inf, np.inf))[1] for name in self.free], dtype=float)
        outside = [
            name
            for name, x, lo, hi in zip(self.free, self.x0, self.lower, self.upper)
            if not lo <= x <= hi
        ]
        if outside:
            raise InvalidArgumentException(
                f"Initial values outside their bounds: {', '.join(outside)}"
            )

    @property
    def bounded(self) -> bool:
        return bool(np.any(np.isfinite(self.lower)) or np.any(np.isfinite(self.upper)))

    def params(self, x) -> Dict[str, float]:
        params = dict(zip(self.free, (float(value) for value in x)))
        params.update(self.fixed)
        return params

    def residuals(self, x) -> np.ndarray:
        return (self.values - self.model.evaluate(self.times, self.params(x))) / self.sigma

    def chi2(self, x) -> float:
        r = self.residuals(x)
        return float(r @ r)

    def jitter(self, rng) -> np.ndarray:
        x = self.x0 * (1.0 + JITTER * rng.standard_normal(len(self.x0)))
        for index, name in enumerate(self.free):
            if name.endswith(".phi"):
                x[index] = self.x0[index] + PHASE_JITTER * rng.standard_normal()
            elif self.x0[index] == 0.0:
                x[index] = JITTER * rng.standard_normal()
        span = self.upper - self.lower
        margin = np.where(np.isfinite(span), 1e-9 * span, 0.0)
        return np.clip(x, self.lower + margin, self.upper - margin)


def fit_model(
    trace: AsymmetryTrace,
    model: ModelSpec,
    init: Mapping[str, float],
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    fixed: Iterable[str] = (),
    multistart: Optional[int] = None,
    seed: Optional[int] = None,
    backend: str = "scipy",
    max_nfev: int = DEFAULT_MAX_NFEV,
) -> FitReport:
    """
    Minimizes sum(((y - model) / sigma)^2) over the free parameters.

    :param multistart: number of extra jittered starts; by default 8 when the model
                       holds more than one oscillating component, else none
    :param backend: "scipy" (trust-region Gauss-Newton, Levenberg-Marquardt when
                    unbounded) or "minuit" (Migrad and Hesse)
    """
    if trace.sigma is None:
        raise InvalidArgumentException("Fits need per-point standard errors (sigma)")
    if np.any(~(trace.sigma > 0)):
        raise InvalidArgumentException("All sigma values must be positive")
    if backend not in BACKENDS:
        raise InvalidArgumentException(f"Unknown fit backend {backend!r}, expected one of {BACKENDS}")

    problem = _Problem(trace, model, init, dict(bounds or {}), tuple(fixed))
    dof = len(trace) - len(problem.free)
    if dof < 0:
        raise InvalidArgumentException(
            f"{len(problem.free)} free parameters cannot be fitted to {len(trace)} points"
        )

    if multistart is None:
        oscillating = sum(1 for component in model.components if component.kind is Kind.DAMPED_COSINE)
        multistart = DEFAULT_MULTISTART if oscillating > 1 else 0

    fit_once = _fit_minuit if backend == "minuit" else _fit_scipy
    report = fit_once(problem, problem.x0, dof, max_nfev)
    rng = np.random.default_rng(seed)
    for attempt in range(multistart):
        candidate = fit_once(problem, problem.jitter(rng), dof, max_nfev)
        debug(f"Multistart {attempt + 1}/{multistart}: chi2 = {candidate.chi2:.6g}")
        if candidate.chi2 < report.chi2 and (candidate.converged or not report.converged):
            report = candidate
    return report


def _fit_scipy(problem: _Problem, x0, dof, max_nfev) -> FitReport:
    method = "trf" if problem.bounded else "lm"
    result = least_squares(
        problem.residuals,
        x0=x0,
        bounds=(problem.lower, problem.upper),
        method=method,
        x_scale="jac",
        max_nfev=max_nfev,
        ftol=1e-12,
        xtol=1e-12,
        gtol=1e-12,
    )
    flags = []
    if result.status <= 0:
        flags.append("max_iterations")
    covariance, errors, singular = _curvature_errors(result.jac)
    if singular:
        flags.append("singular_curvature")
    if problem.bounded and np.any(result.active_mask != 0):
        flags.append("at_bound")

    return FitReport(
        names=problem.free,
        values=np.asarray(result.x, dtype=float),
        errors=errors,
        chi2=float(2.0 * result.cost),
        dof=dof,
        covariance=covariance,
        converged=result.status > 0,
        nfev=int(result.nfev),
        backend="scipy",
        fixed=dict(problem.fixed),
        flags=tuple(flags),
    )


def _fit_minuit(problem: _Problem, x0, dof, max_nfev) -> FitReport:
    from iminuit import Minuit

    m = Minuit(problem.chi2, np.asarray(x0, dtype=float), name=problem.free)
    m.errordef = Minuit.LEAST_SQUARES
    m.limits = [
        (None if math.isinf(lo) else lo, None if math.isinf(hi) else hi)
        for lo, hi in zip(problem.lower, problem.upper)
    ]
    m.migrad(ncall=max_nfev)
    m.hesse()

    flags = []
    if m.fmin.has_reached_call_limit:
        flags.append("max_iterations")
    if m.covariance is None or not m.fmin.has_accurate_covar:
        flags.append("singular_curvature")
        covariance = np.full((len(problem.free), len(problem.free)), np.nan)
        errors = np.full(len(problem.free), np.nan)
    else:
        covariance = np.array(m.covariance)
        errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    if m.fmin.has_parameters_at_limit:
        flags.append("at_bound")

    return FitReport(
        names=problem.free,
        values=np.array(m.values, dtype=float),
        errors=errors,
        chi2=float(m.fval),
        dof=dof,
        covariance=covariance,
        converged=bool(m.valid),
        nfev=int(m.nfcn),
        backend="minuit",
        fixed=dict(problem.fixed),
        flags=tuple(flags),
    )


def _curvature_errors(jac: np.ndarray):
    """:return: (covariance, 1σ errors, singular) from the Gauss-Newton curvature J^T J"""
    n = jac.shape[1]
    curvature = jac.T @ jac
    if np.linalg.matrix_rank(curvature) < n:
        return np.full((n, n), np.nan), np.full(n, np.nan), True
    try:
        covariance = scipy.linalg.inv(curvature)
    except scipy.linalg.LinAlgError:
        return np.full((n, n), np.nan), np.full(n, np.nan), True
    diagonal = np.diag(covariance)
    errors = np.where(diagonal >= 0, np.sqrt(np.abs(diagonal)), np.nan)
    return covariance, errors, bool(np.any(diagonal < 0))


def profile_interval(
    trace: AsymmetryTrace,
    model: ModelSpec,
    report: FitReport,
    name: str,
    delta_chi2: float = 1.0,
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    max_steps: int = 40,
) -> Tuple[float, float]:
    """
    Asymmetric interval of one parameter where the profiled χ² rises by delta_chi2
    above the minimum. The other free parameters are re-fitted at every trial value.

    :return: (lower, upper) offsets from the best value, both >= 0; inf where the
             profile never rises far enough
    """
    if name not in report.names:
        raise InvalidArgumentException(f"{name!r} is not a free parameter of this fit")
    best = report.value(name)
    first_step = 0.5 * report.error(name)
    if not math.isfinite(first_step) or first_step <= 0:
        first_step = max(abs(best) * 0.01, 1e-6)
    bounds = dict(bounds or {})
    limit = bounds.get(name, (-np.inf, np.inf))
    others = {key: (lo, hi) for key, (lo, hi) in bounds.items() if key != name}

    def excess(value):
        init = report.params
        init[name] = value
        fixed = set(report.fixed) | {name}
        if len(fixed) == len(model.parameter_names):
            chi2 = float(np.sum(((trace.values - model.evaluate(trace.times, init)) / trace.sigma) ** 2))
        else:
            chi2 = fit_model(trace, model, init, others, fixed, multistart=0).chi2
        return chi2 - report.chi2 - delta_chi2

    interval = []
    for direction in (-1.0, 1.0):
        inner, outer, step = best, best, first_step
        found = False
        for _ in range(max_steps):
            outer = outer + direction * step
            if not limit[0] <= outer <= limit[1]:
                break
            if excess(outer) > 0:
                found = True
                break
            inner = outer
            step *= 1.5
        if found:
            root = brentq(excess, inner, outer, xtol=1e-6 * max(abs(best), step))
            interval.append(abs(root - best))
        else:
            debug(f"Profile of {name} stays below delta chi2 = {delta_chi2} towards {direction:+.0f}")
            interval.append(math.inf)
    return interval[0], interval[1]


def model_trace(model: ModelSpec, params: Mapping[str, float], times: Sequence[float]) -> AsymmetryTrace:
    times = np.asarray(times, dtype=float)
    return AsymmetryTrace(times, model.evaluate(times, params))


class FitFailedException(Exception):
    pass
