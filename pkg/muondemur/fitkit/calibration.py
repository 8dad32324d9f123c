"""
Monte-Carlo calibration of fit errors: synthesize Poisson histograms at a fixed
truth, fit each replicate and count how often the 1σ intervals cover the truth.
"""
import math
from dataclasses import dataclass
from functools import partial
from logging import debug
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from muondemur.dynamics.histograms import synth_decay_histograms
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.fitkit.asymmetry import asymmetry_from_histograms
from muondemur.fitkit.fit import fit_model, model_trace
from muondemur.fitkit.models import ModelSpec
from muondemur.spinsys.operators import InvalidArgumentException

# two-sided coverage of a Gaussian 1σ interval
NOMINAL_COVERAGE = math.erf(1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class Replicate:
    index: int
    values: Dict[str, float]
    errors: Dict[str, float]
    converged: bool

    @property
    def usable(self) -> bool:
        return self.converged and all(math.isfinite(error) and error > 0 for error in self.errors.values())

    def covers(self, name: str, truth: float, k: float = 1.0) -> bool:
        return abs(self.values[name] - truth) <= k * self.errors[name]

    def as_row(self, truth: Mapping[str, float]) -> dict:
        row = {"replicate": self.index, "converged": self.converged}
        for name, value in self.values.items():
            row[name] = value
            row[f"{name}.error"] = self.errors[name]
            row[f"{name}.covered"] = self.usable and self.covers(name, truth[name])
        return row


@dataclass(frozen=True)
class CoverageStudy:
    truth: Dict[str, float]
    replicates: Tuple[Replicate, ...]

    @property
    def usable(self) -> List[Replicate]:
        return [replicate for replicate in self.replicates if replicate.usable]

    def coverage(self, name: str, k: float = 1.0) -> float:
        """:return: fraction of usable replicates whose k-sigma interval holds the truth"""
        usable = self.usable
        if not usable:
            return math.nan
        return sum(1 for replicate in usable if replicate.covers(name, self.truth[name], k)) / len(usable)

    def pulls(self, name: str) -> np.ndarray:
        return np.array(
            [(replicate.values[name] - self.truth[name]) / replicate.errors[name] for replicate in self.usable]
        )

    def as_rows(self) -> List[dict]:
        return [replicate.as_row(self.truth) for replicate in self.replicates]

    def summary(self) -> dict:
        names = list(self.truth)
        return {
            "truth": dict(self.truth),
            "replicates": len(self.replicates),
            "usable": len(self.usable),
            "nominal": NOMINAL_COVERAGE,
            "coverage": {name: self.coverage(name) for name in names},
            "pull_mean": {name: float(np.mean(self.pulls(name))) if self.usable else math.nan for name in names},
            "pull_std": {name: float(np.std(self.pulls(name))) if self.usable else math.nan for name in names},
        }


def coverage_study(
    model: ModelSpec,
    truth: Mapping[str, float],
    times: Sequence[float],
    n_muons: float,
    replicates: int = 200,
    alpha: float = 1.0,
    A0_max: float = 0.25,
    bounds: Optional[Mapping[str, Tuple[float, float]]] = None,
    seed: Optional[int] = None,
    workers: int = 1,
) -> CoverageStudy:
    """
    :param truth: every free model parameter, amplitudes in asymmetry units; the
                  polarization behind the histograms is the model divided by A0_max
    :param seed: replicate i draws from the i-th child of SeedSequence(seed), so the
                 result does not depend on workers
    """
    if replicates < 1:
        raise InvalidArgumentException(f"A coverage study needs at least one replicate, got {replicates!r}")
    if not A0_max > 0:
        raise InvalidArgumentException(f"A0_max must be positive, got {A0_max!r}")
    missing = set(model.parameter_names) - set(truth)
    unknown = set(truth) - set(model.parameter_names)
    if missing or unknown:
        raise InvalidArgumentException(
            f"Truth must name exactly the model parameters; missing {sorted(missing)}, unknown {sorted(unknown)}"
        )

    truth = {name: float(truth[name]) for name in model.parameter_names}
    expected = model_trace(model, truth, times)
    polarization = expected.values / A0_max
    if np.max(np.abs(polarization)) > 1.0:
        raise InvalidArgumentException("The truth asks for a polarization beyond 1 at the given A0_max")

    source = AsymmetryTrace(expected.times, polarization)
    children = np.random.SeedSequence(seed).spawn(replicates)
    run = partial(
        _replicate,
        model=model,
        truth=truth,
        source=source,
        n_muons=n_muons,
        alpha=alpha,
        A0_max=A0_max,
        bounds=dict(bounds or {}),
    )
    if workers > 1:
        results = Parallel(n_jobs=workers)(delayed(run)(index, child) for index, child in enumerate(children))
    else:
        results = [run(index, child) for index, child in enumerate(children)]

    study = CoverageStudy(truth, tuple(results))
    debug(f"{len(study.usable)} of {replicates} replicates usable for coverage")
    return study


def _replicate(index, seed_sequence, model, truth, source, n_muons, alpha, A0_max, bounds) -> Replicate:
    rng = np.random.default_rng(seed_sequence)
    histograms = synth_decay_histograms(source, n_muons, alpha=alpha, A0_max=A0_max, rng=rng)
    trace = asymmetry_from_histograms(histograms)
    report = fit_model(trace, model, truth, bounds, multistart=0)
    return Replicate(
        index=index,
        values={name: report.value(name) for name in truth},
        errors={name: report.error(name) for name in truth},
        converged=report.converged,
    )
