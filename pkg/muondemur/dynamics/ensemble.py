import enum
import math
from logging import debug
from typing import Callable, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.special import roots_hermite, roots_legendre

from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.operators import InvalidArgumentException

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


class B1Profile(str, enum.Enum):
    GAUSSIAN = "gaussian"
    SINUSOIDAL = "sinusoidal"


def gaussian_nodes(fwhm: float, n_points: int, center: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Hermite abscissae of a Gaussian distribution.

    :return: (nodes, weights) with weights summing to 1
    """
    _check_points(n_points)
    if not math.isfinite(fwhm) or fwhm < 0:
        raise InvalidArgumentException(f"FWHM must be finite and >= 0, got {fwhm!r}")
    if fwhm == 0:
        return np.array([float(center)]), np.array([1.0])

    roots, weights = roots_hermite(n_points)
    sigma = fwhm * FWHM_TO_SIGMA
    nodes = center + math.sqrt(2.0) * sigma * roots
    weights = weights / math.sqrt(math.pi)
    return nodes, weights / np.sum(weights)


def b1_profile_nodes(
    B1: float, profile="gaussian", spread: float = 0.0, n_points: int = 5
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Distribution of drive amplitudes around B1.

    :param spread: relative FWHM for the Gaussian profile; relative drop at the edge
                   for the sinusoidal profile B1 cos(a u), u uniform in [-1, 1]
    """
    _check_points(n_points)
    profile = B1Profile(profile)
    if not 0.0 <= spread < 1.0:
        raise InvalidArgumentException(f"B1 spread must lie in [0, 1), got {spread!r}")
    if spread == 0:
        return np.array([float(B1)]), np.array([1.0])

    if profile is B1Profile.GAUSSIAN:
        nodes, weights = gaussian_nodes(spread * B1, n_points, center=B1)
        return np.clip(nodes, 0.0, None), weights

    roots, weights = roots_legendre(n_points)
    a = math.acos(1.0 - spread)
    return B1 * np.cos(a * roots), weights / np.sum(weights)


def ensemble_average(
    simulate: Callable[[float], AsymmetryTrace],
    fwhm: float,
    n_points: int,
    center: float = 0.0,
    workers: int = 1,
) -> AsymmetryTrace:
    """
    Weighted average of simulate(offset) over a Gaussian distribution of resonance
    offsets in MHz. simulate must be picklable when workers > 1.
    """
    nodes, weights = gaussian_nodes(fwhm, n_points, center)
    return weighted_average(simulate, nodes, weights, workers)


def weighted_average(
    simulate: Callable[[float], AsymmetryTrace],
    nodes: np.ndarray,
    weights: np.ndarray,
    workers: int = 1,
) -> AsymmetryTrace:
    debug(f"Averaging over {len(nodes)} nodes with {workers} worker(s)")
    if workers == 1 or len(nodes) == 1:
        traces = [simulate(float(node)) for node in nodes]
    else:
        traces = Parallel(n_jobs=workers)(delayed(simulate)(float(node)) for node in nodes)

    times = traces[0].times
    for trace in traces[1:]:
        if trace.times.shape != times.shape or not np.allclose(trace.times, times):
            raise InvalidArgumentException("Ensemble members must share one time grid")

    values = np.sum([weight * trace.values for weight, trace in zip(weights, traces)], axis=0)
    return AsymmetryTrace(times, values)


def _check_points(n_points: int):
    if int(n_points) != n_points or n_points < 1 or n_points % 2 == 0:
        raise InvalidArgumentException(
            f"Number of quadrature points must be a positive odd integer, got {n_points!r}"
        )
