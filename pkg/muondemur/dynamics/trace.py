from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from muondemur.spinsys.operators import InvalidArgumentException


@dataclass(frozen=True)
class AsymmetryTrace:
    """
    Observable or asymmetry values on a time grid.

    times are in ns; sigma holds optional per-point standard errors.
    """

    times: np.ndarray
    values: np.ndarray
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if self.sigma is not None:
            object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))

        if times.ndim != 1 or values.shape != times.shape:
            raise InvalidArgumentException(
                "times and values must be one-dimensional and of equal length"
            )
        if self.sigma is not None and self.sigma.shape != times.shape:
            raise InvalidArgumentException("sigma must match the time grid")
        if len(times) > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgumentException("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def dt(self) -> float:
        if len(self.times) < 2:
            raise InvalidArgumentException("A single point has no time step")
        return float(self.times[1] - self.times[0])

    def is_uniform(self, rtol: float = 1e-6) -> bool:
        if len(self.times) < 3:
            return True
        steps = np.diff(self.times)
        return bool(np.all(np.abs(steps - steps[0]) <= rtol * abs(steps[0])))

    def window(self, t_from: float, t_to: float) -> "AsymmetryTrace":
        mask = (self.times >= t_from) & (self.times <= t_to)
        return AsymmetryTrace(
            self.times[mask],
            self.values[mask],
            None if self.sigma is None else self.sigma[mask],
        )

    def mean_in(self, t_from: float, t_to: float) -> Tuple[float, float]:
        """:return: (mean, standard error) of the values inside [t_from, t_to]"""
        part = self.window(t_from, t_to)
        if len(part) == 0:
            raise InvalidArgumentException(
                f"No samples between {t_from} ns and {t_to} ns"
            )
        if part.sigma is None:
            spread = np.std(part.values, ddof=1) if len(part) > 1 else 0.0
            return float(np.mean(part.values)), float(spread / np.sqrt(len(part)))
        weights = 1.0 / part.sigma ** 2
        mean = np.sum(weights * part.values) / np.sum(weights)
        return float(mean), float(1.0 / np.sqrt(np.sum(weights)))

    def with_sigma(self, sigma) -> "AsymmetryTrace":
        return AsymmetryTrace(self.times, self.values, np.broadcast_to(sigma, self.times.shape).copy())

    def scaled(self, factor: float) -> "AsymmetryTrace":
        return AsymmetryTrace(
            self.times,
            self.values * factor,
            None if self.sigma is None else self.sigma * abs(factor),
        )

    def rebin(self, factor: int) -> "AsymmetryTrace":
        """Averages groups of ``factor`` points. Meant for plotting, fits use the raw grid."""
        if factor < 1:
            raise InvalidArgumentException("Rebin factor must be at least 1")
        n = len(self.times) // factor * factor
        times = self.times[:n].reshape(-1, factor).mean(axis=1)
        if self.sigma is None:
            values = self.values[:n].reshape(-1, factor).mean(axis=1)
            return AsymmetryTrace(times, values)
        weights = 1.0 / self.sigma[:n].reshape(-1, factor) ** 2
        values = (self.values[:n].reshape(-1, factor) * weights).sum(axis=1) / weights.sum(axis=1)
        return AsymmetryTrace(times, values, 1.0 / np.sqrt(weights.sum(axis=1)))
