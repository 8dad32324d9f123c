from logging import debug

import numpy as np

from muondemur.dynamics.histograms import DecayHistograms
from muondemur.dynamics.trace import AsymmetryTrace
from muondemur.spinsys.operators import InvalidArgumentException

MIN_BIN_COUNTS = 10


def asymmetry_from_histograms(
    histograms: DecayHistograms, alpha: float = None, min_counts: int = MIN_BIN_COUNTS
) -> AsymmetryTrace:
    """
    A = (N_B - alpha N_F) / (N_B + alpha N_F) with Poisson errors propagated per bin.

    Bins with fewer than min_counts counts in total, or with an empty detector, are
    dropped.
    """
    alpha = histograms.alpha if alpha is None else float(alpha)
    if not alpha > 0:
        raise InvalidArgumentException(f"alpha must be positive, got {alpha!r}")

    forward = np.asarray(histograms.forward, dtype=float)
    backward = np.asarray(histograms.backward, dtype=float)
    keep = (forward + backward >= min_counts) & (forward > 0) & (backward > 0)
    dropped = int(np.sum(~keep))
    if dropped:
        debug(f"Dropped {dropped} of {len(keep)} bins with too few counts")
    if not np.any(keep):
        raise InvalidArgumentException("No histogram bin holds enough counts for an asymmetry")

    n_f, n_b = forward[keep], backward[keep]
    total = n_b + alpha * n_f
    asymmetry = (n_b - alpha * n_f) / total
    variance = (2.0 * alpha * n_f / total ** 2) ** 2 * n_b + (2.0 * alpha * n_b / total ** 2) ** 2 * n_f
    return AsymmetryTrace(histograms.times[keep], asymmetry, np.sqrt(variance))


def rebin(trace: AsymmetryTrace, factor: int) -> AsymmetryTrace:
    """Coarser trace for plotting; fits keep using the raw grid."""
    return trace.rebin(factor)
