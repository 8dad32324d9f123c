import math
from typing import List, NamedTuple, Sequence

from muondemur.spinsys.operators import InvalidArgumentException


class RabiAmplitudes(NamedTuple):
    A_osc: float
    A_static: float
    undefined: bool = False


class AmplitudePoint(NamedTuple):
    B0: float
    Omega: float
    A_osc: float
    A_static: float
    undefined: bool


def effective_rabi(nu1: float, Omega: float) -> float:
    """:return: effective two-level nutation frequency sqrt(nu1² + Omega²) in MHz"""
    return math.hypot(nu1, Omega)


def rabi_amplitudes(p34: float, p_sigma: float, nu1: float, Omega: float) -> RabiAmplitudes:
    """
    Oscillating and static polarization of a driven two-level subspace holding the
    partial polarization p34 out of a total p_sigma.
    """
    if not 0.0 <= p34 <= p_sigma <= 1.0:
        raise InvalidArgumentException(
            f"Expected 0 <= p34 <= p_sigma <= 1, got p34={p34!r}, p_sigma={p_sigma!r}"
        )
    nu_eff = effective_rabi(nu1, Omega)
    if nu_eff == 0:
        return RabiAmplitudes(A_osc=0.0, A_static=p_sigma, undefined=True)
    if math.isinf(nu_eff):
        return RabiAmplitudes(A_osc=0.0, A_static=p_sigma)

    A_osc = p34 * (1.0 - (Omega / nu_eff) ** 2)
    return RabiAmplitudes(A_osc=A_osc, A_static=p_sigma - A_osc)


def amplitude_overlay(
    B0_list: Sequence[float],
    Omega_list: Sequence[float],
    nu1: float,
    p34: float,
    p_sigma: float,
) -> List[AmplitudePoint]:
    """Analytic amplitudes along a field scan with the resonance offsets fitted per field."""
    if len(B0_list) != len(Omega_list):
        raise InvalidArgumentException("Fields and offsets must have the same length")

    points = []
    for B0, Omega in zip(B0_list, Omega_list):
        amplitudes = rabi_amplitudes(p34, p_sigma, nu1, Omega)
        points.append(
            AmplitudePoint(
                float(B0), float(Omega), amplitudes.A_osc, amplitudes.A_static, amplitudes.undefined
            )
        )
    return points

